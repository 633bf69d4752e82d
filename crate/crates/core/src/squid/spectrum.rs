//! Finite-difference spectrum of the flux Hamiltonian.
//!
//! The second-order stencil on a uniform grid with Dirichlet ends gives a
//! symmetric tridiagonal matrix. Eigenvalues come from Sturm-sequence
//! bisection, eigenvectors from inverse iteration, so only the handful of
//! requested states is ever computed.

use serde::{Deserialize, Serialize};

use super::potential::{potential, stationary_points};
use super::SquidParams;
use crate::error::{Error, Result};

/// Relative energy change allowed when the grid is refined twofold.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-6;

const ORTHONORMALITY_TOLERANCE: f64 = 1e-8;

/// Interior grid points of `[x_min, x_max]`; the wavefunction vanishes at
/// both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self { x_min: 0.05, x_max: 0.95, points: 8192 }
    }
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, points: usize) -> Result<Self> {
        if !(x_max > x_min) || points < 16 {
            return Err(Error::InvalidParameter(format!(
                "grid [{x_min}, {x_max}] with {points} points is degenerate"
            )));
        }
        Ok(Self { x_min, x_max, points })
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.points + 1) as f64
    }

    pub fn positions(&self) -> Vec<f64> {
        let h = self.spacing();
        (1..=self.points).map(|i| self.x_min + i as f64 * h).collect()
    }

    /// Same interval, twice as fine.
    pub fn refined(&self) -> Self {
        Self { points: 2 * self.points + 1, ..*self }
    }
}

/// Lowest eigenpairs at one value of the external flux.
#[derive(Debug, Clone)]
pub struct SpectrumSnapshot {
    pub x_e: f64,
    /// Ascending.
    pub energies: Vec<f64>,
    pub positions: Vec<f64>,
    pub spacing: f64,
    /// `states[k][i]` is level `k` at `positions[i]`, normalised so that
    /// `sum |psi|^2 * spacing = 1`.
    pub states: Vec<Vec<f64>>,
}

impl SpectrumSnapshot {
    pub fn overlap(&self, j: usize, k: usize) -> f64 {
        dot(&self.states[j], &self.states[k]) * self.spacing
    }

    /// Largest deviation of the overlap matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.states.len();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in 0..=j {
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((self.overlap(j, k) - target).abs());
            }
        }
        worst
    }

    /// Probability of level `k` at `x > split`.
    pub fn weight_right_of(&self, k: usize, split: f64) -> f64 {
        self.positions
            .iter()
            .zip(&self.states[k])
            .filter(|(x, _)| **x > split)
            .map(|(_, v)| v * v)
            .sum::<f64>()
            * self.spacing
    }

    /// `<j| x - origin |k>`.
    pub fn position_element(&self, j: usize, k: usize, origin: f64) -> f64 {
        self.positions
            .iter()
            .zip(self.states[j].iter().zip(&self.states[k]))
            .map(|(x, (a, b))| (x - origin) * a * b)
            .sum::<f64>()
            * self.spacing
    }
}

/// The `count` lowest states on `grid`, without a convergence check.
pub fn lowest_states(x_e: f64, params: &SquidParams, grid: &Grid, count: usize) -> Result<SpectrumSnapshot> {
    if count == 0 || count > grid.points {
        return Err(Error::InvalidParameter(format!("cannot compute {count} states on {} points", grid.points)));
    }
    let positions = grid.positions();
    let h = grid.spacing();
    let g = params.g();
    let off = -g / (2.0 * h * h);
    let diag: Vec<f64> = positions.iter().map(|&x| g / (h * h) + potential(x, x_e, params)).collect();
    let t = Tridiagonal { diag: &diag, off };

    let energies = t.lowest_eigenvalues(count);
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(count);
    for &e in &energies {
        let mut v = t.inverse_iteration(e);
        // removes the small admixture of close neighbours
        for prev in &states {
            let c = dot(&v, prev);
            for (a, b) in v.iter_mut().zip(prev) {
                *a -= c * b;
            }
        }
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        // sign convention: positive at the largest component
        let idx = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if v[idx] < 0.0 {
            v.iter_mut().for_each(|a| *a = -*a);
        }
        states.push(v);
    }
    let scale = 1.0 / h.sqrt();
    for s in &mut states {
        s.iter_mut().for_each(|a| *a *= scale);
    }
    Ok(SpectrumSnapshot { x_e, energies, positions, spacing: h, states })
}

/// The `params.n_levels` lowest states, checked for grid convergence and
/// orthonormality.
///
/// Fails with [`Error::Resolution`] when the grid misses a well or when
/// halving the spacing moves any energy by more than
/// [`CONVERGENCE_TOLERANCE`] relative to its magnitude.
pub fn eigensystem(x_e: f64, params: &SquidParams, grid: &Grid) -> Result<SpectrumSnapshot> {
    params.validate()?;
    let n = params.n_levels;
    let sp = stationary_points(x_e, params, x_e - 1.0, x_e + 1.0);
    let margin = 0.02;
    for &m in &sp.minima {
        let depth_ok = potential(m, x_e, params) < potential(grid.x_min, x_e, params)
            && potential(m, x_e, params) < potential(grid.x_max, x_e, params);
        if depth_ok && (m < grid.x_min + margin || m > grid.x_max - margin) {
            return Err(Error::Resolution(format!(
                "well at x = {m:.4} is not covered by the grid [{}, {}]",
                grid.x_min, grid.x_max
            )));
        }
    }
    let coarse = lowest_states(x_e, params, grid, n)?;
    let fine = lowest_states(x_e, params, &grid.refined(), n)?;
    for (k, (a, b)) in coarse.energies.iter().zip(&fine.energies).enumerate() {
        let rel = (a - b).abs() / b.abs().max(1e-300);
        if rel > CONVERGENCE_TOLERANCE {
            return Err(Error::Resolution(format!(
                "level {k} moves by {rel:.2e} (relative) on grid refinement; use more points"
            )));
        }
    }
    let err = coarse.orthonormality_error();
    if err > ORTHONORMALITY_TOLERANCE {
        return Err(Error::Resolution(format!("eigenvectors orthonormal only to {err:.2e}")));
    }
    Ok(coarse)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Symmetric tridiagonal matrix with a constant off-diagonal.
struct Tridiagonal<'a> {
    diag: &'a [f64],
    off: f64,
}

impl Tridiagonal<'_> {
    /// Number of eigenvalues below `lambda`.
    fn count_below(&self, lambda: f64) -> usize {
        let b2 = self.off * self.off;
        let tiny = f64::MIN_POSITIVE.sqrt() * (1.0 + self.off.abs());
        let mut count = 0;
        let mut q = 1.0;
        for (i, &a) in self.diag.iter().enumerate() {
            q = if i == 0 { a - lambda } else { a - lambda - b2 / q };
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let r = 2.0 * self.off.abs();
        let lo = self.diag.iter().cloned().fold(f64::INFINITY, f64::min) - r;
        let hi = self.diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + r;
        (lo, hi)
    }

    fn lowest_eigenvalues(&self, count: usize) -> Vec<f64> {
        let (glo, ghi) = self.gershgorin();
        let mut out = Vec::with_capacity(count);
        let mut lower = glo;
        for k in 0..count {
            // k-th eigenvalue: smallest lambda with count_below(lambda) > k
            let (mut lo, mut hi) = (lower, ghi);
            // tighten the upper bound quickly
            let mut step = (ghi - glo).abs().max(1.0) * 1e-6;
            loop {
                let probe = lower + step;
                if probe >= ghi {
                    break;
                }
                if self.count_below(probe) > k {
                    hi = probe;
                    break;
                }
                lo = probe;
                step *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.count_below(mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let e = 0.5 * (lo + hi);
            out.push(e);
            lower = lo;
        }
        out
    }

    /// Eigenvector for an (accurately known) eigenvalue.
    fn inverse_iteration(&self, lambda: f64) -> Vec<f64> {
        let n = self.diag.len();
        let lu = TridiagonalLu::factor(self, lambda);
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 101) as f64 / 101.0).collect();
        for _ in 0..3 {
            lu.solve(&mut v);
            let norm = dot(&v, &v).sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
        }
        v
    }
}

/// Gaussian elimination with partial pivoting of `T - lambda`.
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(t: &Tridiagonal<'_>, lambda: f64) -> Self {
        let n = t.diag.len();
        let mut d: Vec<f64> = t.diag.iter().map(|a| a - lambda).collect();
        let mut dl = vec![t.off; n.saturating_sub(1)];
        let mut du = vec![t.off; n.saturating_sub(1)];
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        // an exactly singular pivot is what inverse iteration wants; keep it
        // finite
        let floor = f64::EPSILON * (t.off.abs() + t.diag.iter().fold(0.0f64, |m, a| m.max(a.abs())));
        for x in &mut d {
            if x.abs() < floor {
                *x = if *x < 0.0 { -floor } else { floor };
            }
        }
        Self { dl, d, du, du2, swapped }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n >= 2 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sturm_count_matches_dense_solver() {
        let diag = [2.0, -1.0, 0.5, 3.0, 1.0, -2.0];
        let off = 0.7;
        let t = Tridiagonal { diag: &diag, off };
        let m = nalgebra::DMatrix::from_fn(6, 6, |i, j| {
            if i == j {
                diag[i]
            } else if i.abs_diff(j) == 1 {
                off
            } else {
                0.0
            }
        });
        let mut dense: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().cloned().collect();
        dense.sort_by(f64::total_cmp);
        let ours = t.lowest_eigenvalues(6);
        for (a, b) in ours.iter().zip(&dense) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let v = t.inverse_iteration(ours[2]);
        let mv = &m * nalgebra::DVector::from_column_slice(&v);
        for (x, y) in mv.iter().zip(&v) {
            assert_abs_diff_eq!(*x, ours[2] * y, epsilon = 1e-10);
        }
    }

    #[test]
    fn harmonic_limit() {
        // beta -> 0 leaves an oscillator with level spacing exactly 1
        let p = SquidParams::unchecked(1e-12, 400e-12, 0.1e-12, 4);
        let grid = Grid::new(0.2, 0.8, 4000).unwrap();
        let s = lowest_states(0.5, &p, &grid, 4).unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!(s.energies[k], k as f64 + 0.5, epsilon = 1e-4);
        }
    }

    #[test]
    fn reference_doublet() {
        let p = SquidParams::reference().with_levels(6);
        let s = eigensystem(0.5, &p, &Grid::default()).unwrap();
        for w in s.energies.windows(2) {
            assert!(w[1] > w[0]);
        }
        let splitting = s.energies[1] - s.energies[0];
        assert!((splitting - 4.4866e-3).abs() < 2e-6, "{splitting}");
        assert!(s.orthonormality_error() < 1e-8);
        // symmetric / antisymmetric pair, each half in either well
        assert_abs_diff_eq!(s.weight_right_of(0, 0.5), 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(s.weight_right_of(1, 0.5), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn uncovered_well_is_rejected() {
        let p = SquidParams::reference();
        let grid = Grid::new(0.3, 0.7, 1024).unwrap();
        assert!(matches!(eigensystem(0.5, &p, &grid), Err(Error::Resolution(_))));
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let p = SquidParams::reference();
        let grid = Grid::new(0.05, 0.95, 64).unwrap();
        assert!(matches!(eigensystem(0.5, &p, &grid), Err(Error::Resolution(_))));
    }
}
