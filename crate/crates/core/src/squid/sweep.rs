//! Noisy flux sweeps in a truncated instantaneous eigenbasis.
//!
//! The grid Hamiltonian at `x_e` differs from the one at the reference
//! point `x_ref = 1/2` by a term linear in the flux coordinate:
//!
//! ```text
//! H(x_e) = H(x_ref) - (x_e - x_ref)/g * (x - x_ref) + const.
//! ```
//!
//! We therefore diagonalise the grid problem once at `x_ref`, keep a
//! Galerkin space of its lowest `M > n_levels` states, and obtain every
//! instantaneous basis by diagonalising an `M x M` matrix. The state of each
//! trajectory is a vector of amplitudes on the `n_levels` lowest
//! instantaneous states. One step of length `dt`:
//!
//! 1. re-express the amplitudes in the basis at the step midpoint (the
//!    overlap matrix is replaced by its nearest orthogonal matrix so the
//!    norm is untouched),
//! 2. half a step of free phase `exp(-i E dt/2)`,
//! 3. the noise kick `exp(i eta dt X / g)` with `eta = A xi / sqrt(dt)`,
//!    exact via the eigenvectors of the projected position operator,
//! 4. another half step of free phase.
//!
//! All trajectories advance in lockstep as the columns of two real
//! matrices, which turns every basis operation into a matrix product.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::potential::barrier_top;
use super::spectrum::{eigensystem, lowest_states, Grid};
use super::{NoiseModel, SquidParams, SweepProtocol};
use crate::error::{Error, Result};

/// Top-level population above which the truncation is flagged.
pub const TRUNCATION_THRESHOLD: f64 = 0.01;
/// Per-trajectory norm drift treated as an integrator failure.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;
/// Relative disagreement between Galerkin and grid energies at the sweep
/// endpoints above which the reduced basis is rejected.
pub const GALERKIN_TOLERANCE: f64 = 1e-6;

const REFERENCE_FLUX: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSettings {
    pub grid: Grid,
    /// Integrator step in units of `sqrt(LC)`; also the noise correlation
    /// time.
    pub dt: f64,
    /// Galerkin space size; `None` picks `max(2 n, n + 8)`.
    pub basis_size: Option<usize>,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self { grid: Grid::default(), dt: 1.0, basis_size: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub inversion_probability: f64,
    /// Standard error of the trajectory mean.
    pub uncertainty: f64,
    pub n_trajectories: usize,
    pub seed: u64,
    /// Largest ensemble-mean population of the highest kept level.
    pub max_top_level_population: f64,
    pub truncation_warning: bool,
    pub max_norm_drift: f64,
    pub per_trajectory: Vec<f64>,
}

/// Instantaneous eigenbasis expressed in the Galerkin space.
#[derive(Debug, Clone)]
pub(crate) struct Frame {
    pub energies: DVector<f64>,
    /// `M x n`, orthonormal columns.
    pub vectors: DMatrix<f64>,
}

/// Reusable simulator: the grid diagonalisation is done once in [`new`].
///
/// [`new`]: SquidSimulator::new
#[derive(Debug, Clone)]
pub struct SquidSimulator {
    params: SquidParams,
    settings: SimulationSettings,
    g: f64,
    basis_energies: DVector<f64>,
    /// `<j| x - x_ref |k>` on the Galerkin space.
    coupling: DMatrix<f64>,
    positions: Vec<f64>,
    spacing: f64,
    /// Galerkin states on the grid, `N x M`.
    states: DMatrix<f64>,
}

impl SquidSimulator {
    pub fn new(params: SquidParams, settings: SimulationSettings) -> Result<Self> {
        params.validate()?;
        if !(settings.dt > 0.0 && settings.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", settings.dt)));
        }
        let n = params.n_levels;
        let m = settings.basis_size.unwrap_or((2 * n).max(n + 8));
        if m < n {
            return Err(Error::InvalidParameter(format!("basis size {m} below n_levels {n}")));
        }
        // the kept levels must be grid-converged; the extra Galerkin states
        // only enrich the space
        eigensystem(REFERENCE_FLUX, &params, &settings.grid)?;
        let snap = lowest_states(REFERENCE_FLUX, &params, &settings.grid, m)?;
        let rows = snap.positions.len();
        let states = DMatrix::from_fn(rows, m, |i, k| snap.states[k][i]);
        let coupling = DMatrix::from_fn(m, m, |j, k| snap.position_element(j, k, REFERENCE_FLUX));
        Ok(Self {
            params,
            settings,
            g: params.g(),
            basis_energies: DVector::from_vec(snap.energies.clone()),
            coupling,
            positions: snap.positions,
            spacing: snap.spacing,
            states,
        })
    }

    pub fn reference(params: SquidParams) -> Result<Self> {
        Self::new(params, SimulationSettings::default())
    }

    pub fn params(&self) -> &SquidParams {
        &self.params
    }

    pub fn settings(&self) -> &SimulationSettings {
        &self.settings
    }

    /// Lowest `n_levels` energies at `x_e` from the reduced model, with the
    /// constant dropped from the Hamiltonian restored.
    pub fn energies_at(&self, x_e: f64) -> Vec<f64> {
        let shift = (x_e - REFERENCE_FLUX).powi(2) / (2.0 * self.g);
        self.frame(x_e, None).energies.iter().map(|e| e + shift).collect()
    }

    /// Tunnel splitting of the lowest doublet at the degeneracy point.
    pub fn tunnel_splitting(&self) -> f64 {
        let e = self.energies_at(REFERENCE_FLUX);
        e[1] - e[0]
    }

    /// `|<0| x |1>|` for the lowest doublet at the degeneracy point.
    pub fn doublet_dipole(&self) -> f64 {
        let f = self.frame(REFERENCE_FLUX, None);
        let x = f.vectors.transpose() * &self.coupling * &f.vectors;
        x[(0, 1)].abs()
    }

    fn galerkin_hamiltonian(&self, x_e: f64) -> DMatrix<f64> {
        let mut h = &self.coupling * (-(x_e - REFERENCE_FLUX) / self.g);
        for (k, e) in self.basis_energies.iter().enumerate() {
            h[(k, k)] += e;
        }
        h
    }

    /// Lowest `n_levels` eigenpairs of the reduced Hamiltonian. Columns are
    /// sign-aligned with `previous` when given, otherwise their largest
    /// component is made positive.
    pub(crate) fn frame(&self, x_e: f64, previous: Option<&DMatrix<f64>>) -> Frame {
        let n = self.params.n_levels;
        let eig = self.galerkin_hamiltonian(x_e).symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let m = self.basis_energies.len();
        let mut vectors = DMatrix::zeros(m, n);
        let mut energies = DVector::zeros(n);
        for (c, &src) in order.iter().take(n).enumerate() {
            energies[c] = eig.eigenvalues[src];
            let mut col = eig.eigenvectors.column(src).into_owned();
            let flip = match previous {
                Some(p) => p.column(c).dot(&col) < 0.0,
                None => {
                    let big = col.iter().cloned().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
                    big < 0.0
                }
            };
            if flip {
                col.neg_mut();
            }
            vectors.set_column(c, &col);
        }
        Frame { energies, vectors }
    }

    /// Projector onto `x > split` in the Galerkin space.
    pub(crate) fn right_projector(&self, split: f64) -> DMatrix<f64> {
        let first = self.positions.partition_point(|&x| x <= split);
        let rows = self.positions.len() - first;
        let block = self.states.rows(first, rows);
        block.transpose() * block * self.spacing
    }

    pub(crate) fn split_point(&self, x_e: f64) -> f64 {
        barrier_top(x_e, &self.params).unwrap_or(REFERENCE_FLUX)
    }

    /// Projected position operator in `frame`, `n x n`.
    pub(crate) fn frame_coupling(&self, frame: &Frame) -> DMatrix<f64> {
        frame.vectors.transpose() * &self.coupling * &frame.vectors
    }

    fn check_galerkin(&self, x_e: f64) -> Result<()> {
        let n = self.params.n_levels;
        let grid = lowest_states(x_e, &self.params, &self.settings.grid, n)?;
        for (k, (a, b)) in self.energies_at(x_e).iter().zip(&grid.energies).enumerate() {
            let rel = (a - b).abs() / b.abs();
            if rel > GALERKIN_TOLERANCE {
                return Err(Error::Resolution(format!(
                    "reduced basis misses level {k} at x_e = {x_e} by {rel:.2e}; \
                     enlarge basis_size or narrow the sweep"
                )));
            }
        }
        Ok(())
    }

    /// Runs `n_trajectories` noisy sweeps starting from the ground state at
    /// `protocol.x_start`; reports the probability of ending on the far side
    /// of the barrier.
    pub fn sweep(
        &self,
        protocol: &SweepProtocol,
        noise: &NoiseModel,
        n_trajectories: usize,
    ) -> Result<SweepOutcome> {
        if n_trajectories == 0 {
            return Err(Error::InvalidParameter("need at least one trajectory".into()));
        }
        self.check_galerkin(protocol.x_start)?;
        self.check_galerkin(protocol.x_end)?;

        let n_steps = (protocol.t_sweep / self.settings.dt).ceil().max(1.0) as usize;
        let chunks = chunk_ranges(n_trajectories, rayon::current_num_threads());
        let results: Vec<Result<ChunkResult>> = chunks
            .par_iter()
            .map(|range| self.run_chunk(protocol, noise, range.clone(), n_steps))
            .collect();

        let mut probs = Vec::with_capacity(n_trajectories);
        let mut top = vec![0.0; n_steps];
        let mut drift: f64 = 0.0;
        for r in results {
            let r = r?;
            probs.extend(r.reversed);
            for (a, b) in top.iter_mut().zip(&r.top_sum) {
                *a += b;
            }
            drift = drift.max(r.max_norm_drift);
        }
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::Integrator(format!("norm drifted by {drift:.2e}")));
        }
        let max_top = top.iter().cloned().fold(0.0, f64::max) / n_trajectories as f64;
        let (mean, sem) = mean_and_sem(&probs);
        Ok(SweepOutcome {
            inversion_probability: mean,
            uncertainty: sem,
            n_trajectories,
            seed: noise.seed,
            max_top_level_population: max_top,
            truncation_warning: max_top > TRUNCATION_THRESHOLD,
            max_norm_drift: drift,
            per_trajectory: probs,
        })
    }

    fn run_chunk(
        &self,
        protocol: &SweepProtocol,
        noise: &NoiseModel,
        range: std::ops::Range<usize>,
        n_steps: usize,
    ) -> Result<ChunkResult> {
        let n = self.params.n_levels;
        let h = protocol.t_sweep / n_steps as f64;
        let mut rngs = trajectory_rngs(noise.seed, range.clone());
        let mut ens = Ensemble::ground(n, range.len());
        let mut prev = self.frame(protocol.x_start, None);
        let start = prev.clone();
        let mut top_sum = Vec::with_capacity(n_steps);
        let mut eta = vec![0.0; range.len()];

        for k in 0..n_steps {
            let x_mid = protocol.flux_at((k as f64 + 0.5) * h);
            let cur = self.frame(x_mid, Some(&prev.vectors));
            ens.apply(&transfer(&prev, &cur)?);
            ens.phase(&cur.energies, -0.5 * h);
            if noise.amplitude > 0.0 {
                let x = self.frame_coupling(&cur);
                let kick = x.symmetric_eigen();
                let scale = noise.amplitude * h.sqrt() / self.g;
                for (e, rng) in eta.iter_mut().zip(rngs.iter_mut()) {
                    let xi: f64 = rng.sample(StandardNormal);
                    *e = scale * xi;
                }
                ens.kick(&kick.eigenvectors, &kick.eigenvalues, &eta);
            }
            ens.phase(&cur.energies, -0.5 * h);
            top_sum.push(ens.population_sum(n - 1));
            prev = cur;
        }
        let end = self.frame(protocol.x_end, Some(&prev.vectors));
        ens.apply(&transfer(&prev, &end)?);

        let b_start = self.right_projector(self.split_point(protocol.x_start));
        let g0 = start.vectors.column(0);
        let started_right = (b_start * g0).dot(&g0) > 0.5;

        let b_end = self.right_projector(self.split_point(protocol.x_end));
        let right = ens.expectation(&end.vectors, &b_end);
        let reversed = right.into_iter().map(|r| if started_right { 1.0 - r } else { r }).collect();
        Ok(ChunkResult { reversed, top_sum, max_norm_drift: ens.max_norm_drift() })
    }
}

/// Convenience wrapper building a [`SquidSimulator`] with default settings.
pub fn adiabatic_sweep(
    params: &SquidParams,
    protocol: &SweepProtocol,
    noise: &NoiseModel,
    n_trajectories: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let sim = SquidSimulator::reference(*params)?;
    let noise = NoiseModel { seed, ..*noise };
    let out = sim.sweep(protocol, &noise, n_trajectories)?;
    Ok((out.inversion_probability, out.uncertainty))
}

struct ChunkResult {
    reversed: Vec<f64>,
    top_sum: Vec<f64>,
    max_norm_drift: f64,
}

pub(crate) fn chunk_ranges(total: usize, parts: usize) -> Vec<std::ops::Range<usize>> {
    let parts = parts.clamp(1, total.max(1));
    let base = total / parts;
    let extra = total % parts;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for p in 0..parts {
        let len = base + usize::from(p < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// One independent stream per trajectory, so results do not depend on how
/// trajectories are split across threads.
pub(crate) fn trajectory_rngs(seed: u64, range: std::ops::Range<usize>) -> Vec<ChaCha8Rng> {
    range
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            rng
        })
        .collect()
}

pub(crate) fn mean_and_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Nearest orthogonal matrix to the overlap `<prev_i|cur_j>`, transposed so
/// that it maps amplitudes in `prev` to amplitudes in `cur`.
pub(crate) fn transfer(prev: &Frame, cur: &Frame) -> Result<DMatrix<f64>> {
    let overlap = prev.vectors.transpose() * &cur.vectors;
    let svd = overlap.svd(true, true);
    let smallest = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if smallest < 0.5 {
        return Err(Error::Integrator(format!(
            "instantaneous basis rotates too far within one step (overlap {smallest:.3}); reduce dt"
        )));
    }
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::Integrator("SVD of the basis overlap failed".into()));
    };
    Ok((u * v_t).transpose())
}

/// Amplitudes of many trajectories, one per column, split into real and
/// imaginary parts.
#[derive(Debug, Clone)]
pub(crate) struct Ensemble {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl Ensemble {
    pub fn ground(levels: usize, trajectories: usize) -> Self {
        let mut re = DMatrix::zeros(levels, trajectories);
        re.row_mut(0).fill(1.0);
        Self { re, im: DMatrix::zeros(levels, trajectories) }
    }

    pub fn from_state(state: &DVector<f64>, trajectories: usize) -> Self {
        let re = DMatrix::from_fn(state.len(), trajectories, |i, _| state[i]);
        Self { re, im: DMatrix::zeros(state.len(), trajectories) }
    }

    pub fn apply(&mut self, m: &DMatrix<f64>) {
        self.re = m * &self.re;
        self.im = m * &self.im;
    }

    /// Multiplies level `i` by `exp(i energies[i] * factor)`.
    pub fn phase(&mut self, energies: &DVector<f64>, factor: f64) {
        for (i, e) in energies.iter().enumerate() {
            let (s, c) = (e * factor).sin_cos();
            rotate_row(&mut self.re, &mut self.im, i, |_| (c, s));
        }
    }

    /// `exp(i w_j X)` on column `j`, with `X = Q diag(lambda) Q^T`.
    pub fn kick(&mut self, q: &DMatrix<f64>, lambda: &DVector<f64>, w: &[f64]) {
        let qt = q.transpose();
        let mut re = &qt * &self.re;
        let mut im = &qt * &self.im;
        for (i, l) in lambda.iter().enumerate() {
            rotate_row(&mut re, &mut im, i, |j| {
                let (s, c) = (l * w[j]).sin_cos();
                (c, s)
            });
        }
        self.re = q * re;
        self.im = q * im;
    }

    pub fn population_sum(&self, level: usize) -> f64 {
        self.re.row(level).iter().zip(self.im.row(level).iter()).map(|(a, b)| a * a + b * b).sum()
    }

    /// `<psi_j| V^T B V |psi_j>` for every trajectory.
    pub fn expectation(&self, v: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
        let op = v.transpose() * b * v;
        let ore = &op * &self.re;
        let oim = &op * &self.im;
        (0..self.re.ncols())
            .map(|j| self.re.column(j).dot(&ore.column(j)) + self.im.column(j).dot(&oim.column(j)))
            .collect()
    }

    pub fn max_norm_drift(&self) -> f64 {
        (0..self.re.ncols())
            .map(|j| {
                let n2 = self.re.column(j).norm_squared() + self.im.column(j).norm_squared();
                (n2.sqrt() - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn rotate_row(re: &mut DMatrix<f64>, im: &mut DMatrix<f64>, row: usize, cs: impl Fn(usize) -> (f64, f64)) {
    for j in 0..re.ncols() {
        let (c, s) = cs(j);
        let (a, b) = (re[(row, j)], im[(row, j)]);
        re[(row, j)] = a * c - b * s;
        im[(row, j)] = a * s + b * c;
    }
}
