use std::f64::consts::PI;

use super::SquidParams;

/// `u(x) = (x - x_e)^2 / (2g) - beta / (4 pi^2 g) cos(2 pi x)`.
pub fn potential(x: f64, x_e: f64, params: &SquidParams) -> f64 {
    let g = params.g();
    (x - x_e).powi(2) / (2.0 * g) - params.beta / (4.0 * PI * PI * g) * (2.0 * PI * x).cos()
}

pub fn potential_derivative(x: f64, x_e: f64, params: &SquidParams) -> f64 {
    let g = params.g();
    (x - x_e) / g + params.beta / (2.0 * PI * g) * (2.0 * PI * x).sin()
}

/// Local extrema of `u` on an interval, each sorted by position.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPoints {
    pub minima: Vec<f64>,
    pub maxima: Vec<f64>,
}

/// Locates the zeros of `u'` on `[lo, hi]` by a sign scan followed by
/// bisection.
pub fn stationary_points(x_e: f64, params: &SquidParams, lo: f64, hi: f64) -> StationaryPoints {
    const SCAN: usize = 20_000;
    let du = |x: f64| potential_derivative(x, x_e, params);
    let mut minima = Vec::new();
    let mut maxima = Vec::new();
    let step = (hi - lo) / SCAN as f64;
    let mut a = lo;
    let mut fa = du(a);
    for i in 1..=SCAN {
        let b = lo + i as f64 * step;
        let fb = du(b);
        if fa == 0.0 || fa.signum() != fb.signum() && fb != 0.0 {
            let rising = fb > fa;
            let (mut l, mut r) = (a, b);
            for _ in 0..80 {
                let m = 0.5 * (l + r);
                if (du(m) > 0.0) == rising {
                    r = m;
                } else {
                    l = m;
                }
            }
            let root = 0.5 * (l + r);
            if rising {
                minima.push(root);
            } else {
                maxima.push(root);
            }
        }
        a = b;
        fa = fb;
    }
    StationaryPoints { minima, maxima }
}

/// Position of the barrier separating the two deepest wells within one flux
/// quantum of `x_e`, or `None` when the potential has a single well there.
pub fn barrier_top(x_e: f64, params: &SquidParams) -> Option<f64> {
    let sp = stationary_points(x_e, params, x_e - 1.0, x_e + 1.0);
    if sp.minima.len() < 2 {
        return None;
    }
    let mut wells = sp.minima.clone();
    wells.sort_by(|a, b| {
        potential(*a, x_e, params).total_cmp(&potential(*b, x_e, params))
    });
    let (l, r) = if wells[0] < wells[1] { (wells[0], wells[1]) } else { (wells[1], wells[0]) };
    sp.maxima
        .into_iter()
        .filter(|&m| m > l && m < r)
        .max_by(|a, b| potential(*a, x_e, params).total_cmp(&potential(*b, x_e, params)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn symmetric_double_well() {
        let p = SquidParams::reference();
        let sp = stationary_points(0.5, &p, 0.0, 1.0);
        assert_eq!(sp.minima.len(), 2);
        assert_eq!(sp.maxima.len(), 1);
        assert_abs_diff_eq!(sp.maxima[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sp.minima[0] + sp.minima[1], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(barrier_top(0.5, &p).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn mirror_symmetry() {
        let p = SquidParams::reference();
        for &x in &[0.1, 0.33, 0.47] {
            assert_abs_diff_eq!(
                potential(x, 0.5, &p),
                potential(1.0 - x, 0.5, &p),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn derivative_matches_difference() {
        let p = SquidParams::reference();
        let h = 1e-6;
        for &x in &[0.2, 0.5, 0.71] {
            let fd = (potential(x + h, 0.48, &p) - potential(x - h, 0.48, &p)) / (2.0 * h);
            assert!((fd - potential_derivative(x, 0.48, &p)).abs() < 1e-3);
        }
    }

    #[test]
    fn single_well_far_from_degeneracy() {
        let p = SquidParams::reference();
        assert!(barrier_top(0.0, &p).is_none());
    }
}
