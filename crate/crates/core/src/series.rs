//! Uniformly sampled trajectories.

use crate::error::{Error, Result};

/// Significant digits written for every floating point CSV field.
pub const CSV_SIGNIFICANT_DIGITS: usize = 15;

/// A uniformly sampled record `t0, t0 + dt, t0 + 2 dt, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    t0: f64,
    dt: f64,
    samples: Vec<T>,
    labels: Vec<String>,
}

impl<T> TimeSeries<T> {
    pub fn new(t0: f64, dt: f64, samples: Vec<T>, labels: Vec<String>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("sample spacing must be positive, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidParameter("t0 must be finite".into()));
        }
        if samples.is_empty() {
            return Err(Error::InvalidParameter("a time series needs at least one sample".into()));
        }
        Ok(Self { t0, dt, samples, labels })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn time(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.dt
    }

    pub fn last(&self) -> &T {
        // non-empty by construction
        self.samples.last().unwrap()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &T)> + '_ {
        self.samples.iter().enumerate().map(move |(i, s)| (self.time(i), s))
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> TimeSeries<U> {
        TimeSeries {
            t0: self.t0,
            dt: self.dt,
            samples: self.samples.iter().map(f).collect(),
            labels: self.labels.clone(),
        }
    }
}

/// Formats `x` in plain decimal notation (no exponent) with at least
/// [`CSV_SIGNIFICANT_DIGITS`] significant digits.
pub fn fmt_decimal(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (CSV_SIGNIFICANT_DIGITS as i64 - 1 - magnitude).clamp(0, 400) as usize;
    format!("{:.*}", decimals, x)
}

/// Joins already formatted fields into one CSV row.
pub fn csv_row<I, S>(fields: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut row = String::new();
    for (i, f) in fields.into_iter().enumerate() {
        if i > 0 {
            row.push(',');
        }
        row.push_str(f.as_ref());
    }
    row.push('\n');
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_spacing_and_empty() {
        assert!(TimeSeries::new(0.0, 0.0, vec![1.0], vec![]).is_err());
        assert!(TimeSeries::new(0.0, -1.0, vec![1.0], vec![]).is_err());
        assert!(TimeSeries::<f64>::new(0.0, 1.0, vec![], vec![]).is_err());
    }

    #[test]
    fn uniform_times() {
        let s = TimeSeries::new(1.0, 0.5, vec![0, 1, 2], vec!["n".into()]).unwrap();
        let t: Vec<f64> = s.iter().map(|(t, _)| t).collect();
        assert_eq!(t, vec![1.0, 1.5, 2.0]);
        assert_eq!(s.map(|v| v * 2).samples(), &[0, 2, 4]);
    }

    #[test]
    fn decimal_format_keeps_precision_without_exponent() {
        for &x in &[0.1, 1.0 / 3.0, -2.5e-7, 123456.789012345, 6.02e23, 1e-30] {
            let s = fmt_decimal(x);
            assert!(!s.contains('e'), "{s}");
            let back: f64 = s.parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-14, "{x} -> {s}");
        }
        assert_eq!(fmt_decimal(0.0), "0");
        assert_eq!(fmt_decimal(0.5), "0.500000000000000");
        assert_eq!(fmt_decimal(-12.0), "-12.0000000000000");
        assert_eq!(fmt_decimal(-0.0), "0");
    }
}
