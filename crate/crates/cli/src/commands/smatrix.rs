use coherence_core::smatrix::{
    decoherence_rate, energy_shift, scattering_rate, unitarity_deviation, verify_half_rate_limit, CMatrix, CVector,
    ScatteringPair,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{default_seed, json_with_config, report, Context};
use crate::error::CliError;

/// Complex matrix as rows of `[re, im]` pairs, or as one flat row-major
/// list of pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixInput {
    Rows(Vec<Vec<[f64; 2]>>),
    Flat(Vec<[f64; 2]>),
}

impl MatrixInput {
    fn to_matrix(&self, name: &str) -> Result<CMatrix, CliError> {
        let c = |p: &[f64; 2]| Complex64::new(p[0], p[1]);
        match self {
            MatrixInput::Rows(rows) => {
                let n = rows.len();
                if n == 0 || rows.iter().any(|r| r.len() != n) {
                    return Err(CliError::Usage(format!("{name} must be a non-empty square matrix")));
                }
                Ok(CMatrix::from_fn(n, n, |i, j| c(&rows[i][j])))
            }
            MatrixInput::Flat(entries) => {
                let n = (entries.len() as f64).sqrt().round() as usize;
                if n == 0 || n * n != entries.len() {
                    return Err(CliError::Usage(format!(
                        "{name} has {} entries, not a perfect square",
                        entries.len()
                    )));
                }
                Ok(CMatrix::from_fn(n, n, |i, j| c(&entries[i * n + j])))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmatrixConfig {
    pub s1: MatrixInput,
    pub s2: MatrixInput,
    pub incoming: Vec<[f64; 2]>,
    #[serde(default = "unit_flux")]
    pub flux: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn unit_flux() -> f64 {
    1.0
}

#[derive(Debug, Serialize)]
struct SmatrixResult {
    #[serde(rename = "D")]
    d: f64,
    energy_shift: f64,
    scattering_rate_1: f64,
    scattering_rate_2: f64,
    /// `D` with `S1 = 1` against half the state-2 scattering rate.
    half_rate_limit: HalfRate,
    unitarity_deviation_1: f64,
    unitarity_deviation_2: f64,
}

#[derive(Debug, Serialize)]
struct HalfRate {
    d: f64,
    half_rate: f64,
    difference: f64,
}

pub fn run(config: &SmatrixConfig, ctx: &Context) -> Result<(), CliError> {
    let s1 = config.s1.to_matrix("s1")?;
    let s2 = config.s2.to_matrix("s2")?;
    let incoming = CVector::from_iterator(config.incoming.len(), config.incoming.iter().map(|p| Complex64::new(p[0], p[1])));
    let pair = ScatteringPair::new(s1.clone(), s2.clone(), incoming.clone(), config.flux)?;
    let half = verify_half_rate_limit(&s2, &incoming, config.flux)?;
    let result = SmatrixResult {
        d: decoherence_rate(&pair),
        energy_shift: energy_shift(&pair),
        scattering_rate_1: scattering_rate(&s1, &incoming, config.flux)?,
        scattering_rate_2: scattering_rate(&s2, &incoming, config.flux)?,
        half_rate_limit: HalfRate { d: half.d, half_rate: half.half_rate, difference: half.difference },
        unitarity_deviation_1: unitarity_deviation(&s1),
        unitarity_deviation_2: unitarity_deviation(&s2),
    };
    report(&ctx.write("smatrix.json", &json_with_config(config, &result))?);
    println!("D = {:e}, energy shift = {:e}", result.d, result.energy_shift);
    Ok(())
}
