use coherence_core::bloch::{evolve_strided, trajectory_csv, BlochState, DecoherenceRate, InternalField};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{default_seed, report, Context};
use crate::config::{embed, EMBED_PREFIX};
use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlochConfig {
    pub p0: [f64; 3],
    pub v: [f64; 3],
    pub d: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Keep every `stride`-th step.
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn one() -> usize {
    1
}

pub fn run(config: &BlochConfig, ctx: &Context) -> Result<(), CliError> {
    let [x, y, z] = config.p0;
    let p0 = BlochState::new(x, y, z)?;
    let field = InternalField::Constant(Vector3::from(config.v));
    let d = DecoherenceRate::new(config.d)?;
    let series = evolve_strided(p0, &field, d, config.t_end, config.dt, config.stride)?;
    let mut out = format!("{EMBED_PREFIX}{}\n", embed(config));
    out.push_str(&trajectory_csv(&series, true)?);
    report(&ctx.write("bloch.csv", &out)?);
    let last = series.last();
    println!("final p = ({:.6}, {:.6}, {:.6}), |p| = {:.6}", last.x(), last.y(), last.z(), last.norm());
    Ok(())
}
