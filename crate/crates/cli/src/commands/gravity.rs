use coherence_core::gravity::{
    galaxy_decoherence, impact_rate, is_small_coupling, small_delta_estimate, ImpactGeometry,
    DEFAULT_DECOHERENCE_THRESHOLD,
};
use coherence_core::series::csv_row;
use serde::{Deserialize, Serialize};

use super::{csv_with_config, default_seed, json_with_config, num, report, Context};
use crate::error::CliError;

pub const HEADER: [&str; 5] = ["delta_alpha", "l_max", "D_numeric", "D_estimate", "ratio"];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GravityConfig {
    #[serde(default = "unit")]
    pub flux: f64,
    #[serde(default = "default_l_max")]
    pub l_max: Vec<f64>,
    #[serde(default = "default_delta_alphas")]
    pub delta_alphas: Vec<f64>,
    #[serde(default)]
    pub b_min: f64,
    #[serde(default = "default_panels")]
    pub panels: usize,
    #[serde(default)]
    pub galaxy: Option<GalaxyConfig>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GalaxyConfig {
    pub delta_alpha: f64,
    pub b: f64,
    pub l_max: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn unit() -> f64 {
    1.0
}
fn default_l_max() -> Vec<f64> {
    vec![1.0]
}
fn default_delta_alphas() -> Vec<f64> {
    vec![1e-4, 2e-4, 5e-4, 1e-3]
}
fn default_panels() -> usize {
    256
}
fn default_threshold() -> f64 {
    DEFAULT_DECOHERENCE_THRESHOLD
}

#[derive(Serialize)]
struct Verdict {
    delta_phase_shift: f64,
    overlap_loss: f64,
    decohered: bool,
}

pub fn run(config: &GravityConfig, ctx: &Context) -> Result<(), CliError> {
    if config.delta_alphas.is_empty() || config.l_max.is_empty() {
        return Err(CliError::Usage("delta_alphas and l_max must not be empty".into()));
    }
    let mut out = csv_with_config(config, &HEADER);
    for &l in &config.l_max {
        let geom = ImpactGeometry::new(l, config.b_min, config.panels)?;
        for &da in &config.delta_alphas {
            if !is_small_coupling(da) {
                eprintln!("note: delta_alpha = {da} is outside the small-coupling regime of the estimate");
            }
            let numeric = impact_rate(config.flux, 0.0, da, &geom)?;
            let estimate = small_delta_estimate(config.flux, da, l);
            let ratio = if estimate != 0.0 { numeric / estimate } else { f64::NAN };
            out.push_str(&csv_row([num(da), num(l), num(numeric), num(estimate), num(ratio)]));
        }
    }
    report(&ctx.write("gravity.csv", &out)?);

    if let Some(g) = &config.galaxy {
        let v = galaxy_decoherence(g.delta_alpha, g.b, g.l_max, g.threshold)?;
        let verdict = Verdict { delta_phase_shift: v.delta_phase_shift, overlap_loss: v.overlap_loss, decohered: v.decohered };
        report(&ctx.write("gravity_galaxy.json", &json_with_config(config, &verdict))?);
        println!("galaxy passage decoheres: {}", v.decohered);
    }
    Ok(())
}
