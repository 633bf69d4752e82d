use coherence_core::series::csv_row;
use coherence_core::zeno::scan;
use serde::{Deserialize, Serialize};

use super::{csv_with_config, default_seed, num, report, Context};
use crate::error::CliError;

pub const HEADER: [&str; 6] = ["D", "V", "fitted_rate", "predicted_rate", "exact_rate", "residual"];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZenoConfig {
    pub v: f64,
    pub d_values: Vec<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

/// One row per `D`. `residual` is the relative deviation of the fitted rate
/// from `V^2/D`; rows without a single decay rate carry their status in the
/// fitted, exact and residual cells.
pub fn run(config: &ZenoConfig, ctx: &Context) -> Result<(), CliError> {
    if config.d_values.is_empty() {
        return Err(CliError::Usage("d_values must not be empty".into()));
    }
    let rows = scan(config.v, &config.d_values)?;
    let mut out = csv_with_config(config, &HEADER);
    let opt = |x: Option<f64>, flag: &str| x.map(num).unwrap_or_else(|| flag.to_string());
    for row in &rows {
        let flag = row.status.as_str();
        out.push_str(&csv_row([
            num(row.d),
            num(row.v),
            opt(row.fitted.map(|f| f.rate), flag),
            opt(row.predicted_rate, "nan"),
            opt(row.exact_rate, flag),
            opt(row.relative_error(), flag),
        ]));
    }
    report(&ctx.write("zeno.csv", &out)?);
    Ok(())
}
