pub mod bloch;
pub mod gravity;
pub mod smatrix;
pub mod squid;
pub mod zeno;

use std::path::{Path, PathBuf};

use coherence_core::series::{csv_row, fmt_decimal};

use crate::config::{embed, EMBED_PREFIX};
use crate::error::CliError;

/// Settings shared by all subcommands that do not belong in a run
/// configuration.
pub struct Context {
    pub out_dir: PathBuf,
}

impl Context {
    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents)?;
        Ok(path)
    }
}

/// CSV document starting with the embedded configuration line.
pub fn csv_with_config<T: serde::Serialize>(config: &T, header: &[&str]) -> String {
    let mut out = format!("{EMBED_PREFIX}{}\n", embed(config));
    out.push_str(&csv_row(header));
    out
}

pub fn num(x: f64) -> String {
    fmt_decimal(x)
}

pub fn report(path: &Path) {
    println!("wrote {}", path.display());
}

/// Pretty JSON with `config` as the first member.
pub fn json_with_config<T: serde::Serialize, R: serde::Serialize>(config: &T, result: &R) -> String {
    #[derive(serde::Serialize)]
    struct Doc<'a, T, R> {
        config: &'a T,
        #[serde(flatten)]
        result: &'a R,
    }
    let mut s = serde_json::to_string_pretty(&Doc { config, result }).expect("output serializes");
    s.push('\n');
    s
}

pub fn default_seed() -> u64 {
    0
}
