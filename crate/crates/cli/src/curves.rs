use std::fmt::Write;

use unilogic::ops::{cut, squash, SquashParams};

use crate::CliResult;

pub const PLOT_BETAS: [f64; 3] = [10.0, 50.0, 80.0];

/// Grid `-0.5, -0.499, ..., 1.5`, built from integers so every point is
/// the nearest double to its decimal value.
pub fn grid() -> Vec<f64> {
    (-500..=1500).map(|i| f64::from(i) / 1000.0).collect()
}

/// CSV with columns `x`, one `beta_<β>` column per smoothness, and `cut`.
pub fn squash_table(betas: &[f64]) -> CliResult<String> {
    let params = betas
        .iter()
        .map(|&b| SquashParams::with_smoothness(b))
        .collect::<unilogic::Result<Vec<_>>>()?;
    let mut out = String::from("x");
    for b in betas {
        let _ = write!(out, ",beta_{b}");
    }
    out.push_str(",cut\n");
    for x in grid() {
        let _ = write!(out, "{x:.3}");
        for p in &params {
            let _ = write!(out, ",{}", squash(x, p)?.get());
        }
        let _ = writeln!(out, ",{}", cut(x)?.get());
    }
    Ok(out)
}
