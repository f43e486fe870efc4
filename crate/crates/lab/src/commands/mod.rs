//! Built-in experiments and the configuration helpers they share.

pub mod inflate;
pub mod lemmas;
pub mod oracle_compare;
pub mod sweep;
pub mod trees;
pub mod xi1_bound;

use nls_core::construction::BackgroundProfile;
use nls_core::duhamel::QuadratureSpec;
use nls_core::registry::StrategyOptions;

use crate::config::Config;
use crate::error::{LabError, LabResult};

/// Nonlinearity, kernel and quadrature selected by the `wick`, `kernel` and
/// `M` keys.
pub(crate) fn strategy(cfg: &Config, default_nodes: usize) -> LabResult<StrategyOptions> {
    let wick = cfg.get_bool("wick", false)?;
    let nodes = cfg.get("M", default_nodes)?;
    Ok(StrategyOptions {
        nonlinearity: if wick { "wick" } else { "cubic" }.into(),
        kernel: cfg.get("kernel", "auto".to_string())?,
        quadrature: QuadratureSpec::new(nodes)?,
        ..Default::default()
    })
}

pub(crate) fn background(cfg: &Config, default: BackgroundProfile) -> LabResult<BackgroundProfile> {
    match cfg.raw("u0") {
        None => Ok(default),
        Some(text) => Ok(text.parse()?),
    }
}

pub(crate) fn dimension(cfg: &Config, default: usize) -> LabResult<usize> {
    let d = cfg.get("d", default)?;
    if d == 0 || d > nls_core::lattice::MAX_DIM {
        return Err(LabError::Config(format!("dimension d must be 1..={}, got {d}", nls_core::lattice::MAX_DIM)));
    }
    Ok(d)
}
