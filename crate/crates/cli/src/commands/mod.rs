//! One module per subcommand.

pub mod derive;
pub mod filter;
pub mod regime_map;
pub mod simulate;
pub mod spectra;
pub mod variance_curve;
pub mod wigner;

use serde_json::{json, Value};
use squeeze_core::{ConditionalCovariance, RegimeLabel};

pub fn covariance_json(c: &ConditionalCovariance) -> Value {
    json!({
        "v_qq": c.v_qq,
        "v_pp": c.v_pp,
        "c_qp": c.c_qp,
        "v_min": c.v_min,
        "v_max": c.v_max,
        "theta": c.theta,
        "purity": c.purity,
        "determinant": c.determinant(),
    })
}

pub fn regime_json(l: &RegimeLabel) -> Value {
    json!({
        "label": l.regime.name(),
        "roman": l.regime.roman(),
        "rwa_valid": l.rwa_valid,
        "qco": l.qco,
        "backaction_dominated": l.backaction_dominated,
    })
}
