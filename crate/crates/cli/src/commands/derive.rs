use serde_json::json;
use squeeze_core::{
    classify, conditional_covariance, derive, rwa_baseline, squeezing_threshold, thermal_occupancy,
    theta_closed_form, Bath, ClassifierConfig,
};

use super::{covariance_json, regime_json};
use crate::args::{resolved_cooperativity, ParamArgs};
use crate::config::Resolved;
use crate::output::{json_doc, Destination};

#[derive(clap::Args, Debug)]
pub struct Args {
    #[command(flatten)]
    pub params: ParamArgs,
}

pub fn run(args: &Args, resolved: &Resolved, dest: &Destination) -> anyhow::Result<()> {
    let p = args.params.resolve()?;
    let d = derive(&p)?;
    let cov = conditional_covariance(&d)?;
    let label = classify(&d, &cov, &ClassifierConfig::default());
    let strained = match p.bath {
        Bath::Temperature(t) => Some(thermal_occupancy(p.omega, t)?.strained),
        Bath::Occupancy(_) => None,
    };
    let body = json!({
        "inputs": {
            "omega_rad_s": p.omega,
            "gamma_rad_s": p.gamma,
            "eta": p.eta,
            "c": resolved_cooperativity(&p)?,
            "n_th": d.n_th,
            "occupancy_strained": strained,
        },
        "derived": {
            "q_factor": d.q_factor,
            "n_tot": d.n_tot,
            "mu": d.mu,
            "gamma_th": d.gamma_th,
            "omega_prime": d.omega_prime,
            "gamma_prime": d.gamma_prime,
            "coef_a": d.coef_a,
            "coef_b": d.coef_b,
            "stiffening": d.stiffening,
            "record_gain": d.record_gain(),
            "rwa_ratio": d.rwa_ratio(),
        },
        "covariance": covariance_json(&cov),
        "theta_closed_form": theta_closed_form(&d),
        "v_rwa": rwa_baseline(&d),
        "regime": regime_json(&label),
        "squeezing_threshold_c": squeezing_threshold(d.q_factor, d.n_th, d.eta)?,
    });
    dest.write(&json_doc(resolved, body)?)
}
