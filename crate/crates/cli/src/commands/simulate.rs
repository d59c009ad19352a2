use std::path::PathBuf;

use serde_json::{json, Value};
use squeeze_core::montecarlo::{
    apply_filter, run_ensemble, simulate, ErrorStatistics, FilterPair, SimulationConfig,
};
use squeeze_core::riccati::{build_full_model, lyapunov};
use squeeze_core::wiener::{
    error_covariance, excess_covariance, excess_filters, momentum_filter, position_filter,
    FilterResponse, ResidualGrid,
};
use squeeze_core::{closed_form_covariance, derive, ConditionalCovariance};

use super::filter::parse_excess;
use crate::args::ParamArgs;
use crate::config::Resolved;
use crate::input_error;
use crate::output::{json_doc, num, CsvDoc, Destination};

#[derive(clap::Args, Debug)]
pub struct Args {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Time step; default min(2π/Ω′, 1/Γ′)/20.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Scored span per trajectory, in units of 1/Γ′.
    #[arg(long, default_value_t = 200.0)]
    pub window: f64,
    #[arg(long, default_value_t = 64)]
    pub trajectories: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Burn-in time; default max(10/Γ′, 10/Γ).
    #[arg(long)]
    pub burn_in: Option<f64>,
    /// Filter kernel length in time; default just above 2 ln(1e4)/Γ′.
    #[arg(long)]
    pub truncation: Option<f64>,
    /// Excess photocurrent noise: `none`, `pink` or a CSV file.
    #[arg(long, default_value = "none")]
    pub excess: String,
    /// Write trajectory 0 as CSV (t, y, q, p, q_hat, p_hat) to this file.
    #[arg(long)]
    pub record: Option<PathBuf>,
}

fn stats_json(s: &ErrorStatistics, expected: &ConditionalCovariance, z: bool) -> Value {
    let mut v = json!({
        "v_qq": s.v_qq,
        "v_pp": s.v_pp,
        "c_qp": s.c_qp,
        "se_qq": s.se_qq,
        "se_pp": s.se_pp,
        "se_qp": s.se_qp,
        "samples": s.samples,
        "blocks": s.blocks,
    });
    let e = expected;
    v["expected"] = json!({ "v_qq": e.v_qq, "v_pp": e.v_pp, "c_qp": e.c_qp });
    if z {
        v["z"] = json!({
            "v_qq": (s.v_qq - e.v_qq) / s.se_qq,
            "v_pp": (s.v_pp - e.v_pp) / s.se_pp,
            "c_qp": (s.c_qp - e.c_qp) / s.se_qp,
        });
    }
    v
}

pub fn run(args: &Args, resolved: &Resolved, dest: &Destination) -> anyhow::Result<()> {
    let params = args.params.resolve()?;
    let d = derive(&params)?;
    let excess = parse_excess(&args.excess, d.omega)?;
    if !(args.window > 0.0 && args.window.is_finite()) {
        return Err(input_error(format!(
            "--window must be positive, got {}",
            args.window
        )));
    }
    let mut cfg = SimulationConfig::for_window(
        &d,
        args.window / d.gamma_prime,
        args.trajectories,
        args.seed,
    );
    let scored = cfg.duration - cfg.burn_in - cfg.filter_truncation;
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    if let Some(b) = args.burn_in {
        cfg.burn_in = b;
    }
    if let Some(t) = args.truncation {
        cfg.filter_truncation = t;
    }
    cfg.duration = cfg.burn_in + cfg.filter_truncation + scored;
    cfg.validate(&d)?;

    let (aq, ap) = (position_filter(&d)?, momentum_filter(&d)?);
    let mut names = vec!["analytic"];
    let mut responses = vec![(aq, ap)];
    if let Some(m) = &excess {
        let (q, p) = excess_filters(&d, Some(m), ResidualGrid::default())?;
        names.push("excess_aware");
        responses.push((FilterResponse::Excess(q), FilterResponse::Excess(p)));
    }
    let pairs = responses
        .iter()
        .map(|(q, p)| {
            Ok(FilterPair {
                q: q.impulse_response(cfg.dt, cfg.filter_truncation)?,
                p: p.impulse_response(cfg.dt, cfg.filter_truncation)?,
            })
        })
        .collect::<squeeze_core::Result<Vec<_>>>()?;

    let result = run_ensemble(&d, &cfg, excess.as_ref(), &pairs)?;

    let expected: Vec<ConditionalCovariance> = match &excess {
        None => vec![closed_form_covariance(&d)?],
        Some(m) => vec![
            error_covariance(&d, Some(m), &responses[0].0, &responses[0].1)?,
            excess_covariance(&d, Some(m), ResidualGrid::default())?,
        ],
    };
    let model = build_full_model(&d);
    let lyap = lyapunov(&model.drift, &model.diffusion)?;
    let lyap_cov = ConditionalCovariance::from_entries(lyap[0][0], lyap[1][1], lyap[0][1])?;

    let filters: Vec<Value> = names
        .iter()
        .zip(&result.errors)
        .zip(&expected)
        .map(|((name, s), e)| {
            let mut v = stats_json(s, e, true);
            v["filter"] = json!(name);
            v
        })
        .collect();

    if let Some(path) = &args.record {
        let rec = simulate(&d, &cfg, excess.as_ref(), 0)?;
        let q_hat = apply_filter(&rec, &pairs[0].q)?;
        let p_hat = apply_filter(&rec, &pairs[0].p)?;
        let mut doc = CsvDoc::new(resolved, &["t", "y", "q", "p", "q_hat", "p_hat"])?;
        doc.meta("trajectory_seed", rec.seed);
        doc.meta("dt", num(rec.dt));
        doc.meta(
            "y",
            "g (q_{k-1} + q_k)/2 + n_k with n_k ~ N(0, 1/dt), unit two-sided shot-noise PSD",
        );
        doc.meta("estimates", "analytic filters");
        for k in 0..rec.y.len() {
            doc.nums(&[
                k as f64 * rec.dt,
                rec.y[k],
                rec.q[k],
                rec.p[k],
                q_hat[k],
                p_hat[k],
            ])?;
        }
        Destination::new(Some(path)).write(&doc.finish()?)?;
    }

    let body = json!({
        "simulation": {
            "dt": cfg.dt,
            "duration": cfg.duration,
            "burn_in": cfg.burn_in,
            "filter_truncation": cfg.filter_truncation,
            "trajectories": cfg.trajectories,
            "seed": cfg.seed,
            "samples_per_trajectory": cfg.samples(),
            "first_scored": cfg.first_scored(),
        },
        "filters": filters,
        // Blocks of 10/Γ′ are too short for the raw moments, which decorrelate at Γ.
        "unconditional": stats_json(&result.unconditional, &lyap_cov, false),
        "record_variance": result.record_variance,
    });
    dest.write(&json_doc(resolved, body)?)
}
