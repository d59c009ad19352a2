use std::f64::consts::TAU;

use rayon::prelude::*;
use squeeze_core::{
    boundary_curves, classify, closed_form_covariance, derive, ClassifierConfig, OscillatorParams,
    PhysicalConstants, RegimeMapAxes,
};

use crate::config::Resolved;
use crate::input_error;
use crate::output::{num, CsvDoc, Destination};

pub const MAX_POINTS: usize = 10_000_000;

fn defaults() -> RegimeMapAxes {
    RegimeMapAxes::default()
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Quality factor, held fixed across the map.
    #[arg(long, default_value_t = defaults().q_factor)]
    pub q: f64,
    #[arg(long, default_value_t = defaults().eta)]
    pub eta: f64,
    #[arg(long, default_value_t = defaults().n_th.0)]
    pub n_th_min: f64,
    #[arg(long, default_value_t = defaults().n_th.1)]
    pub n_th_max: f64,
    #[arg(long, default_value_t = defaults().n_th.2)]
    pub n_th_points: usize,
    #[arg(long, default_value_t = defaults().c.0)]
    pub c_min: f64,
    #[arg(long, default_value_t = defaults().c.1)]
    pub c_max: f64,
    #[arg(long, default_value_t = defaults().c.2)]
    pub c_points: usize,
    /// Bath temperature in kelvin; adds the Ω/2π = k_B T/(h n_th) column.
    #[arg(long)]
    pub temp_k: Option<f64>,
}

const HEADER: [&str; 11] = [
    "kind",
    "n_th",
    "c",
    "v_min",
    "purity",
    "det",
    "regime",
    "qco",
    "rwa_valid",
    "backaction_dominated",
    "omega_hz",
];

fn check_range(name: &str, lo: f64, hi: f64, n: usize) -> anyhow::Result<()> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(input_error(format!(
            "{name} range must satisfy 0 < min <= max < inf, got [{lo}, {hi}]"
        )));
    }
    if n == 0 {
        return Err(input_error(format!("{name} needs at least one point")));
    }
    Ok(())
}

pub fn run(args: &Args, resolved: &Resolved, dest: &Destination) -> anyhow::Result<()> {
    check_range("n_th", args.n_th_min, args.n_th_max, args.n_th_points)?;
    check_range("c", args.c_min, args.c_max, args.c_points)?;
    let total = args.n_th_points.saturating_mul(args.c_points);
    if total > MAX_POINTS {
        return Err(input_error(format!(
            "grid has {total} points, more than the limit of {MAX_POINTS}"
        )));
    }
    if let Some(t) = args.temp_k {
        if !(t > 0.0 && t.is_finite()) {
            return Err(input_error(format!("--temp-k must be positive, got {t}")));
        }
    }
    OscillatorParams::dimensionless(args.q, args.n_th_min, args.eta, args.c_min)?;

    let axes = RegimeMapAxes {
        q_factor: args.q,
        eta: args.eta,
        n_th: (args.n_th_min, args.n_th_max, args.n_th_points),
        c: (args.c_min, args.c_max, args.c_points),
    };
    let n_axis = axes.n_th_axis();
    let c_axis = axes.c_axis();
    let k = PhysicalConstants::CODATA_2018;
    let omega_hz = |n: f64| match args.temp_k {
        Some(t) => num(k.k_b * t / (k.hbar * n) / TAU),
        None => String::new(),
    };
    let cfg = ClassifierConfig::default();

    let rows: Vec<Vec<[String; 11]>> = n_axis
        .par_iter()
        .map(|&n| {
            c_axis
                .iter()
                .map(|&c| {
                    let d = derive(&OscillatorParams::dimensionless(args.q, n, args.eta, c)?)?;
                    let cov = closed_form_covariance(&d)?;
                    let l = classify(&d, &cov, &cfg);
                    Ok([
                        "grid".to_string(),
                        num(n),
                        num(c),
                        num(cov.v_min),
                        num(cov.purity),
                        num(cov.determinant()),
                        l.regime.roman().to_string(),
                        l.qco.to_string(),
                        l.rwa_valid.to_string(),
                        l.backaction_dominated.to_string(),
                        omega_hz(n),
                    ])
                })
                .collect::<squeeze_core::Result<Vec<_>>>()
        })
        .collect::<squeeze_core::Result<Vec<_>>>()?;

    let mut doc = CsvDoc::new(resolved, &HEADER)?;
    doc.meta(
        "layout",
        "grid rows are n_th-major; boundary rows give the boundary cooperativity at each n_th",
    );
    doc.meta("regimes", "I thermal RWA, II ground RWA, III classical squeezed, IV impure quantum squeezed, V pure quantum squeezed");
    doc.meta("qco_line_n_th", num(args.q));
    let mut min_det = f64::INFINITY;
    for row in rows.iter().flatten() {
        min_det = min_det.min(row[5].parse::<f64>()?);
        doc.row(row)?;
    }
    for b in boundary_curves(args.q, args.eta, &n_axis)? {
        for (name, c) in [
            ("i_iii", b.i_iii),
            ("iii_iv", b.iii_iv),
            ("iv_v", b.iv_v),
            ("ii_v", b.ii_v),
            ("squeezing", b.squeezing),
            ("rwa_exact", b.rwa_exact),
        ] {
            let mut r: [String; 11] = Default::default();
            r[0] = format!("boundary:{name}");
            r[1] = num(b.n_th);
            r[2] = num(c);
            r[10] = omega_hz(b.n_th);
            doc.row(&r)?;
        }
    }
    doc.meta("min_det", num(min_det));
    dest.write(&doc.finish()?)
}
