use std::f64::consts::TAU;

use rayon::prelude::*;
use squeeze_core::{
    closed_form_covariance, derive, log_space, rwa_baseline, OscillatorParams, PhysicalConstants,
};

use crate::config::Resolved;
use crate::input_error;
use crate::output::{num, CsvDoc, Destination};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Bath temperature in kelvin; Ω follows n_th as k_B T/(ħ n_th).
    #[arg(long, default_value_t = 300.0)]
    pub temp_k: f64,
    #[arg(long, default_value_t = 5e3)]
    pub c: f64,
    /// Damping rate Γ/2π in Hz, held fixed so that Q = k_B T/(ħ Γ n_th).
    #[arg(long, default_value_t = 1e4)]
    pub gamma_hz: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5, 1.0])]
    pub eta: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub n_th_min: f64,
    #[arg(long, default_value_t = 1e8)]
    pub n_th_max: f64,
    #[arg(long, default_value_t = 161)]
    pub n_th_points: usize,
}

pub fn run(args: &Args, resolved: &Resolved, dest: &Destination) -> anyhow::Result<()> {
    if !(args.n_th_min > 0.0 && args.n_th_max >= args.n_th_min && args.n_th_max.is_finite()) {
        return Err(input_error(format!(
            "n_th range must satisfy 0 < min <= max < inf, got [{}, {}]",
            args.n_th_min, args.n_th_max
        )));
    }
    if args.n_th_points < 2 {
        return Err(input_error("--n-th-points must be at least 2"));
    }
    for (name, v) in [("temp-k", args.temp_k), ("gamma-hz", args.gamma_hz)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(input_error(format!("--{name} must be positive, got {v}")));
        }
    }
    if args.eta.is_empty() {
        return Err(input_error("--eta needs at least one value"));
    }
    let k = PhysicalConstants::CODATA_2018;
    let gamma = TAU * args.gamma_hz;
    let kappa_t = k.k_b * args.temp_k / k.hbar;
    let n_axis = log_space(args.n_th_min, args.n_th_max, args.n_th_points);

    // columns[j] = (v_full, v_rwa) along the sweep for eta[j]
    let columns: Vec<Vec<(f64, f64)>> = args
        .eta
        .iter()
        .map(|&eta| {
            n_axis
                .par_iter()
                .map(|&n| {
                    let q = kappa_t / (gamma * n);
                    let d = derive(&OscillatorParams::dimensionless(q, n, eta, args.c)?)?;
                    Ok((closed_form_covariance(&d)?.v_min, rwa_baseline(&d)))
                })
                .collect::<squeeze_core::Result<Vec<_>>>()
        })
        .collect::<squeeze_core::Result<Vec<_>>>()?;

    let mut header = vec![
        "n_th".to_string(),
        "omega_hz".to_string(),
        "q_factor".to_string(),
    ];
    for eta in &args.eta {
        header.push(format!("v_full_eta{eta}"));
        header.push(format!("v_rwa_eta{eta}"));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut doc = CsvDoc::new(resolved, &header_refs)?;
    doc.meta(
        "sweep",
        "Gamma and T fixed; omega = k_B T/(hbar n_th), Q = omega/Gamma",
    );
    for (j, &eta) in args.eta.iter().enumerate() {
        let col = &columns[j];
        let (i_peak, _) =
            col.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &(v, _))| {
                    if v > best.1 {
                        (i, v)
                    } else {
                        best
                    }
                });
        // ηC = Q²/n_th with Q = K/n_th gives n_th³ = K²/(ηC).
        let predicted = ((kappa_t / gamma).powi(2) / (eta * args.c)).cbrt();
        doc.meta(
            &format!("peak_eta{eta}"),
            format!(
                "n_th={} v_full={} predicted_n_th={}",
                num(n_axis[i_peak]),
                num(col[i_peak].0),
                num(predicted)
            ),
        );
        let first_squeezed = col
            .iter()
            .enumerate()
            .skip(i_peak)
            .find(|(_, &(v, _))| v < 1.0)
            .map(|(i, _)| num(n_axis[i]))
            .unwrap_or_else(|| "none".to_string());
        doc.meta(&format!("first_squeezed_n_th_eta{eta}"), first_squeezed);
    }
    for (i, &n) in n_axis.iter().enumerate() {
        let omega = kappa_t / n;
        let mut row = vec![n, omega / TAU, omega / gamma];
        for col in &columns {
            row.push(col[i].0);
            row.push(col[i].1);
        }
        doc.nums(&row)?;
    }
    dest.write(&doc.finish()?)
}
