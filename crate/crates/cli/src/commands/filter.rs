use std::f64::consts::TAU;
use std::path::Path;

use squeeze_core::wiener::{
    cross_spectrum_zpk, error_covariance, excess_filters, measured_spectrum, momentum_filter,
    position_filter, spectral_factor_rational, threshold_shift, wiener_from_factor,
    ExcessNoiseModel, FilterResponse, RecoveredCoefficients, ResidualGrid, Target,
};
use squeeze_core::{closed_form_covariance, derive, squeezing_threshold};

use crate::args::ParamArgs;
use crate::config::Resolved;
use crate::input_error;
use crate::output::{num, CsvDoc, Destination};

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetArg {
    Position,
    Momentum,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    #[command(flatten)]
    pub params: ParamArgs,
    /// `none`, `pink` for 0.1 Ω/(|ω| + 0.1 rad/s), or a CSV file with
    /// columns `omega_rad_s,psd` in shot-noise units.
    #[arg(long, default_value = "none")]
    pub excess: String,
    #[arg(long, value_enum, default_value_t = TargetArg::Position)]
    pub target: TargetArg,
    /// Frequency points, uniform and symmetric about zero.
    #[arg(long, default_value_t = 2001)]
    pub points: usize,
    /// Grid half-span in rad/s; default 4 max(Ω′, Γ′).
    #[arg(long)]
    pub omega_max_rad_s: Option<f64>,
    /// Also report the squeezing cooperativity with and without the excess noise.
    #[arg(long)]
    pub threshold: bool,
}

/// Reads a two-column `omega_rad_s,psd` table.
pub fn read_excess_table(path: &Path) -> anyhow::Result<ExcessNoiseModel> {
    let bad = |msg: String| input_error(format!("{}: {msg}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.len() != 2 || &header[0] != "omega_rad_s" || &header[1] != "psd" {
        return Err(bad(format!(
            "expected header `omega_rad_s,psd`, got `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let (mut omega, mut psd) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |j: usize| -> anyhow::Result<f64> {
            rec.get(j)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| bad(format!("row {}: column {} is not a number", i + 1, j + 1)))
        };
        omega.push(field(0)?);
        psd.push(field(1)?);
    }
    Ok(ExcessNoiseModel::table(omega, psd)?)
}

pub fn parse_excess(spec: &str, omega: f64) -> anyhow::Result<Option<ExcessNoiseModel>> {
    Ok(match spec {
        "none" => None,
        "pink" => Some(ExcessNoiseModel::pink(omega)),
        path => Some(read_excess_table(Path::new(path))?),
    })
}

pub fn run(args: &Args, resolved: &Resolved, dest: &Destination) -> anyhow::Result<()> {
    let params = args.params.resolve()?;
    let d = derive(&params)?;
    let excess = parse_excess(&args.excess, d.omega)?;
    if args.points < 2 {
        return Err(input_error("--points must be at least 2"));
    }
    let span = args
        .omega_max_rad_s
        .unwrap_or(4.0 * d.omega_prime.max(d.gamma_prime));
    if !(span > 0.0 && span.is_finite()) {
        return Err(input_error(format!(
            "--omega-max-rad-s must be positive, got {span}"
        )));
    }

    let mut doc = CsvDoc::new(resolved, &["omega_rad_s", "re", "im"])?;
    let (hq, hp) = match &excess {
        None => (position_filter(&d)?, momentum_filter(&d)?),
        Some(m) => {
            let (q, p) = excess_filters(&d, Some(m), ResidualGrid::default())?;
            (FilterResponse::Excess(q), FilterResponse::Excess(p))
        }
    };
    let achieved = error_covariance(&d, excess.as_ref(), &hq, &hp)?;
    doc.meta(
        "filter",
        match args.target {
            TargetArg::Position => "position estimate H(w)",
            TargetArg::Momentum => "momentum estimate H_p(w)",
        },
    );
    doc.meta("achieved_v_qq", num(achieved.v_qq));
    doc.meta("achieved_v_pp", num(achieved.v_pp));
    doc.meta("achieved_c_qp", num(achieved.c_qp));
    doc.meta("achieved_v_min", num(achieved.v_min));

    match &excess {
        None => {
            let closed = closed_form_covariance(&d)?;
            doc.meta("closed_form_v_min", num(closed.v_min));
            let m = spectral_factor_rational(&measured_spectrum(&d))?;
            let h = wiener_from_factor(&cross_spectrum_zpk(&d, Target::Position), &m)?;
            let r = RecoveredCoefficients::from_zpk(&h)?;
            for (name, got, want) in [
                ("coef_a", r.coef_a, d.coef_a),
                ("coef_b", r.coef_b, d.coef_b),
                ("omega_prime", r.omega_prime, d.omega_prime),
                ("gamma_prime", r.gamma_prime, d.gamma_prime),
            ] {
                doc.meta(
                    &format!("recovered_{name}"),
                    format!("{} derived={}", num(got), num(want)),
                );
            }
            if args.threshold {
                doc.meta(
                    "squeezing_threshold_c",
                    num(squeezing_threshold(d.q_factor, d.n_th, d.eta)?),
                );
            }
        }
        Some(m) => {
            let clean =
                error_covariance(&d, Some(m), &position_filter(&d)?, &momentum_filter(&d)?)?;
            doc.meta("clean_filter_v_min_under_excess", num(clean.v_min));
            doc.meta("excess_dc_db", num(m.dc_db()));
            doc.meta(
                "excess_corner_hz",
                m.corner().map_or("none".to_string(), |c| num(c / TAU)),
            );
            if args.threshold {
                let t = threshold_shift(&params, m, ResidualGrid::default())?;
                doc.meta("threshold_c_clean", num(t.clean));
                doc.meta("threshold_c_excess", num(t.excess));
                doc.meta("threshold_ratio", num(t.ratio()));
            }
        }
    }

    let h = match args.target {
        TargetArg::Position => &hq,
        TargetArg::Momentum => &hp,
    };
    let n = args.points;
    for k in 0..n {
        let w = -span + 2.0 * span * k as f64 / (n - 1) as f64;
        let v = h.eval(w);
        doc.nums(&[w, v.re, v.im])?;
    }
    dest.write(&doc.finish()?)
}
