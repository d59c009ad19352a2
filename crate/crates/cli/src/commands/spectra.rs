use squeeze_core::derive;
use squeeze_core::log_space;
use squeeze_core::wiener::{analytic_factor_at, momentum_filter, position_filter, s_qq, s_yy};

use crate::args::ParamArgs;
use crate::config::Resolved;
use crate::input_error;
use crate::output::{num, CsvDoc, Destination};

#[derive(clap::Args, Debug)]
pub struct Args {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 2001)]
    pub points: usize,
    /// Upper frequency in rad/s; default 4 max(Ω′, Γ′).
    #[arg(long)]
    pub omega_max_rad_s: Option<f64>,
    /// Log-spaced positive frequencies instead of a uniform grid symmetric about zero.
    #[arg(long)]
    pub log: bool,
    /// Lower frequency for `--log`; default 1e-6 of the upper one.
    #[arg(long, requires = "log")]
    pub omega_min_rad_s: Option<f64>,
}

pub fn run(args: &Args, resolved: &Resolved, dest: &Destination) -> anyhow::Result<()> {
    let params = args.params.resolve()?;
    let d = derive(&params)?;
    if args.points < 2 {
        return Err(input_error("--points must be at least 2"));
    }
    let hi = args
        .omega_max_rad_s
        .unwrap_or(4.0 * d.omega_prime.max(d.gamma_prime));
    let lo = args.omega_min_rad_s.unwrap_or(hi * 1e-6);
    if !(hi > 0.0 && hi.is_finite() && lo > 0.0 && lo < hi) {
        return Err(input_error(format!(
            "frequency range must satisfy 0 < min < max < inf, got [{lo}, {hi}]"
        )));
    }
    let grid: Vec<f64> = if args.log {
        log_space(lo, hi, args.points)
    } else {
        let n = args.points;
        (0..n)
            .map(|k| -hi + 2.0 * hi * k as f64 / (n - 1) as f64)
            .collect()
    };
    // Without measurement there is nothing to filter.
    let filters = if d.c > 0.0 {
        Some((position_filter(&d)?, momentum_filter(&d)?))
    } else {
        None
    };

    let mut doc = CsvDoc::new(
        resolved,
        &[
            "omega_rad_s",
            "s_qq",
            "s_yy",
            "h_abs2",
            "h_p_abs2",
            "m_abs2",
        ],
    )?;
    doc.meta("s_yy", "record spectrum in shot-noise units");
    doc.meta("m_abs2", "|M(w)|^2 of the causal spectral factor of s_yy");
    for &w in &grid {
        let (h, hp) = filters.as_ref().map_or((0.0, 0.0), |(q, p)| {
            (q.eval(w).norm_sqr(), p.eval(w).norm_sqr())
        });
        doc.row(
            [
                w,
                s_qq(&d, w),
                s_yy(&d, w),
                h,
                hp,
                analytic_factor_at(&d, w).norm_sqr(),
            ]
            .iter()
            .map(|&v| num(v)),
        )?;
    }
    dest.write(&doc.finish()?)
}
