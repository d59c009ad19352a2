use squeeze_core::conditional::representative_states;
use squeeze_core::{conditional_covariance, derive, wigner, WignerSpec};

use crate::args::ParamArgs;
use crate::config::Resolved;
use crate::input_error;
use crate::output::{num, CsvDoc, Destination};

#[derive(clap::Args, Debug)]
pub struct Args {
    #[command(flatten)]
    pub params: ParamArgs,
    /// One of the illustrative states I, II, III, IV at Q = 1e5, η = 1.
    #[arg(long, conflicts_with_all = ["q", "n_th", "c", "omega_hz", "omega_rad_s"])]
    pub preset: Option<String>,
    /// Points per axis.
    #[arg(long, default_value_t = WignerSpec::default().points)]
    pub points: usize,
    /// Half-width of the square grid in zero-point units; default 6√v_max.
    #[arg(long)]
    pub half_width: Option<f64>,
}

pub fn run(args: &Args, resolved: &Resolved, dest: &Destination) -> anyhow::Result<()> {
    let params = match &args.preset {
        Some(name) => representative_states()
            .into_iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, p)| p)
            .ok_or_else(|| input_error(format!("unknown preset `{name}`; use I, II, III or IV")))?,
        None => args.params.resolve()?,
    };
    let d = derive(&params)?;
    let cov = conditional_covariance(&d)?;
    let grid = wigner(
        &cov,
        &WignerSpec {
            points: args.points,
            half_width: args.half_width,
        },
    )?;
    let mut doc = CsvDoc::new(resolved, &["q", "p", "w"])?;
    doc.meta("v_qq", num(cov.v_qq));
    doc.meta("v_pp", num(cov.v_pp));
    doc.meta("c_qp", num(cov.c_qp));
    doc.meta("v_min", num(cov.v_min));
    doc.meta("theta", num(cov.theta));
    doc.meta(
        "contour",
        "W = W_max/e ellipse; tilt is the minor-axis angle from the q axis",
    );
    doc.meta("contour_semi_major", num(grid.contour.semi_major));
    doc.meta("contour_semi_minor", num(grid.contour.semi_minor));
    doc.meta("contour_tilt", num(grid.contour.tilt));
    doc.meta("grid_points", grid.q_axis.len());
    doc.meta("integral", num(grid.integral()));
    for (i_p, &p) in grid.p_axis.iter().enumerate() {
        for (i_q, &q) in grid.q_axis.iter().enumerate() {
            doc.nums(&[q, p, grid.at(i_q, i_p)])?;
        }
    }
    dest.write(&doc.finish()?)
}
