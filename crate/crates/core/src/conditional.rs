//! Closed-form steady conditional state and its Gaussian phase-space picture.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::params::{squeezing_threshold, DerivedQuantities, OscillatorParams};

/// Cooperativity below which the thermal state is returned directly.
pub const THERMAL_SHORT_CIRCUIT: f64 = 1e-12;

/// Symmetric 2×2 covariance of `(δq, δp)` in zero-point units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalCovariance {
    pub v_qq: f64,
    pub v_pp: f64,
    pub c_qp: f64,
    /// Smaller eigenvalue.
    pub v_min: f64,
    /// Larger eigenvalue.
    pub v_max: f64,
    /// Angle of the minimal-variance eigenvector from the q axis, in (−π/2, π/2].
    pub theta: f64,
    pub purity: f64,
}

impl ConditionalCovariance {
    pub fn from_entries(v_qq: f64, v_pp: f64, c_qp: f64) -> Result<Self> {
        Self::from_parts(v_qq, v_pp - v_qq, c_qp)
    }

    /// `gap = v_pp − v_qq`, passed separately so that tiny gaps keep full precision.
    pub(crate) fn from_parts(v_qq: f64, gap: f64, c_qp: f64) -> Result<Self> {
        let v_pp = v_qq + gap;
        if !(v_qq > 0.0 && v_pp > 0.0) || !c_qp.is_finite() || !v_pp.is_finite() {
            return Err(Error::Numerical(format!(
                "covariance is not positive: v_qq = {v_qq}, v_pp = {v_pp}, c_qp = {c_qp}"
            )));
        }
        let det = v_qq * v_pp - c_qp * c_qp;
        if !(det > 0.0) {
            return Err(Error::Numerical(format!(
                "covariance is not positive definite: det = {det}"
            )));
        }
        let half = 0.5 * gap;
        let r = half.hypot(c_qp);
        let v_max = v_qq + half + r;
        let v_min = det / v_max;
        let theta = if r == 0.0 {
            0.0
        } else {
            normalize_angle(0.5 * (2.0 * c_qp).atan2(-gap) - FRAC_PI_2)
        };
        Ok(ConditionalCovariance {
            v_qq,
            v_pp,
            c_qp,
            v_min,
            v_max,
            theta,
            purity: 1.0 / det.sqrt(),
        })
    }

    pub fn determinant(&self) -> f64 {
        self.v_qq * self.v_pp - self.c_qp * self.c_qp
    }

    /// Thermal state `(2n + 1) I`.
    pub fn thermal(n: f64) -> Self {
        let v = 2.0 * n + 1.0;
        ConditionalCovariance {
            v_qq: v,
            v_pp: v,
            c_qp: 0.0,
            v_min: v,
            v_max: v,
            theta: 0.0,
            purity: 1.0 / v,
        }
    }

    /// Covariance of the same state in coordinates rotated by `phi`.
    pub fn rotated(&self, phi: f64) -> Result<Self> {
        let (s, c) = phi.sin_cos();
        let (a, b, x) = (self.v_qq, self.v_pp, self.c_qp);
        let v_qq = c * c * a + 2.0 * s * c * x + s * s * b;
        let v_pp = s * s * a - 2.0 * s * c * x + c * c * b;
        let c_qp = (c * c - s * s) * x + s * c * (b - a);
        Self::from_entries(v_qq, v_pp, c_qp)
    }
}

fn normalize_angle(mut t: f64) -> f64 {
    while t <= -FRAC_PI_2 {
        t += PI;
    }
    while t > FRAC_PI_2 {
        t -= PI;
    }
    t
}

/// Steady conditional covariance under optimal causal filtering.
///
/// Fails with [`Error::Heisenberg`] when the determinant drops below `1 − 1e-9`,
/// which the closed form does for `Q ≲ 10²` at low occupancy.
pub fn conditional_covariance(d: &DerivedQuantities) -> Result<ConditionalCovariance> {
    let cov = closed_form_covariance(d)?;
    let det = cov.determinant();
    if det < 1.0 - 1e-9 {
        return Err(Error::Heisenberg { det });
    }
    Ok(cov)
}

/// The closed form without the Heisenberg check.
pub fn closed_form_covariance(d: &DerivedQuantities) -> Result<ConditionalCovariance> {
    if d.c < THERMAL_SHORT_CIRCUIT {
        return Ok(ConditionalCovariance::thermal(d.n_th));
    }
    // Γ = 1 units; algebraically equal to the (Γ′ − Γ)/(4ηCΓ) family of forms
    // but free of cancellation at small C.
    let q = d.q_factor;
    let q2 = q * q;
    let stiff = d.stiffening / (d.gamma * d.gamma);
    let gp = d.gamma_prime / d.gamma;
    let v_qq = 8.0 * d.n_tot * q2 / ((gp + 1.0) * (2.0 * q2 + stiff));
    let gap = v_qq * gp * stiff / ((gp + 1.0) * q2);
    let c_qp = 2.0 * d.eta * d.c * v_qq * v_qq / q;
    ConditionalCovariance::from_parts(v_qq, gap, c_qp)
}

/// `(theta, v_min, v_max)` of the minimal-variance quadrature.
pub fn optimal_quadrature(cov: &ConditionalCovariance) -> (f64, f64, f64) {
    (cov.theta, cov.v_min, cov.v_max)
}

/// The closed-form angle `−arctan(Ω/Γ′)/2` quoted alongside the eigen-angle.
/// It differs from the eigenvector angle, which satisfies `tan 2θ = −2Ω/Γ′`.
pub fn theta_closed_form(d: &DerivedQuantities) -> f64 {
    -(d.omega / d.gamma_prime).atan() / 2.0
}

pub fn purity(cov: &ConditionalCovariance) -> f64 {
    1.0 / cov.determinant().sqrt()
}

/// Isotropic variance under the rotating-wave approximation,
/// `(√(1 + 16ηC n_tot) − 1)/(4ηC)`.
pub fn rwa_baseline(d: &DerivedQuantities) -> f64 {
    let x = 16.0 * d.eta * d.c * d.n_tot;
    4.0 * d.n_tot / ((1.0 + x).sqrt() + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerSpec {
    /// Points per axis; raised for strongly squeezed states so that the
    /// spacing stays below `√v_min`.
    pub points: usize,
    /// Half-width of the square grid; `None` means `6√v_max`.
    pub half_width: Option<f64>,
}

impl Default for WignerSpec {
    fn default() -> Self {
        WignerSpec {
            points: 257,
            half_width: None,
        }
    }
}

/// The `W = W_max/e` contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourEllipse {
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Direction of the minor axis from the q axis.
    pub tilt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub q_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// Row-major, `density[i_p * q_axis.len() + i_q]`.
    pub density: Vec<f64>,
    pub contour: ContourEllipse,
}

impl WignerGrid {
    pub fn at(&self, i_q: usize, i_p: usize) -> f64 {
        self.density[i_p * self.q_axis.len() + i_q]
    }

    /// Trapezoid-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        let nq = self.q_axis.len();
        let np = self.p_axis.len();
        let dq = self.q_axis[1] - self.q_axis[0];
        let dp = self.p_axis[1] - self.p_axis[0];
        let w = |i: usize, n: usize| if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        let mut s = 0.0;
        for ip in 0..np {
            let row: f64 = (0..nq).map(|iq| w(iq, nq) * self.at(iq, ip)).sum();
            s += w(ip, np) * row;
        }
        s * dq * dp
    }
}

pub fn wigner_density(cov: &ConditionalCovariance, q: f64, p: f64) -> f64 {
    let det = cov.determinant();
    let quad = (cov.v_pp * q * q - 2.0 * cov.c_qp * q * p + cov.v_qq * p * p) / det;
    (-0.5 * quad).exp() / (2.0 * PI * det.sqrt())
}

pub fn wigner(cov: &ConditionalCovariance, spec: &WignerSpec) -> Result<WignerGrid> {
    let det = cov.determinant();
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::Numerical(format!(
            "singular covariance: det = {det}"
        )));
    }
    if spec.points < 3 {
        return Err(Error::invalid("points", "need at least 3 points per axis"));
    }
    let sigma = cov.v_max.sqrt();
    let half = spec.half_width.unwrap_or(6.0 * sigma);
    if !(half >= 4.0 * sigma) {
        return Err(Error::invalid(
            "half_width",
            format!(
                "grid must cover 4 standard deviations ({}), got {half}",
                4.0 * sigma
            ),
        ));
    }
    // Odd point count, raised until the spacing resolves the narrow axis.
    let resolve = (2.0 * half / cov.v_min.sqrt()).ceil() as usize + 1;
    let n = spec.points.max(resolve) | 1;
    let axis: Vec<f64> = (0..n)
        .map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect();
    let mut density = Vec::with_capacity(n * n);
    for &p in &axis {
        for &q in &axis {
            density.push(wigner_density(cov, q, p));
        }
    }
    Ok(WignerGrid {
        q_axis: axis.clone(),
        p_axis: axis,
        density,
        contour: ContourEllipse {
            semi_major: (2.0 * cov.v_max).sqrt(),
            semi_minor: (2.0 * cov.v_min).sqrt(),
            tilt: cov.theta,
        },
    })
}

/// Boundary cooperativities at one bath occupancy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryRow {
    pub n_th: f64,
    /// `Q²/(η n_th)`.
    pub i_iii: f64,
    /// `n_th^{1/3} Q^{2/3} / (4η)`.
    pub iii_iv: f64,
    /// `n_th`.
    pub iv_v: f64,
    /// `Q/η`.
    pub ii_v: f64,
    /// Fixed point of `C = n_tot^{1/3} Q^{2/3} / (4η)`.
    pub squeezing: f64,
    /// Exact root of `ηC n_tot = Q²`.
    pub rwa_exact: f64,
}

pub fn boundary_curves(q_factor: f64, eta: f64, n_th: &[f64]) -> Result<Vec<BoundaryRow>> {
    if !(q_factor > 0.0) {
        return Err(Error::invalid("q_factor", "must be positive"));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid("eta", "must lie in (0, 1]"));
    }
    n_th.iter()
        .map(|&n| {
            if !(n >= 0.0) {
                return Err(Error::invalid("n_th", "must be non-negative"));
            }
            let q2 = q_factor * q_factor;
            let m = n + 0.5;
            Ok(BoundaryRow {
                n_th: n,
                i_iii: q2 / (eta * n),
                iii_iv: n.cbrt() * q_factor.powf(2.0 / 3.0) / (4.0 * eta),
                iv_v: n,
                ii_v: q_factor / eta,
                squeezing: squeezing_threshold(q_factor, n, eta)?,
                rwa_exact: 2.0 * q2 / eta / (m + (m * m + 4.0 * q2 / eta).sqrt()),
            })
        })
        .collect()
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

/// Axes of the occupancy-versus-cooperativity regime map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeMapAxes {
    pub q_factor: f64,
    pub eta: f64,
    pub n_th: (f64, f64, usize),
    pub c: (f64, f64, usize),
}

impl Default for RegimeMapAxes {
    /// Spans all five regions at `Q = 1e5`, `η = 1`.
    fn default() -> Self {
        RegimeMapAxes {
            q_factor: 1e5,
            eta: 1.0,
            n_th: (1.0, 1e10, 101),
            c: (1e-2, 1e12, 141),
        }
    }
}

impl RegimeMapAxes {
    pub fn n_th_axis(&self) -> Vec<f64> {
        log_space(self.n_th.0, self.n_th.1, self.n_th.2)
    }

    pub fn c_axis(&self) -> Vec<f64> {
        log_space(self.c.0, self.c.1, self.c.2)
    }
}

/// Four illustrative states at `Q = 1e5`, `η = 1`, in regions I to IV.
pub fn representative_states() -> Vec<(&'static str, OscillatorParams)> {
    let p = |n: f64, c: f64| OscillatorParams::dimensionless(1e5, n, 1.0, c).expect("valid preset");
    vec![
        ("I", p(1e6, 1.0)),
        ("II", p(10.0, 1e3)),
        ("III", p(1e8, 1e5)),
        ("IV", p(1e8, 1e7)),
    ]
}
