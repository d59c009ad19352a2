//! Causal estimation filters: closed forms, Wiener synthesis and impulse responses.

use num_complex::Complex64 as C64;

use super::excess::ExcessFilter;
use super::rational::{spectral_factor_rational, RationalSpectrum, Zpk};
use super::spectra::{susceptibility, Target};
use super::table::SpectrumTable;
use crate::error::{Error, Result};
use crate::params::DerivedQuantities;
use crate::quadrature::gauss_legendre;

/// Closed-form optimal filter for the clean record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticFilter {
    pub target: Target,
    pub coef_a: f64,
    pub coef_b: f64,
    pub omega: f64,
    pub omega_prime: f64,
    pub gamma_prime: f64,
    /// `(Ω′² − Ω²)/(Γ′ + Γ)`, used by the momentum filter.
    pub k_prime: f64,
}

impl AnalyticFilter {
    pub fn new(d: &DerivedQuantities, target: Target) -> Result<Self> {
        if !(d.c > 0.0) {
            return Err(Error::invalid("c", "optimal filters need C > 0"));
        }
        if !(d.gamma_prime * d.gamma_prime > 0.0) {
            return Err(Error::Numerical(format!(
                "gamma_prime^2 = {} is not positive",
                d.gamma_prime.powi(2)
            )));
        }
        Ok(AnalyticFilter {
            target,
            coef_a: d.coef_a,
            coef_b: d.coef_b,
            omega: d.omega,
            omega_prime: d.omega_prime,
            gamma_prime: d.gamma_prime,
            k_prime: d.stiffening / (d.gamma_prime + d.gamma),
        })
    }

    pub fn eval(&self, w: f64) -> C64 {
        let chi = susceptibility(self.omega_prime, self.gamma_prime, w);
        match self.target {
            Target::Position => self.coef_a * C64::new(1.0, -self.coef_b * w) * chi,
            Target::Momentum => {
                let ab = self.coef_a * self.coef_b / self.omega;
                -ab * C64::new(self.omega * self.omega, w * self.k_prime) * chi
            }
        }
    }

    /// `h(t)` for `t ≥ 0` (the right limit at `t = 0`).
    pub fn impulse_at(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let (g, dg) = damped_kernel(self.omega_prime, self.gamma_prime, t);
        match self.target {
            Target::Position => self.coef_a * (g + self.coef_b * dg),
            Target::Momentum => {
                let ab = self.coef_a * self.coef_b / self.omega;
                -ab * (self.omega * self.omega * g - self.k_prime * dg)
            }
        }
    }
}

/// Inverse transform of `1/(Ω₀² − ω² − iΓω)` and its time derivative.
pub fn damped_kernel(omega0: f64, gamma: f64, t: f64) -> (f64, f64) {
    let wd = C64::new(omega0 * omega0 - 0.25 * gamma * gamma, 0.0).sqrt();
    let i = C64::new(0.0, 1.0);
    let lp = -0.5 * gamma + i * wd;
    let lm = -0.5 * gamma - i * wd;
    let sep = lp - lm;
    if (sep * t).norm() < 1e-6 {
        let lbar = -0.5 * gamma;
        let e = (lbar * t).exp();
        return (t * e, e * (1.0 + lbar * t));
    }
    let ep = (lp * t).exp();
    let em = (lm * t).exp();
    ((((ep - em) / sep).re), ((lp * ep - lm * em) / sep).re)
}

/// Discrete causal kernel for a record of integrate-and-dump samples
/// `y_k = (1/dt)∫_{t_k − dt}^{t_k} y(t) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    pub dt: f64,
    /// `h(m dt)`, `m = 0, 1, ...` (right limit at 0).
    pub taps: Vec<f64>,
    /// Convolution weights `c_m = ∫_{m dt}^{(m+1) dt} h`, so `x̂_k = Σ_m c_m y_{k−m}`.
    pub kernel: Vec<f64>,
    /// Largest `|h(t < 0)|` relative to the peak (FFT-derived responses only).
    pub leakage: f64,
}

impl ImpulseResponse {
    /// From a pointwise `h(t)`, `t ≥ 0`; bin integrals by 4-point Gauss–Legendre.
    pub fn from_fn<F: Fn(f64) -> f64>(dt: f64, len: usize, h: F) -> Self {
        let (x, w) = gauss_legendre(4);
        let taps = (0..len).map(|m| h(m as f64 * dt)).collect();
        let kernel = (0..len)
            .map(|m| {
                let mid = (m as f64 + 0.5) * dt;
                x.iter()
                    .zip(&w)
                    .map(|(xi, wi)| 0.5 * dt * wi * h(mid + 0.5 * dt * xi))
                    .sum()
            })
            .collect();
        ImpulseResponse {
            dt,
            taps,
            kernel,
            leakage: 0.0,
        }
    }

    /// `x̂_k = weight · y_k`.
    pub fn delta(dt: f64, weight: f64) -> Self {
        ImpulseResponse {
            dt,
            taps: vec![weight / dt],
            kernel: vec![weight],
            leakage: 0.0,
        }
    }

    pub fn zero(dt: f64) -> Self {
        ImpulseResponse {
            dt,
            taps: vec![0.0],
            kernel: vec![0.0],
            leakage: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.kernel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.is_empty()
    }

    /// Discrete-time frequency response `Σ_m kernel[m] e^{iω m dt}`.
    pub fn frequency_response(&self, w: f64) -> C64 {
        let step = C64::from_polar(1.0, w * self.dt);
        let mut ph = C64::new(1.0, 0.0);
        let mut s = C64::new(0.0, 0.0);
        for k in &self.kernel {
            s += k * ph;
            ph *= step;
        }
        s
    }
}

pub fn samples_for(dt: f64, truncation: f64) -> Result<usize> {
    if !(dt > 0.0) || !(truncation >= 0.0) {
        return Err(Error::invalid(
            "dt",
            "time step must be positive and truncation non-negative",
        ));
    }
    Ok((truncation / dt).ceil() as usize + 1)
}

/// `(1 − e^{−iω dt})/(iω dt)`, the transform of a unit-area box on `[−dt, 0]`.
fn box_average(w: f64, dt: f64) -> C64 {
    let x = w * dt;
    if x.abs() < 1e-6 {
        return C64::new(1.0 - x * x / 6.0, -0.5 * x);
    }
    (1.0 - C64::from_polar(1.0, -x)) / C64::new(0.0, x)
}

/// Impulse response from pointwise `H(ω)` on a grid with time step `dt`.
pub fn band_limited_impulse<F: Fn(f64) -> C64>(
    h: F,
    dt: f64,
    truncation: f64,
) -> Result<ImpulseResponse> {
    let len = samples_for(dt, truncation)?;
    let n = (8 * len).next_power_of_two().max(1024);
    let d_omega = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    let table = SpectrumTable::from_fn(n, d_omega, false, h)?;
    Ok(table_impulse(&table, len))
}

fn table_impulse(table: &SpectrumTable, len: usize) -> ImpulseResponse {
    let n = table.len();
    let dt = table.dt();
    let time = table.to_time();
    let keep = len.min(n / 2);
    let taps: Vec<f64> = time.iter().take(keep).map(|v| v.re / dt).collect();
    let binned = table.map(false, |w, v| v * box_average(w, dt)).to_time();
    let kernel: Vec<f64> = binned.iter().take(keep).map(|v| v.re).collect();
    let peak = time.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let neg = time
        .iter()
        .skip(n / 2 + 1)
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    let leakage = if peak > 0.0 { neg / peak } else { 0.0 };
    ImpulseResponse {
        dt,
        taps,
        kernel,
        leakage,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FilterResponse {
    Analytic(AnalyticFilter),
    Rational(Zpk),
    Tabulated(SpectrumTable),
    Excess(ExcessFilter),
}

impl FilterResponse {
    pub fn eval(&self, w: f64) -> C64 {
        match self {
            FilterResponse::Analytic(f) => f.eval(w),
            FilterResponse::Rational(z) => {
                if z.is_zero() {
                    C64::new(0.0, 0.0)
                } else {
                    z.eval_real(w)
                }
            }
            FilterResponse::Tabulated(t) => t.interpolate(w),
            FilterResponse::Excess(e) => e.eval(w),
        }
    }

    /// Samples of `h(t)` at step `dt` up to `truncation`.
    pub fn impulse_response(&self, dt: f64, truncation: f64) -> Result<ImpulseResponse> {
        let len = samples_for(dt, truncation)?;
        match self {
            FilterResponse::Analytic(f) => {
                Ok(ImpulseResponse::from_fn(dt, len, |t| f.impulse_at(t)))
            }
            FilterResponse::Rational(z) => {
                if z.is_zero() {
                    return Ok(ImpulseResponse::zero(dt));
                }
                let pf = z.partial_fractions()?;
                if pf.terms.iter().any(|(p, _)| p.im >= 0.0) {
                    return Err(Error::Numerical("rational filter is not causal".into()));
                }
                let mut r = ImpulseResponse::from_fn(dt, len, |t| pf.impulse_at(t).re);
                r.kernel[0] += pf.direct.re;
                Ok(r)
            }
            FilterResponse::Tabulated(t) => {
                if ((t.dt() - dt) / dt).abs() > 1e-12 {
                    return Err(Error::invalid(
                        "dt",
                        format!("table time step {} does not match requested {dt}", t.dt()),
                    ));
                }
                Ok(table_impulse(t, len))
            }
            FilterResponse::Excess(e) => band_limited_impulse(|w| e.eval(w), dt, truncation),
        }
    }
}

pub fn position_filter(d: &DerivedQuantities) -> Result<FilterResponse> {
    Ok(FilterResponse::Analytic(AnalyticFilter::new(
        d,
        Target::Position,
    )?))
}

pub fn momentum_filter(d: &DerivedQuantities) -> Result<FilterResponse> {
    Ok(FilterResponse::Analytic(AnalyticFilter::new(
        d,
        Target::Momentum,
    )?))
}

/// `H = (1/M)[S_xy/M*]₊` for a given causal factor `M` of the record spectrum.
pub fn wiener_from_factor(s_xy: &Zpk, m: &Zpk) -> Result<Zpk> {
    if s_xy.is_zero() {
        return Ok(Zpk::zero());
    }
    let g = s_xy.mul(&m.conj_reflect().recip()?);
    let plus = g.causal_part()?.to_zpk()?;
    if plus.is_zero() {
        return Ok(Zpk::zero());
    }
    Ok(plus.mul(&m.recip()?))
}

/// Rational Wiener synthesis: factors `s_yy` by root finding.
pub fn wiener_from_spectra(s_xy: &Zpk, s_yy: &RationalSpectrum) -> Result<FilterResponse> {
    let m = spectral_factor_rational(s_yy)?;
    Ok(FilterResponse::Rational(wiener_from_factor(s_xy, &m)?))
}

/// Tabulated Wiener synthesis with a point-sampled cepstral factor.
pub fn wiener_from_tables(s_xy: &SpectrumTable, s_yy: &SpectrumTable) -> Result<FilterResponse> {
    let m = s_yy.cepstral_factor()?.factor();
    let g = s_xy.zip_with(&m, false, |x, mm| x / mm.conj())?;
    let h = g.causal_part().zip_with(&m, false, |gp, mm| gp / mm)?;
    Ok(FilterResponse::Tabulated(h))
}

/// `(A, B, Ω′, Γ′)` read off a one-zero, two-pole position filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveredCoefficients {
    pub coef_a: f64,
    pub coef_b: f64,
    pub omega_prime: f64,
    pub gamma_prime: f64,
}

impl RecoveredCoefficients {
    pub fn from_zpk(h: &Zpk) -> Result<Self> {
        if h.zeros.len() != 1 || h.poles.len() != 2 {
            return Err(Error::Numerical(format!(
                "expected one zero and two poles, got {} and {}",
                h.zeros.len(),
                h.poles.len()
            )));
        }
        let i = C64::new(0.0, 1.0);
        let a = h.gain * h.zeros[0];
        let b = -i * h.gain / a;
        let op2 = -(h.poles[0] * h.poles[1]);
        let gp = i * (h.poles[0] + h.poles[1]);
        Ok(RecoveredCoefficients {
            coef_a: a.re,
            coef_b: b.re,
            omega_prime: op2.re.sqrt(),
            gamma_prime: gp.re,
        })
    }
}
