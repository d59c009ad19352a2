//! Estimation-error (co)variances as spectral integrals.
//!
//! For a record `Y = g q + n` with `S_nn = 1 + s` and a target `x = T q`, the error
//! spectrum of `x̂ = H ⊛ Y` is `|T − gH|² S_qq + |H|² S_nn`. This equals
//! `S_xx − 2 Re(H* S_xY) + |H|² S_YY` but has no cancelling terms.

use super::excess::ExcessNoiseModel;
use super::filter::FilterResponse;
use super::spectra::{s_qq, Target};
use crate::conditional::ConditionalCovariance;
use crate::error::{Error, Result};
use crate::params::DerivedQuantities;
use crate::quadrature::{integrate, Tolerance};

/// Upper integration limit in units of the largest mechanical rate.
const CUTOFF: f64 = 1e3;
/// Largest acceptable tail correction relative to the integral.
const TAIL_LIMIT: f64 = 1e-2;

/// Breakpoints on `[0, W]` that resolve every spectral feature.
pub fn breakpoints(d: &DerivedQuantities, excess: Option<&ExcessNoiseModel>) -> Vec<f64> {
    let scale = d.omega.max(d.omega_prime).max(d.gamma_prime);
    let top = CUTOFF * scale;
    let wd = (d.omega * d.omega - 0.25 * d.gamma * d.gamma)
        .max(0.0)
        .sqrt();
    let mut pts = vec![d.gamma, d.omega, d.omega_prime, d.gamma_prime, wd];
    for k in [0.5, 2.0, 8.0, 32.0, 128.0] {
        pts.push(wd - k * d.gamma);
        pts.push(wd + k * d.gamma);
    }
    if let Some(e) = excess {
        pts.extend(e.features());
    }
    let low = pts
        .iter()
        .copied()
        .filter(|w| *w > 0.0)
        .fold(f64::INFINITY, f64::min);
    let mut w = top;
    while w > 1e-2 * low {
        pts.push(w);
        w /= 10.0;
    }
    pts.push(0.0);
    pts.retain(|w| *w >= 0.0 && *w <= top && w.is_finite());
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(f64::MIN_POSITIVE));
    pts
}

fn integrate_even<const N: usize, F: Fn(f64) -> [f64; N]>(
    f: F,
    d: &DerivedQuantities,
    excess: Option<&ExcessNoiseModel>,
    rel: f64,
) -> Result<[f64; N]> {
    let pts = breakpoints(d, excess);
    let top = *pts.last().expect("breakpoints are non-empty");
    let tol = Tolerance {
        abs: 0.0,
        rel,
        max_intervals: 200_000,
    };
    let est = integrate(&f, &pts, tol)?;
    let tail = f(top);
    let mut out = [0.0; N];
    for i in 0..N {
        // Integrand decays as 1/ω² beyond every feature.
        let t = tail[i] * top;
        if t.abs() > TAIL_LIMIT * est.value[i].abs().max(f64::MIN_POSITIVE) && t.abs() > 1e-300 {
            return Err(Error::NoConvergence {
                what: "variance integral tail",
                iterations: pts.len(),
            });
        }
        out[i] = 2.0 * (est.value[i] + t) / (2.0 * std::f64::consts::PI);
    }
    Ok(out)
}

/// Interpolated responses are only piecewise smooth; ask less of them.
fn relative_tolerance(filters: &[&FilterResponse]) -> f64 {
    if filters
        .iter()
        .any(|f| matches!(f, FilterResponse::Excess(_) | FilterResponse::Tabulated(_)))
    {
        1e-8
    } else {
        1e-10
    }
}

fn noise_psd(excess: Option<&ExcessNoiseModel>, w: f64) -> f64 {
    1.0 + excess.map_or(0.0, |e| e.psd(w))
}

/// Error variance of `target` estimated by `h`.
pub fn error_variance(
    d: &DerivedQuantities,
    excess: Option<&ExcessNoiseModel>,
    target: Target,
    h: &FilterResponse,
) -> Result<f64> {
    let g = d.record_gain();
    let [v] = integrate_even(
        |w| {
            let hw = h.eval(w);
            let a = target.transfer(d, w) - g * hw;
            [a.norm_sqr() * s_qq(d, w) + hw.norm_sqr() * noise_psd(excess, w)]
        },
        d,
        excess,
        relative_tolerance(&[h]),
    )?;
    Ok(v)
}

/// Full error covariance of the pair `(hq, hp)`; the cross term is the real part.
pub fn error_covariance(
    d: &DerivedQuantities,
    excess: Option<&ExcessNoiseModel>,
    hq: &FilterResponse,
    hp: &FilterResponse,
) -> Result<ConditionalCovariance> {
    let g = d.record_gain();
    let [vq, vp, c] = integrate_even(
        |w| {
            let (q, p) = (hq.eval(w), hp.eval(w));
            let sq = s_qq(d, w);
            let sn = noise_psd(excess, w);
            let a = Target::Position.transfer(d, w) - g * q;
            let b = Target::Momentum.transfer(d, w) - g * p;
            [
                a.norm_sqr() * sq + q.norm_sqr() * sn,
                b.norm_sqr() * sq + p.norm_sqr() * sn,
                (a * b.conj() * sq + q * p.conj() * sn).re,
            ]
        },
        d,
        excess,
        relative_tolerance(&[hq, hp]),
    )?;
    ConditionalCovariance::from_entries(vq, vp, c)
}
