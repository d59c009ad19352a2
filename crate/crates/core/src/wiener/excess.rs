//! Additive photocurrent excess noise and the filters that account for it.
//!
//! With excess PSD `s(ω)` the record spectrum is `S_YY + s = |M_0|² R`, where
//! `M_0` is the exact rational factor of the clean record and `R = 1 + s/S_YY`.
//! Only `R` is factored numerically (cepstrally); the causal projection is then
//! closed form because `S_xY/M_0*` has just the two oscillator poles in the
//! lower half-plane.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::spectra::{analytic_factor_at, oscillator_poles, s_yy, Target};
use super::table::{CepstralFactor, SpectrumTable};
use crate::conditional::{conditional_covariance, ConditionalCovariance};
use crate::error::{Error, Result};
use crate::params::{derive, DerivedQuantities, OscillatorParams};
use crate::quadrature::{gauss_legendre, integrate_scalar, Tolerance};

/// Offset that regularizes the pink spectrum at DC, rad/s.
pub const PINK_DC_OFFSET: f64 = 0.1;
pub const PINK_LEVEL: f64 = 0.1;

/// Excess photocurrent PSD in units of the shot-noise level.
#[derive(Debug, Clone, PartialEq)]
pub enum ExcessNoiseModel {
    /// `level · omega_ref / (|ω| + offset)`.
    Pink {
        level: f64,
        omega_ref: f64,
        offset: f64,
    },
    White(f64),
    /// Linear interpolation in `|ω|`; zero outside the tabulated range.
    Table {
        omega: Vec<f64>,
        psd: Vec<f64>,
    },
}

impl ExcessNoiseModel {
    /// The default pink model `0.1 Ω/(|ω| + 0.1 rad/s)`.
    pub fn pink(omega: f64) -> Self {
        ExcessNoiseModel::Pink {
            level: PINK_LEVEL,
            omega_ref: omega,
            offset: PINK_DC_OFFSET,
        }
    }

    pub fn table(omega: Vec<f64>, psd: Vec<f64>) -> Result<Self> {
        let m = ExcessNoiseModel::Table { omega, psd };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ExcessNoiseModel::Pink {
                level,
                omega_ref,
                offset,
            } => {
                if !(*level >= 0.0 && level.is_finite())
                    || !(*omega_ref > 0.0 && omega_ref.is_finite())
                {
                    return Err(Error::invalid(
                        "excess",
                        "pink level and reference must be non-negative and finite",
                    ));
                }
                if !(*offset > 0.0 && offset.is_finite()) {
                    return Err(Error::invalid("excess", "pink DC offset must be positive"));
                }
            }
            ExcessNoiseModel::White(s) => {
                if !(*s >= 0.0 && s.is_finite()) {
                    return Err(Error::invalid(
                        "excess",
                        format!("white level must be non-negative, got {s}"),
                    ));
                }
            }
            ExcessNoiseModel::Table { omega, psd } => {
                if omega.len() != psd.len() || omega.len() < 2 {
                    return Err(Error::invalid(
                        "excess",
                        "table needs at least two (omega, psd) rows",
                    ));
                }
                if omega.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
                    return Err(Error::invalid(
                        "excess",
                        "table frequencies must be non-negative and finite",
                    ));
                }
                if omega.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::invalid(
                        "excess",
                        "table frequencies must be strictly increasing",
                    ));
                }
                if let Some(s) = psd.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
                    return Err(Error::invalid(
                        "excess",
                        format!("table PSD must be non-negative, got {s}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn psd(&self, w: f64) -> f64 {
        let a = w.abs();
        match self {
            ExcessNoiseModel::Pink {
                level,
                omega_ref,
                offset,
            } => level * omega_ref / (a + offset),
            ExcessNoiseModel::White(s) => *s,
            ExcessNoiseModel::Table { omega, psd } => {
                if a < omega[0] || a > omega[omega.len() - 1] {
                    return 0.0;
                }
                let j = omega.partition_point(|x| *x <= a).clamp(1, omega.len() - 1);
                let t = (a - omega[j - 1]) / (omega[j] - omega[j - 1]);
                psd[j - 1] * (1.0 - t) + psd[j] * t
            }
        }
    }

    /// Frequencies (ω > 0) where the PSD changes character.
    pub fn features(&self) -> Vec<f64> {
        match self {
            ExcessNoiseModel::Pink { offset, .. } => {
                let mut f = vec![*offset];
                if let Some(c) = self.corner() {
                    f.push(c);
                }
                f
            }
            ExcessNoiseModel::White(_) => vec![],
            ExcessNoiseModel::Table { omega, .. } => {
                omega.iter().copied().filter(|w| *w > 0.0).collect()
            }
        }
    }

    pub fn dc_db(&self) -> f64 {
        10.0 * self.psd(0.0).log10()
    }

    /// Lowest `ω ≥ 0` at which the PSD falls to the shot-noise level.
    pub fn corner(&self) -> Option<f64> {
        match self {
            ExcessNoiseModel::Pink {
                level,
                omega_ref,
                offset,
            } => {
                let c = level * omega_ref - offset;
                (c > 0.0).then_some(c)
            }
            ExcessNoiseModel::White(_) => None,
            ExcessNoiseModel::Table { omega, psd } => {
                if psd[0] < 1.0 {
                    return None;
                }
                (1..omega.len()).find(|&j| psd[j] < 1.0).map(|j| {
                    let t = (psd[j - 1] - 1.0) / (psd[j - 1] - psd[j]);
                    omega[j - 1] + t * (omega[j] - omega[j - 1])
                })
            }
        }
    }
}

/// Grid for factoring the residual `R`.
///
/// The real line is mapped onto the circle by `ω = s·tan(θ/2)`, which carries the
/// upper half-plane onto the unit disk, so a cepstrum in `θ` is an exact power
/// series for `log M_R`. `log R` is split by a smooth partition of unity in
/// `log|ω|` into one band per `1/bands_per_decade` decades; each band gets its
/// own map scale, so structure from DC up to the cavity-scale rates stays resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualGrid {
    /// Angle samples per band.
    pub points: usize,
    pub bands_per_decade: f64,
}

impl Default for ResidualGrid {
    fn default() -> Self {
        ResidualGrid {
            points: 1 << 14,
            bands_per_decade: 1.0,
        }
    }
}

/// One band of the partition: map scale and the cepstrum of its share of `log R`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBand {
    pub scale: f64,
    pub cepstral: CepstralFactor,
}

impl ResidualBand {
    fn angle(&self, w: f64) -> f64 {
        2.0 * (w / self.scale).atan()
    }

    /// Catmull-Rom interpolation of the band's phase on the periodic angle grid.
    fn phase(&self, w: f64) -> f64 {
        let t = &self.cepstral.log_factor;
        let n = t.len() as i64;
        let x = self.angle(w) / t.d_omega;
        let k = x.floor();
        let u = x - k;
        let k = k as i64;
        let at = |j: i64| t.values[j.rem_euclid(n) as usize].im;
        let (p0, p1, p2, p3) = (at(k - 1), at(k), at(k + 1), at(k + 2));
        let (m1, m2) = (0.5 * (p2 - p0), 0.5 * (p3 - p1));
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * p1
            + (u3 - 2.0 * u2 + u) * m1
            + (-2.0 * u3 + 3.0 * u2) * p2
            + (u3 - u2) * m2
    }

    fn log_at(&self, z: C64) -> C64 {
        let i = C64::new(0.0, 1.0);
        let zeta = (self.scale + i * z) / (self.scale - i * z);
        self.cepstral.log_at(-i * zeta.ln())
    }
}

/// Causal factor `M_R` of `R = 1 + s/S_YY`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualFactor {
    pub bands: Vec<ResidualBand>,
    excess: ExcessNoiseModel,
    derived: DerivedQuantities,
}

/// Bins around `θ = 0` of the lowest band that are integrated adaptively.
const EXACT_BINS: i64 = 6;

/// C^∞ step rising from 0 at `x = −1/2` to 1 at `x = 1/2`.
fn smooth_step(x: f64) -> f64 {
    let psi = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let a = psi(x + 0.5);
    let b = psi(0.5 - x);
    if a + b == 0.0 {
        if x > 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        a / (a + b)
    }
}

/// Weight of band `j` of `count` at `u = log_r(|ω|/s_0)`.
fn band_weight(j: usize, count: usize, u: f64) -> f64 {
    let x = u - j as f64;
    let lower = if j == 0 { 1.0 } else { smooth_step(x + 0.5) };
    let upper = if j + 1 == count {
        0.0
    } else {
        smooth_step(x - 0.5)
    };
    lower - upper
}

impl ResidualFactor {
    pub fn new(
        d: &DerivedQuantities,
        excess: &ExcessNoiseModel,
        grid: ResidualGrid,
    ) -> Result<Self> {
        excess.validate()?;
        if grid.points < 16 || !grid.points.is_power_of_two() || !(grid.bands_per_decade > 0.0) {
            return Err(Error::invalid(
                "grid",
                "residual grid needs a power-of-two size >= 16 and positive band density",
            ));
        }
        let feats = excess.features();
        let lo = feats
            .iter()
            .copied()
            .chain([d.gamma])
            .fold(f64::INFINITY, f64::min);
        let hi = 10.0
            * feats
                .iter()
                .copied()
                .chain([d.omega, d.omega_prime, d.gamma_prime])
                .fold(0.0, f64::max);
        let ratio = 10f64.powf(1.0 / grid.bands_per_decade);
        let count = ((hi / lo).ln() / ratio.ln()).ceil().max(0.0) as usize + 1;
        let bands = (0..count)
            .map(|j| {
                let scale = lo * ratio.powi(j as i32);
                let weight = move |w: f64| {
                    if w == 0.0 {
                        return if j == 0 { 1.0 } else { 0.0 };
                    }
                    band_weight(j, count, (w.abs() / lo).ln() / ratio.ln())
                };
                let log_r = move |th: f64| {
                    let w = scale * (0.5 * th).tan();
                    let f = weight(w);
                    if f == 0.0 {
                        0.0
                    } else {
                        f * (excess.psd(w) / s_yy(d, w)).ln_1p()
                    }
                };
                let marks: Vec<f64> = if j == 0 {
                    let mut m: Vec<f64> = feats.iter().map(|w| 2.0 * (w / scale).atan()).collect();
                    m.extend(m.clone().iter().map(|t| -t));
                    m.push(0.0);
                    m
                } else {
                    vec![]
                };
                Self::band(grid.points, scale, log_r, &marks, j == 0)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ResidualFactor {
            bands,
            excess: excess.clone(),
            derived: *d,
        })
    }

    fn band<F: Fn(f64) -> f64 + Sync>(
        n: usize,
        scale: f64,
        log_r: F,
        marks: &[f64],
        exact_dc: bool,
    ) -> Result<ResidualBand> {
        let dth = 2.0 * std::f64::consts::PI / n as f64;
        let (x, wt) = gauss_legendre(8);
        let mut values: Vec<C64> = (0..n)
            .into_par_iter()
            .map(|k| {
                let t0 = if k < n / 2 {
                    k as f64 * dth
                } else {
                    (k as f64 - n as f64) * dth
                };
                let s: f64 = x
                    .iter()
                    .zip(&wt)
                    .map(|(xi, wi)| 0.5 * wi * log_r(t0 + 0.5 * dth * xi))
                    .sum();
                C64::new(s, 0.0)
            })
            .collect();
        if exact_dc {
            // Bins near DC see the sharpest structure; integrate them adaptively.
            let tol = Tolerance {
                abs: 1e-14,
                rel: 1e-10,
                max_intervals: 4000,
            };
            for k in -EXACT_BINS..=EXACT_BINS {
                let a = (k as f64 - 0.5) * dth;
                let b = (k as f64 + 0.5) * dth;
                let mut pts = vec![a, b];
                pts.extend(marks.iter().copied().filter(|t| *t > a && *t < b));
                pts.sort_by(|u, v| u.total_cmp(v));
                let (v, _) = integrate_scalar(&log_r, &pts, tol)?;
                values[k.rem_euclid(n as i64) as usize] = C64::new(v / dth, 0.0);
            }
        }
        if values.iter().any(|v| !v.re.is_finite()) {
            return Err(Error::Numerical(
                "residual log-spectrum is not finite".into(),
            ));
        }
        let table = SpectrumTable {
            d_omega: dth,
            values,
            power: false,
        };
        Ok(ResidualBand {
            scale,
            cepstral: CepstralFactor::from_log_table(&table),
        })
    }

    /// `log M_R(ω)` on the real axis: exact modulus, interpolated phase.
    pub fn log_at_real(&self, w: f64) -> C64 {
        let re = 0.5 * (self.excess.psd(w) / s_yy(&self.derived, w)).ln_1p();
        C64::new(re, self.bands.iter().map(|b| b.phase(w)).sum())
    }

    /// `log M_R(z)` for `Im z ≥ 0`.
    pub fn log_at(&self, z: C64) -> C64 {
        self.bands.iter().map(|b| b.log_at(z)).sum()
    }

    /// `1/M_R*(z) = 1/conj(M_R(conj z))` for `Im z ≤ 0`.
    pub fn anticausal_inverse_at(&self, z: C64) -> C64 {
        (-self.log_at(z.conj()).conj()).exp()
    }
}

/// Optimal filter under excess noise: `Σ r_j F_j/(ω − p_j) / (M_0 M_R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcessFilter {
    pub target: Target,
    pub poles: [C64; 2],
    /// Residues of the causal projection, already weighted by `1/M_R*(p_j)`.
    pub residues: [C64; 2],
    pub residual: Option<Arc<ResidualFactor>>,
    derived: DerivedQuantities,
}

impl ExcessFilter {
    pub fn eval(&self, w: f64) -> C64 {
        let num: C64 = (0..2).map(|j| self.residues[j] / (w - self.poles[j])).sum();
        let mut den = analytic_factor_at(&self.derived, w);
        if let Some(r) = &self.residual {
            den *= r.log_at_real(w).exp();
        }
        num / den
    }
}

/// Residues at the oscillator poles of `[S_xY/M_0*]₊`.
fn projection_residues(d: &DerivedQuantities, target: Target) -> ([C64; 2], [C64; 2]) {
    let p = oscillator_poles(d.omega, d.gamma);
    let k = d.record_gain() * 4.0 * d.gamma * d.omega * d.omega * d.n_tot;
    let op2 = d.omega_prime_sq();
    let nbar = |w: C64| C64::new(op2, 0.0) - w * w + C64::new(0.0, d.gamma_prime) * w;
    let mut r = [C64::new(0.0, 0.0); 2];
    for j in 0..2 {
        let other = p[1 - j];
        r[j] = k * (-1.0 / (p[j] - other)) / nbar(p[j]);
        if target == Target::Momentum {
            r[j] *= -C64::new(0.0, 1.0) * p[j] / d.omega;
        }
    }
    (p, r)
}

/// Position and momentum filters for the record with excess noise; `None` gives the clean filters.
pub fn excess_filters(
    d: &DerivedQuantities,
    excess: Option<&ExcessNoiseModel>,
    grid: ResidualGrid,
) -> Result<(ExcessFilter, ExcessFilter)> {
    if !(d.c > 0.0) {
        return Err(Error::invalid("c", "optimal filters need C > 0"));
    }
    let residual = match excess {
        Some(e) => Some(Arc::new(ResidualFactor::new(d, e, grid)?)),
        None => None,
    };
    let build = |target| {
        let (poles, mut residues) = projection_residues(d, target);
        if let Some(r) = &residual {
            for j in 0..2 {
                residues[j] *= r.anticausal_inverse_at(poles[j]);
            }
        }
        ExcessFilter {
            target,
            poles,
            residues,
            residual: residual.clone(),
            derived: *d,
        }
    };
    Ok((build(Target::Position), build(Target::Momentum)))
}

/// Conditional covariance achieved by the excess-aware filters.
pub fn excess_covariance(
    d: &DerivedQuantities,
    excess: Option<&ExcessNoiseModel>,
    grid: ResidualGrid,
) -> Result<ConditionalCovariance> {
    let (hq, hp) = excess_filters(d, excess, grid)?;
    super::variance::error_covariance(
        d,
        excess,
        &super::filter::FilterResponse::Excess(hq),
        &super::filter::FilterResponse::Excess(hp),
    )
}

/// Cooperativities at which the optimal quadrature variance reaches 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdShift {
    pub clean: f64,
    pub excess: f64,
}

impl ThresholdShift {
    pub fn ratio(&self) -> f64 {
        self.excess / self.clean
    }
}

const THRESHOLD_REL_TOL: f64 = 1e-4;

/// Bisection in `ln C` for `v_min(C) = 1`, given a bracket with `f(lo) > 1 > f(hi)`.
fn bisect_log<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..200 {
        if (hi / lo).ln() < THRESHOLD_REL_TOL {
            return Ok((lo * hi).sqrt());
        }
        let mid = (lo * hi).sqrt();
        if f(mid)? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        what: "threshold bisection",
        iterations: 200,
    })
}

fn bracket<F: Fn(f64) -> Result<f64>>(f: &F, start: f64) -> Result<(f64, f64)> {
    let mut lo = start;
    let mut hi = start;
    if f(start)? > 1.0 {
        for _ in 0..80 {
            hi *= 2.0;
            if f(hi)? <= 1.0 {
                return Ok((hi / 2.0, hi));
            }
        }
    } else {
        for _ in 0..80 {
            lo /= 2.0;
            if f(lo)? > 1.0 {
                return Ok((lo, lo * 2.0));
            }
        }
    }
    Err(Error::Numerical(format!(
        "no squeezing threshold found near C = {start}"
    )))
}

/// Squeezing threshold with and without excess noise, both from the same
/// semi-analytic filter chain for the excess case and the closed form for the clean one.
pub fn threshold_shift(
    params: &OscillatorParams,
    excess: &ExcessNoiseModel,
    grid: ResidualGrid,
) -> Result<ThresholdShift> {
    let clean_vmin = |c: f64| -> Result<f64> {
        Ok(conditional_covariance(&derive(&params.with_cooperativity(c)?)?)?.v_min)
    };
    let excess_vmin = |c: f64| -> Result<f64> {
        Ok(excess_covariance(&derive(&params.with_cooperativity(c)?)?, Some(excess), grid)?.v_min)
    };
    let start = crate::params::squeezing_threshold(
        params.omega / params.gamma,
        params.n_th()?,
        params.eta,
    )?;
    let (lo, hi) = bracket(&clean_vmin, start)?;
    let clean = bisect_log(clean_vmin, lo, hi)?;
    let (lo, hi) = bracket(&excess_vmin, clean)?;
    let with_excess = bisect_log(excess_vmin, lo, hi)?;
    Ok(ThresholdShift {
        clean,
        excess: with_excess,
    })
}
