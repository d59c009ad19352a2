//! Time-domain simulation of the photocurrent record and empirical filter errors.
//!
//! The record is classical and integrated over each step:
//! `y_k = g·(q_{k−1} + q_k)/2 + n_k` with `n_k ~ N(0, 1/dt)`, so the discrete white
//! noise has unit two-sided PSD. The latent `(q, p)` evolve by the exact
//! discretization of the linear SDE.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::DerivedQuantities;
use crate::quadrature::{integrate, Tolerance};
use crate::riccati::{lyapunov, Mat2};
use crate::wiener::excess::ExcessNoiseModel;
use crate::wiener::filter::ImpulseResponse;
use crate::wiener::table::{fft_forward, fft_inverse};

/// `exp(−Γ′ T/2)` must fall below this for a truncation `T`.
pub const TRUNCATION_RESIDUE: f64 = 1e-4;
/// Bootstrap resamples per standard error.
pub const BOOTSTRAP_RESAMPLES: usize = 200;
pub const MIN_EFFECTIVE_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub dt: f64,
    /// Total record length, including burn-in.
    pub duration: f64,
    pub burn_in: f64,
    pub trajectories: usize,
    pub seed: u64,
    pub filter_truncation: f64,
}

impl SimulationConfig {
    pub fn max_dt(d: &DerivedQuantities) -> f64 {
        (2.0 * std::f64::consts::PI / d.omega_prime).min(1.0 / d.gamma_prime) / 20.0
    }

    pub fn min_burn_in(d: &DerivedQuantities) -> f64 {
        (10.0 / d.gamma_prime).max(10.0 / d.gamma)
    }

    pub fn min_truncation(d: &DerivedQuantities) -> f64 {
        -2.0 * TRUNCATION_RESIDUE.ln() / d.gamma_prime
    }

    /// Smallest admissible burn-in and truncation, `dt` at the bound, and a
    /// statistics window of `window` seconds.
    pub fn for_window(d: &DerivedQuantities, window: f64, trajectories: usize, seed: u64) -> Self {
        let burn_in = Self::min_burn_in(d);
        let filter_truncation = 1.001 * Self::min_truncation(d);
        SimulationConfig {
            dt: Self::max_dt(d),
            duration: burn_in + filter_truncation + window,
            burn_in,
            trajectories,
            seed,
            filter_truncation,
        }
    }

    pub fn samples(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// First index that enters the statistics.
    pub fn first_scored(&self) -> usize {
        ((self.burn_in + self.filter_truncation) / self.dt).ceil() as usize
    }

    pub fn validate(&self, d: &DerivedQuantities) -> Result<()> {
        let slack = 1.0 + 1e-12;
        if !(self.dt > 0.0) || self.dt > Self::max_dt(d) * slack {
            return Err(Error::invalid(
                "dt",
                format!(
                    "must be positive and at most min(2pi/omega', 1/gamma')/20 = {:e}, got {:e}",
                    Self::max_dt(d),
                    self.dt
                ),
            ));
        }
        if !(self.burn_in * slack >= Self::min_burn_in(d)) {
            return Err(Error::invalid(
                "burn_in",
                format!(
                    "must be at least 10/gamma' and 10/gamma = {:e}, got {:e}",
                    Self::min_burn_in(d),
                    self.burn_in
                ),
            ));
        }
        if !(self.filter_truncation > Self::min_truncation(d)) {
            return Err(Error::invalid(
                "filter_truncation",
                format!(
                    "needs exp(-gamma' T/2) < 1e-4, i.e. T > {:e}, got {:e}",
                    Self::min_truncation(d),
                    self.filter_truncation
                ),
            ));
        }
        if self.trajectories == 0 {
            return Err(Error::invalid(
                "trajectories",
                "need at least one trajectory",
            ));
        }
        if !(self.duration.is_finite()) || self.samples() <= self.first_scored() {
            return Err(Error::invalid(
                "duration",
                "record ends before burn-in plus filter truncation",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub y: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub dt: f64,
    pub seed: u64,
}

/// One-step transition `Φ = e^{A dt}` and its noise covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    pub transition: Mat2,
    pub noise: Mat2,
    pub stationary: Mat2,
}

fn expm_drift(d: &DerivedQuantities, t: f64) -> Mat2 {
    // A = [[0, Ω], [−Ω, −Γ]]; e^{At} = e^{−Γt/2}[cosh(st) I + sinh(st)/s (A + Γ/2 I)].
    let s = C64::new(0.25 * d.gamma * d.gamma - d.omega * d.omega, 0.0).sqrt();
    let e = (-0.5 * d.gamma * t).exp();
    let ch = (s * t).cosh().re;
    let sh = if (s * t).norm() < 1e-8 {
        t
    } else {
        ((s * t).sinh() / s).re
    };
    let h = 0.5 * d.gamma;
    [
        [e * (ch + sh * h), e * sh * d.omega],
        [-e * sh * d.omega, e * (ch - sh * h)],
    ]
}

impl Discretization {
    pub fn new(d: &DerivedQuantities, dt: f64) -> Result<Self> {
        let transition = expm_drift(d, dt);
        let diff = 4.0 * d.gamma * d.n_tot;
        let tol = Tolerance {
            abs: 0.0,
            rel: 1e-13,
            max_intervals: 2000,
        };
        let est = integrate(
            |u| {
                let f = expm_drift(d, u);
                [
                    diff * f[0][1] * f[0][1],
                    diff * f[0][1] * f[1][1],
                    diff * f[1][1] * f[1][1],
                ]
            },
            &[0.0, dt],
            tol,
        )?;
        let [a, b, c] = est.value;
        let drift = [[0.0, d.omega], [-d.omega, -d.gamma]];
        let stationary = lyapunov(&drift, &[[0.0, 0.0], [0.0, diff]])?;
        let out = Discretization {
            transition,
            noise: [[a, b], [b, c]],
            stationary,
        };
        out.check_stationary()?;
        Ok(out)
    }

    /// `Φ P Φᵀ + Q_d` must reproduce the Lyapunov covariance `P` to 1%.
    pub fn check_stationary(&self) -> Result<()> {
        let f = &self.transition;
        let p = &self.stationary;
        let mut drift = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let mut s = self.noise[i][j];
                for k in 0..2 {
                    for l in 0..2 {
                        s += f[i][k] * p[k][l] * f[j][l];
                    }
                }
                let scale = (p[i][i] * p[j][j]).sqrt();
                drift = drift.max((s - p[i][j]).abs() / scale);
            }
        }
        if !(drift <= 1e-2) {
            return Err(Error::Numerical(format!(
                "unstable discretization: stationary variance drifts by {drift:e}"
            )));
        }
        Ok(())
    }
}

fn cholesky(m: &Mat2) -> Mat2 {
    let l11 = m[0][0].max(0.0).sqrt();
    let l21 = if l11 > 0.0 { m[1][0] / l11 } else { 0.0 };
    let l22 = (m[1][1] - l21 * l21).max(0.0).sqrt();
    [[l11, 0.0], [l21, l22]]
}

pub fn trajectory_seed(seed: u64, k: u64) -> u64 {
    seed ^ k
}

/// Additive excess noise with PSD `s(ω)`, shaped from white noise by one
/// whole-record FFT.
fn excess_noise(model: &ExcessNoiseModel, n: usize, dt: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let scale = dt.recip().sqrt();
    let mut x: Vec<C64> = (0..n)
        .map(|_| C64::new(scale * rng.sample::<f64, _>(StandardNormal), 0.0))
        .collect();
    fft_forward(&mut x);
    let dw = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    for (k, v) in x.iter_mut().enumerate() {
        let w = if k <= n / 2 {
            k as f64 * dw
        } else {
            (k as f64 - n as f64) * dw
        };
        *v *= model.psd(w).sqrt();
    }
    fft_inverse(&mut x);
    x.iter().map(|v| v.re / n as f64).collect()
}

/// One trajectory, started from the stationary distribution.
pub fn simulate(
    d: &DerivedQuantities,
    config: &SimulationConfig,
    excess: Option<&ExcessNoiseModel>,
    trajectory: u64,
) -> Result<MeasurementRecord> {
    config.validate(d)?;
    let disc = Discretization::new(d, config.dt)?;
    Ok(simulate_with(d, config, &disc, excess, trajectory))
}

fn simulate_with(
    d: &DerivedQuantities,
    config: &SimulationConfig,
    disc: &Discretization,
    excess: Option<&ExcessNoiseModel>,
    trajectory: u64,
) -> MeasurementRecord {
    let seed = trajectory_seed(config.seed, trajectory);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.samples();
    let g = d.record_gain();
    let shot = config.dt.recip().sqrt();
    let l0 = cholesky(&disc.stationary);
    let lq = cholesky(&disc.noise);
    let f = disc.transition;
    let (z1, z2): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
    let mut x = [l0[0][0] * z1, l0[1][0] * z1 + l0[1][1] * z2];
    let mut q = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let prev = x[0];
        let (z1, z2): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        x = [
            f[0][0] * x[0] + f[0][1] * x[1] + lq[0][0] * z1,
            f[1][0] * x[0] + f[1][1] * x[1] + lq[1][0] * z1 + lq[1][1] * z2,
        ];
        q.push(x[0]);
        p.push(x[1]);
        y.push(g * 0.5 * (prev + x[0]) + shot * rng.sample::<f64, _>(StandardNormal));
    }
    if let Some(e) = excess {
        for (yk, nk) in y.iter_mut().zip(excess_noise(e, n, config.dt, &mut rng)) {
            *yk += nk;
        }
    }
    MeasurementRecord {
        y,
        q,
        p,
        dt: config.dt,
        seed,
    }
}

const DIRECT_CONVOLUTION_TAPS: usize = 64;

/// Causal convolution `x̂_k = Σ_m kernel[m] y_{k−m}` over the available past.
pub fn apply_filter(record: &MeasurementRecord, h: &ImpulseResponse) -> Result<Vec<f64>> {
    if ((h.dt - record.dt) / record.dt).abs() > 1e-12 {
        return Err(Error::invalid(
            "dt",
            format!("filter sampled at {:e} but record at {:e}", h.dt, record.dt),
        ));
    }
    Ok(convolve(&record.y, &h.kernel))
}

fn convolve(y: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = y.len();
    if kernel.len() <= DIRECT_CONVOLUTION_TAPS {
        return (0..n)
            .map(|k| {
                kernel
                    .iter()
                    .take(k + 1)
                    .enumerate()
                    .map(|(m, h)| h * y[k - m])
                    .sum()
            })
            .collect();
    }
    let size = (n + kernel.len()).next_power_of_two();
    let mut a: Vec<C64> = y.iter().map(|v| C64::new(*v, 0.0)).collect();
    a.resize(size, C64::new(0.0, 0.0));
    let mut b: Vec<C64> = kernel.iter().map(|v| C64::new(*v, 0.0)).collect();
    b.resize(size, C64::new(0.0, 0.0));
    fft_forward(&mut a);
    fft_forward(&mut b);
    a.iter_mut().zip(&b).for_each(|(x, k)| *x *= k);
    fft_inverse(&mut a);
    a.iter().take(n).map(|v| v.re / size as f64).collect()
}

/// Empirical moments with block-bootstrap standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStatistics {
    pub v_qq: f64,
    pub v_pp: f64,
    pub c_qp: f64,
    pub se_qq: f64,
    pub se_pp: f64,
    pub se_qp: f64,
    pub samples: usize,
    /// Number of bootstrap blocks.
    pub blocks: usize,
}

/// Per-block means of three products; the unit the bootstrap resamples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockMoments {
    pub means: Vec<[f64; 3]>,
    pub samples: usize,
}

impl BlockMoments {
    pub fn from_series(a: &[f64], b: &[f64], block: usize) -> Self {
        let block = block.max(1);
        let n = a.len().min(b.len());
        let mut means = Vec::with_capacity(n / block);
        for s in (0..n).step_by(block) {
            let e = (s + block).min(n);
            if e - s < block {
                break;
            }
            let mut m = [0.0; 3];
            for k in s..e {
                m[0] += a[k] * a[k];
                m[1] += b[k] * b[k];
                m[2] += a[k] * b[k];
            }
            let len = (e - s) as f64;
            means.push([m[0] / len, m[1] / len, m[2] / len]);
        }
        let samples = means.len() * block;
        BlockMoments { means, samples }
    }

    pub fn extend(&mut self, other: BlockMoments) {
        self.means.extend(other.means);
        self.samples += other.samples;
    }

    pub fn statistics(&self, seed: u64) -> Result<ErrorStatistics> {
        let nb = self.means.len();
        if nb < MIN_EFFECTIVE_SAMPLES {
            return Err(Error::invalid(
                "duration",
                format!("only {nb} independent blocks; need at least {MIN_EFFECTIVE_SAMPLES}"),
            ));
        }
        let mean = |idx: &mut dyn Iterator<Item = usize>| {
            let mut s = [0.0; 3];
            for i in idx {
                for (acc, m) in s.iter_mut().zip(self.means[i]) {
                    *acc += m;
                }
            }
            s.map(|v| v / nb as f64)
        };
        let centre = mean(&mut (0..nb));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut var = [0.0; 3];
        for _ in 0..BOOTSTRAP_RESAMPLES {
            let idx: Vec<usize> = (0..nb).map(|_| rng.random_range(0..nb)).collect();
            let m = mean(&mut idx.into_iter());
            for j in 0..3 {
                var[j] += (m[j] - centre[j]).powi(2);
            }
        }
        let se = var.map(|v| (v / (BOOTSTRAP_RESAMPLES - 1) as f64).sqrt());
        Ok(ErrorStatistics {
            v_qq: centre[0],
            v_pp: centre[1],
            c_qp: centre[2],
            se_qq: se[0],
            se_pp: se[1],
            se_qp: se[2],
            samples: self.samples,
            blocks: nb,
        })
    }
}

/// Block length `10/Γ′` in samples.
pub fn block_length(d: &DerivedQuantities, dt: f64) -> usize {
    ((10.0 / d.gamma_prime) / dt).round().max(1.0) as usize
}

/// Error moments of `(q̂, p̂)` against the truth on the scored part of one record.
pub fn error_moments(
    record: &MeasurementRecord,
    q_est: &[f64],
    p_est: &[f64],
    first: usize,
    block: usize,
) -> BlockMoments {
    let dq: Vec<f64> = record.q[first..]
        .iter()
        .zip(&q_est[first..])
        .map(|(t, e)| t - e)
        .collect();
    let dp: Vec<f64> = record.p[first..]
        .iter()
        .zip(&p_est[first..])
        .map(|(t, e)| t - e)
        .collect();
    BlockMoments::from_series(&dq, &dp, block)
}

pub fn error_statistics(
    record: &MeasurementRecord,
    q_est: &[f64],
    p_est: &[f64],
    first: usize,
    block: usize,
) -> Result<ErrorStatistics> {
    if q_est.len() != record.q.len() || p_est.len() != record.p.len() || first >= record.q.len() {
        return Err(Error::invalid(
            "estimate",
            "estimate and record lengths differ or nothing is scored",
        ));
    }
    error_moments(record, q_est, p_est, first, block).statistics(record.seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair {
    pub q: ImpulseResponse,
    pub p: ImpulseResponse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    /// One entry per filter pair, in input order.
    pub errors: Vec<ErrorStatistics>,
    /// Moments of the true `(q, p)` themselves.
    pub unconditional: ErrorStatistics,
    /// `var(y)·dt` over the scored window.
    pub record_variance: f64,
}

/// Simulate every trajectory once and score every filter pair on it.
pub fn run_ensemble(
    d: &DerivedQuantities,
    config: &SimulationConfig,
    excess: Option<&ExcessNoiseModel>,
    filters: &[FilterPair],
) -> Result<EnsembleResult> {
    config.validate(d)?;
    let disc = Discretization::new(d, config.dt)?;
    let first = config.first_scored();
    let block = block_length(d, config.dt);
    for f in filters {
        for h in [&f.q, &f.p] {
            if ((h.dt - config.dt) / config.dt).abs() > 1e-12 {
                return Err(Error::invalid(
                    "dt",
                    format!("filter sampled at {:e} but record at {:e}", h.dt, config.dt),
                ));
            }
        }
    }
    let n = config.samples();
    let taps = filters
        .iter()
        .map(|f| f.q.kernel.len().max(f.p.kernel.len()))
        .max()
        .unwrap_or(0);
    let size = (n + taps).next_power_of_two();
    // Both kernels of a pair share one complex spectrum: the record is real,
    // so the real and imaginary parts of the product separate again.
    let spectra: Vec<Vec<C64>> = filters
        .iter()
        .map(|f| {
            let mut k = vec![C64::new(0.0, 0.0); size];
            for (m, h) in f.q.kernel.iter().enumerate() {
                k[m].re = *h;
            }
            for (m, h) in f.p.kernel.iter().enumerate() {
                k[m].im = *h;
            }
            fft_forward(&mut k);
            k
        })
        .collect();
    let per: Vec<(Vec<BlockMoments>, BlockMoments, f64)> = (0..config.trajectories as u64)
        .into_par_iter()
        .map(|k| {
            let rec = simulate_with(d, config, &disc, excess, k);
            let mut y: Vec<C64> = rec.y.iter().map(|v| C64::new(*v, 0.0)).collect();
            y.resize(size, C64::new(0.0, 0.0));
            fft_forward(&mut y);
            let mut scored = Vec::with_capacity(filters.len());
            for spec in &spectra {
                let mut buf: Vec<C64> = y.iter().zip(spec).map(|(a, b)| a * b).collect();
                fft_inverse(&mut buf);
                let qe: Vec<f64> = buf[..n].iter().map(|v| v.re / size as f64).collect();
                let pe: Vec<f64> = buf[..n].iter().map(|v| v.im / size as f64).collect();
                scored.push(error_moments(&rec, &qe, &pe, first, block));
            }
            let zero = vec![0.0; rec.q.len()];
            let raw = error_moments(&rec, &zero, &zero, first, block);
            let ys = &rec.y[first..];
            let my = ys.iter().sum::<f64>() / ys.len() as f64;
            let vy = ys.iter().map(|v| (v - my).powi(2)).sum::<f64>() / ys.len() as f64 * config.dt;
            (scored, raw, vy)
        })
        .collect();
    let mut acc = vec![BlockMoments::default(); filters.len()];
    let mut raw = BlockMoments::default();
    let mut vy = 0.0;
    for (scored, u, v) in per {
        for (a, s) in acc.iter_mut().zip(scored) {
            a.extend(s);
        }
        raw.extend(u);
        vy += v;
    }
    let errors = acc
        .iter()
        .map(|a| a.statistics(config.seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleResult {
        errors,
        unconditional: raw.statistics(config.seed)?,
        record_variance: vy / config.trajectories as f64,
    })
}
