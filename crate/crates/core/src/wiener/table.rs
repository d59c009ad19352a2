//! Uniformly sampled two-sided spectra and their FFT-based operations.
//!
//! Transform pair: `F(ω) = ∫ f(t) e^{iωt} dt`, `f(t) = ∫ F(ω) e^{−iωt} dω/2π`.
//! A grid of `n` bins with spacing `dω` pairs with time step `dt = 2π/(n dω)`.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Grid `ω_k = k·dω` for `k = −n/2 .. n/2 − 1`, stored in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    pub d_omega: f64,
    /// Values in FFT order: index `k < n/2` is `k·dω`, otherwise `(k − n)·dω`.
    pub values: Vec<C64>,
    /// Real, even, non-negative power spectrum.
    pub power: bool,
}

pub(crate) fn fft_forward(x: &mut [C64]) {
    FftPlanner::new().plan_fft_forward(x.len()).process(x);
}

pub(crate) fn fft_inverse(x: &mut [C64]) {
    FftPlanner::new().plan_fft_inverse(x.len()).process(x);
}

impl SpectrumTable {
    pub fn from_fn<F: Fn(f64) -> C64>(n: usize, d_omega: f64, power: bool, f: F) -> Result<Self> {
        check_grid(n, d_omega)?;
        let values = (0..n).map(|k| f(index_omega(k, n, d_omega))).collect();
        Ok(SpectrumTable {
            d_omega,
            values,
            power,
        })
    }

    pub fn from_real_fn<F: Fn(f64) -> f64>(n: usize, d_omega: f64, f: F) -> Result<Self> {
        let t = Self::from_fn(n, d_omega, true, |w| C64::new(f(w), 0.0))?;
        t.check_power()?;
        Ok(t)
    }

    /// Grid spanning `±half_span` with `n` bins.
    pub fn grid_spacing(n: usize, half_span: f64) -> f64 {
        2.0 * half_span / n as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn omega(&self, k: usize) -> f64 {
        index_omega(k, self.len(), self.d_omega)
    }

    pub fn dt(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.len() as f64 * self.d_omega)
    }

    pub fn half_span(&self) -> f64 {
        0.5 * self.len() as f64 * self.d_omega
    }

    /// `(ω, value)` in increasing ω.
    pub fn natural_order(&self) -> impl Iterator<Item = (f64, C64)> + '_ {
        let n = self.len();
        (0..n).map(move |i| {
            let k = (i + n / 2) % n;
            (self.omega(k), self.values[k])
        })
    }

    pub fn map<F: Fn(f64, C64) -> C64>(&self, power: bool, f: F) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| f(self.omega(k), *v))
            .collect();
        SpectrumTable {
            d_omega: self.d_omega,
            values,
            power,
        }
    }

    pub fn zip_with<F: Fn(C64, C64) -> C64>(
        &self,
        other: &Self,
        power: bool,
        f: F,
    ) -> Result<Self> {
        if self.len() != other.len() || self.d_omega != other.d_omega {
            return Err(Error::invalid("table", "grids differ"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Ok(SpectrumTable {
            d_omega: self.d_omega,
            values,
            power,
        })
    }

    pub fn check_power(&self) -> Result<()> {
        for (k, v) in self.values.iter().enumerate() {
            if !(v.re > 0.0) || v.im != 0.0 || !v.re.is_finite() {
                return Err(Error::NonPositiveSpectrum {
                    omega: self.omega(k),
                });
            }
        }
        Ok(())
    }

    /// Linear interpolation; zero outside the grid.
    pub fn interpolate(&self, omega: f64) -> C64 {
        let n = self.len() as isize;
        let x = omega / self.d_omega;
        let k0 = x.floor();
        let frac = x - k0;
        let k0 = k0 as isize;
        let get = |k: isize| -> C64 {
            if k < -n / 2 || k >= n / 2 {
                C64::new(0.0, 0.0)
            } else {
                self.values[k.rem_euclid(n) as usize]
            }
        };
        get(k0) * (1.0 - frac) + get(k0 + 1) * frac
    }

    /// Time samples `f(t_m)·dt` in FFT order (negative times in the upper half).
    pub fn to_time(&self) -> Vec<C64> {
        let mut x = self.values.clone();
        fft_forward(&mut x);
        let n = x.len() as f64;
        x.iter_mut().for_each(|v| *v /= n);
        x
    }

    pub fn from_time(d_omega: f64, time: &[C64], power: bool) -> Self {
        let mut x = time.to_vec();
        fft_inverse(&mut x);
        SpectrumTable {
            d_omega,
            values: x,
            power,
        }
    }

    /// Component supported on `t ≥ 0`; the `t = 0` and Nyquist-lag samples
    /// are split evenly between the two parts.
    pub fn causal_part(&self) -> Self {
        let c = fold_causal(self.to_time());
        Self::from_time(self.d_omega, &c, false)
    }

    pub fn anticausal_part(&self) -> Self {
        let n = self.len();
        let mut c = self.to_time();
        c[0] *= 0.5;
        c[n / 2] *= 0.5;
        for v in c.iter_mut().take(n / 2).skip(1) {
            *v = C64::new(0.0, 0.0);
        }
        Self::from_time(self.d_omega, &c, false)
    }

    /// Minimum-phase factor of a strictly positive power table by the
    /// cepstral method, from point samples.
    pub fn cepstral_factor(&self) -> Result<CepstralFactor> {
        self.check_power()?;
        let log = self.map(false, |_, v| C64::new(v.re.ln(), 0.0));
        Ok(CepstralFactor::from_log_table(&log))
    }
}

pub(crate) fn fold_causal(mut c: Vec<C64>) -> Vec<C64> {
    let n = c.len();
    c[0] *= 0.5;
    c[n / 2] *= 0.5;
    for v in c.iter_mut().skip(n / 2 + 1) {
        *v = C64::new(0.0, 0.0);
    }
    c
}

fn index_omega(k: usize, n: usize, d: f64) -> f64 {
    if k < n / 2 {
        k as f64 * d
    } else {
        (k as f64 - n as f64) * d
    }
}

fn check_grid(n: usize, d_omega: f64) -> Result<()> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::invalid(
            "n",
            format!("grid size must be even and at least 4, got {n}"),
        ));
    }
    if !(d_omega > 0.0) || !d_omega.is_finite() {
        return Err(Error::invalid(
            "d_omega",
            format!("must be positive, got {d_omega}"),
        ));
    }
    Ok(())
}

/// `M` with `log M = [log S]₊`, plus its analytic continuation into Im ω ≥ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CepstralFactor {
    /// `log M` on the grid.
    pub log_factor: SpectrumTable,
    /// Folded cepstrum `ĉ_m` for lags `m = 0 ..= n/2`.
    pub cepstrum: Vec<C64>,
    pub dt: f64,
}

impl CepstralFactor {
    pub fn from_log_table(log: &SpectrumTable) -> Self {
        let n = log.len();
        let c = fold_causal(log.to_time());
        let log_factor = SpectrumTable::from_time(log.d_omega, &c, false);
        CepstralFactor {
            log_factor,
            cepstrum: c[..=n / 2].to_vec(),
            dt: log.dt(),
        }
    }

    pub fn factor(&self) -> SpectrumTable {
        self.log_factor.map(false, |_, v| v.exp())
    }

    /// `log M(z)` for `Im z ≥ 0` from the cepstral series.
    pub fn log_at(&self, z: C64) -> C64 {
        let step = (C64::new(0.0, 1.0) * z * self.dt).exp();
        let mut phase = C64::new(1.0, 0.0);
        let mut s = C64::new(0.0, 0.0);
        for c in &self.cepstrum {
            s += c * phase;
            phase *= step;
        }
        s
    }
}
