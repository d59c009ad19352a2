//! Spectra of the oscillator and its photocurrent record.
//!
//! Record model: `Y = g q + n` with `g = 2√(ηΓC)` and unit-PSD shot noise `n`.

use num_complex::Complex64 as C64;

use super::rational::{RationalSpectrum, Zpk};
use crate::params::DerivedQuantities;

/// `χ(ω) = 1/(Ω² − ω² − iΓω)`.
pub fn susceptibility(omega0: f64, gamma: f64, w: f64) -> C64 {
    1.0 / C64::new(omega0 * omega0 - w * w, -gamma * w)
}

/// `|χ(ω)|²` evaluated as a product of real factors.
pub fn susceptibility_sq(omega0: f64, gamma: f64, w: f64) -> f64 {
    let a = omega0 * omega0 - w * w;
    1.0 / (a * a + gamma * gamma * w * w)
}

/// Poles of `χ`, `±√(Ω² − Γ²/4) − iΓ/2`, both in the lower half-plane.
pub fn oscillator_poles(omega0: f64, gamma: f64) -> [C64; 2] {
    let wd = C64::new(omega0 * omega0 - 0.25 * gamma * gamma, 0.0).sqrt();
    let c = C64::new(0.0, -0.5 * gamma);
    [c + wd, c - wd]
}

/// `S_qq(ω) = 4ΓΩ² n_tot |χ|²`.
pub fn s_qq(d: &DerivedQuantities, w: f64) -> f64 {
    4.0 * d.gamma * d.omega * d.omega * d.n_tot * susceptibility_sq(d.omega, d.gamma, w)
}

/// Shot-noise-free part of the record spectrum, `g² S_qq`.
pub fn s_signal(d: &DerivedQuantities, w: f64) -> f64 {
    16.0 * d.eta
        * d.gamma
        * d.gamma
        * d.c
        * d.omega
        * d.omega
        * d.n_tot
        * susceptibility_sq(d.omega, d.gamma, w)
}

/// `S_YY(ω) = 1 + 16ηΓ²CΩ² n_tot |χ|²`.
pub fn s_yy(d: &DerivedQuantities, w: f64) -> f64 {
    1.0 + s_signal(d, w)
}

fn chi_sq_denominator(d: &DerivedQuantities) -> Vec<f64> {
    let o2 = d.omega * d.omega;
    vec![o2 * o2, 0.0, d.gamma * d.gamma - 2.0 * o2, 0.0, 1.0]
}

pub fn mechanical_spectrum(d: &DerivedQuantities) -> RationalSpectrum {
    RationalSpectrum {
        numerator: vec![4.0 * d.gamma * d.omega * d.omega * d.n_tot],
        denominator: chi_sq_denominator(d),
    }
}

pub fn measured_spectrum(d: &DerivedQuantities) -> RationalSpectrum {
    let den = chi_sq_denominator(d);
    let mut num = den.clone();
    num[0] += 16.0 * d.eta * d.gamma * d.gamma * d.c * d.omega * d.omega * d.n_tot;
    RationalSpectrum {
        numerator: num,
        denominator: den,
    }
}

/// `S_qY = g S_qq`.
pub fn cross_spectrum(d: &DerivedQuantities) -> RationalSpectrum {
    let g = d.record_gain();
    RationalSpectrum {
        numerator: vec![g * 4.0 * d.gamma * d.omega * d.omega * d.n_tot],
        denominator: chi_sq_denominator(d),
    }
}

/// Which conditional variable a filter estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Position,
    Momentum,
}

impl Target {
    /// Transfer from `q` to the target: 1 for position, `−iω/Ω` for `p = q̇/Ω`.
    pub fn transfer(self, d: &DerivedQuantities, w: f64) -> C64 {
        match self {
            Target::Position => C64::new(1.0, 0.0),
            Target::Momentum => C64::new(0.0, -w / d.omega),
        }
    }
}

/// `S_xY` in zero-pole-gain form with closed-form poles.
pub fn cross_spectrum_zpk(d: &DerivedQuantities, target: Target) -> Zpk {
    let [p1, p2] = oscillator_poles(d.omega, d.gamma);
    let k = d.record_gain() * 4.0 * d.gamma * d.omega * d.omega * d.n_tot;
    let base = Zpk {
        gain: C64::new(k, 0.0),
        zeros: vec![],
        poles: vec![p1, p2, p1.conj(), p2.conj()],
    };
    match target {
        Target::Position => base,
        Target::Momentum => Zpk {
            gain: base.gain * C64::new(0.0, -1.0 / d.omega),
            zeros: vec![C64::new(0.0, 0.0)],
            poles: base.poles,
        },
    }
}

/// `M_Y = (Ω′² − ω² − iΓ′ω)/(Ω² − ω² − iΓω)` with closed-form roots.
pub fn analytic_factor(d: &DerivedQuantities) -> Zpk {
    let [z1, z2] = oscillator_poles(d.omega_prime, d.gamma_prime);
    let [p1, p2] = oscillator_poles(d.omega, d.gamma);
    Zpk {
        gain: C64::new(1.0, 0.0),
        zeros: vec![z1, z2],
        poles: vec![p1, p2],
    }
}

/// `M_Y(ω)` evaluated directly.
pub fn analytic_factor_at(d: &DerivedQuantities, w: f64) -> C64 {
    C64::new(d.omega_prime_sq() - w * w, -d.gamma_prime * w) * susceptibility(d.omega, d.gamma, w)
}
