//! Physical inputs, derived filter/boundary quantities and regime classification.

use crate::conditional::ConditionalCovariance;
use crate::error::{Error, Result};

/// CODATA 2018 exact values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Boltzmann constant, J/K.
    pub k_b: f64,
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        k_b: 1.380649e-23,
        hbar: 1.054571817e-34,
    };
}

/// Occupancy below which `k_B T / ħΩ` is no longer a good approximation.
pub const HIGH_OCCUPANCY_FLOOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalOccupancy {
    pub n_th: f64,
    /// Set when `n_th < 10`.
    pub strained: bool,
}

/// `k_B T / (ħ Ω)` with CODATA 2018 constants.
pub fn thermal_occupancy(omega: f64, temperature: f64) -> Result<ThermalOccupancy> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::invalid(
            "omega",
            format!("must be positive and finite, got {omega}"),
        ));
    }
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(Error::invalid(
            "temperature",
            format!("must be non-negative and finite, got {temperature}"),
        ));
    }
    let k = PhysicalConstants::CODATA_2018;
    let n_th = k.k_b * temperature / (k.hbar * omega);
    Ok(ThermalOccupancy {
        n_th,
        strained: n_th < HIGH_OCCUPANCY_FLOOR,
    })
}

/// `C = 4g² / (Γκ)`.
pub fn cooperativity(g: f64, gamma: f64, kappa: f64) -> Result<f64> {
    for (name, v) in [("g", g), ("gamma", gamma), ("kappa", kappa)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(
                name,
                format!("must be positive and finite, got {v}"),
            ));
        }
    }
    Ok(4.0 * g * g / (gamma * kappa))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bath {
    Occupancy(f64),
    /// Kelvin.
    Temperature(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    Cooperativity(f64),
    /// Boosted coupling `g` and cavity decay `kappa`, both rad/s.
    Optomechanical {
        g: f64,
        kappa: f64,
    },
}

pub const DEFAULT_SIDEBAND_GUARD: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    pub omega: f64,
    pub gamma: f64,
    pub eta: f64,
    pub bath: Bath,
    pub coupling: Coupling,
    /// Minimum `kappa / omega` accepted for optomechanical coupling.
    pub sideband_guard: f64,
}

impl OscillatorParams {
    pub fn new(omega: f64, gamma: f64, eta: f64, bath: Bath, coupling: Coupling) -> Result<Self> {
        let p = OscillatorParams {
            omega,
            gamma,
            eta,
            bath,
            coupling,
            sideband_guard: DEFAULT_SIDEBAND_GUARD,
        };
        p.validate()?;
        Ok(p)
    }

    /// Units with `Γ = 1`, `Ω = Q`.
    pub fn dimensionless(q_factor: f64, n_th: f64, eta: f64, c: f64) -> Result<Self> {
        Self::new(
            q_factor,
            1.0,
            eta,
            Bath::Occupancy(n_th),
            Coupling::Cooperativity(c),
        )
    }

    pub fn with_sideband_guard(mut self, guard: f64) -> Result<Self> {
        self.sideband_guard = guard;
        self.validate()?;
        Ok(self)
    }

    pub fn with_cooperativity(mut self, c: f64) -> Result<Self> {
        self.coupling = Coupling::Cooperativity(c);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega == 0.0 {
            return Err(Error::FreeMass);
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::invalid(
                "omega",
                format!("must be positive and finite, got {}", self.omega),
            ));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid(
                "gamma",
                format!("must be positive and finite, got {}", self.gamma),
            ));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::invalid(
                "eta",
                format!("must lie in (0, 1], got {}", self.eta),
            ));
        }
        match self.bath {
            Bath::Occupancy(n) if !(n >= 0.0) || !n.is_finite() => {
                return Err(Error::invalid(
                    "n_th",
                    format!("must be non-negative and finite, got {n}"),
                ));
            }
            Bath::Temperature(t) if !(t >= 0.0) || !t.is_finite() => {
                return Err(Error::invalid(
                    "temperature",
                    format!("must be non-negative and finite, got {t}"),
                ));
            }
            _ => {}
        }
        if !(self.sideband_guard > 0.0) {
            return Err(Error::invalid("sideband_guard", "must be positive"));
        }
        match self.coupling {
            Coupling::Cooperativity(c) if !(c >= 0.0) || !c.is_finite() => {
                return Err(Error::invalid(
                    "c",
                    format!("must be non-negative and finite, got {c}"),
                ));
            }
            Coupling::Optomechanical { g, kappa } => {
                cooperativity(g, self.gamma, kappa)?;
                if kappa < self.sideband_guard * self.omega {
                    return Err(Error::invalid(
                        "kappa",
                        format!(
                            "unresolved-sideband guard requires kappa >= {} * omega, got kappa/omega = {}",
                            self.sideband_guard,
                            kappa / self.omega
                        ),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn n_th(&self) -> Result<f64> {
        match self.bath {
            Bath::Occupancy(n) => Ok(n),
            Bath::Temperature(t) => Ok(thermal_occupancy(self.omega, t)?.n_th),
        }
    }

    pub fn cooperativity(&self) -> Result<f64> {
        match self.coupling {
            Coupling::Cooperativity(c) => Ok(c),
            Coupling::Optomechanical { g, kappa } => cooperativity(g, self.gamma, kappa),
        }
    }
}

/// Every symbol used by the filters, covariances and boundaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    pub omega: f64,
    pub gamma: f64,
    pub eta: f64,
    pub c: f64,
    pub q_factor: f64,
    pub n_th: f64,
    /// `n_th + C + 1/2`.
    pub n_tot: f64,
    /// Measurement speed `CΓ`.
    pub mu: f64,
    /// Thermalisation rate `n_th Γ`.
    pub gamma_th: f64,
    pub omega_prime: f64,
    pub gamma_prime: f64,
    pub coef_a: f64,
    pub coef_b: f64,
    /// `Ω′² − Ω²`, evaluated without cancellation.
    pub stiffening: f64,
}

impl DerivedQuantities {
    /// Signal gain of the record, `2√(ηΓC)`.
    pub fn record_gain(&self) -> f64 {
        2.0 * (self.eta * self.gamma * self.c).sqrt()
    }

    pub fn omega_prime_sq(&self) -> f64 {
        self.omega * self.omega + self.stiffening
    }

    /// `ηC n_tot / Q²`; the RWA holds when this is below 1.
    pub fn rwa_ratio(&self) -> f64 {
        self.eta * self.c * self.n_tot / (self.q_factor * self.q_factor)
    }
}

pub fn derive(params: &OscillatorParams) -> Result<DerivedQuantities> {
    params.validate()?;
    let n_th = params.n_th()?;
    let c = params.cooperativity()?;
    derive_from(params.omega, params.gamma, params.eta, n_th, c)
}

fn derive_from(omega: f64, gamma: f64, eta: f64, n_th: f64, c: f64) -> Result<DerivedQuantities> {
    if !(c >= 0.0) {
        return Err(Error::invalid(
            "c",
            format!("must be non-negative, got {c}"),
        ));
    }
    let q = omega / gamma;
    let n_tot = n_th + c + 0.5;
    // Γ = 1 units.
    let q2 = q * q;
    let x = 16.0 * eta * c * n_tot * q2;
    let op2 = q2 * (1.0 + x / (q2 * q2)).sqrt();
    let d = x / (op2 + q2);
    let gp = (1.0 + 2.0 * d).sqrt();
    let a = 8.0 * (eta * c).sqrt() * n_tot * q2 / (q2 + op2);
    let b = (1.0 + gp) / (d + 1.0 + gp);
    let out = DerivedQuantities {
        omega,
        gamma,
        eta,
        c,
        q_factor: q,
        n_th,
        n_tot,
        mu: c * gamma,
        gamma_th: n_th * gamma,
        omega_prime: gamma * op2.sqrt(),
        gamma_prime: gamma * gp,
        coef_a: a * gamma.powf(1.5),
        coef_b: b / gamma,
        stiffening: d * gamma * gamma,
    };
    if !(out.omega_prime.is_finite() && out.gamma_prime.is_finite() && out.coef_a.is_finite()) {
        return Err(Error::Numerical(format!(
            "derived quantities overflow for Q = {q}, n_th = {n_th}, C = {c}, eta = {eta}"
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    ThermalRwa,
    GroundRwa,
    ClassicalSqueezed,
    ImpureQuantumSqueezed,
    PureQuantumSqueezed,
}

impl Regime {
    pub fn roman(self) -> &'static str {
        match self {
            Regime::ThermalRwa => "I",
            Regime::GroundRwa => "II",
            Regime::ClassicalSqueezed => "III",
            Regime::ImpureQuantumSqueezed => "IV",
            Regime::PureQuantumSqueezed => "V",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::ThermalRwa => "I_thermal_rwa",
            Regime::GroundRwa => "II_ground_rwa",
            Regime::ClassicalSqueezed => "III_classical_squeezed",
            Regime::ImpureQuantumSqueezed => "IV_impure_quantum_squeezed",
            Regime::PureQuantumSqueezed => "V_pure_quantum_squeezed",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegimeLabel {
    pub regime: Regime,
    pub rwa_valid: bool,
    pub qco: bool,
    pub backaction_dominated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    /// `V_min` below which an RWA state counts as near-ground.
    pub threshold_ground: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            threshold_ground: 1.5,
        }
    }
}

pub fn classify(
    derived: &DerivedQuantities,
    cov: &ConditionalCovariance,
    config: &ClassifierConfig,
) -> RegimeLabel {
    let q = derived.q_factor;
    let rwa_valid = derived.eta * derived.c * derived.n_tot < q * q;
    let qco = q > derived.n_th;
    let backaction_dominated = derived.c > derived.n_th;
    let v = cov.v_min;
    let regime = if rwa_valid {
        if v >= config.threshold_ground {
            Regime::ThermalRwa
        } else {
            Regime::GroundRwa
        }
    } else if v > 1.0 {
        Regime::ClassicalSqueezed
    } else if derived.c < derived.n_th {
        Regime::ImpureQuantumSqueezed
    } else {
        Regime::PureQuantumSqueezed
    };
    RegimeLabel {
        regime,
        rwa_valid,
        qco,
        backaction_dominated,
    }
}

/// Fixed point of `C = (n_th + C + 1/2)^{1/3} Q^{2/3} / (4η)`.
pub fn squeezing_threshold(q_factor: f64, n_th: f64, eta: f64) -> Result<f64> {
    if !(q_factor > 0.0) {
        return Err(Error::invalid(
            "q_factor",
            format!("must be positive, got {q_factor}"),
        ));
    }
    if !(n_th >= 0.0) {
        return Err(Error::invalid(
            "n_th",
            format!("must be non-negative, got {n_th}"),
        ));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid(
            "eta",
            format!("must lie in (0, 1], got {eta}"),
        ));
    }
    let k = q_factor.powf(2.0 / 3.0) / (4.0 * eta);
    // Convex in C, negative at 0: exactly one positive root.
    let f = |c: f64| c - (n_th + c + 0.5).cbrt() * k;
    let upper = 1e18;
    if f(upper) < 0.0 {
        return Err(Error::Numerical(format!(
            "no squeezing threshold in [0, {upper:e}]"
        )));
    }
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    if f(lo) >= 0.0 {
        lo = 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Quality factor at which the squeezing threshold is reached at measurement
/// speed `mu = CΓ`, for a resonance `omega` (rad/s).
///
/// `CΓ = C(Q)·Ω/Q` falls as `Q^{−1/3}` at large occupancy; solved by bisection in `ln Q`.
pub fn quality_for_threshold_speed(omega: f64, n_th: f64, eta: f64, mu: f64) -> Result<f64> {
    if !(omega > 0.0) || !(mu > 0.0) {
        return Err(Error::invalid(
            "mu",
            "resonance and measurement speed must be positive",
        ));
    }
    let speed = |q: f64| -> Result<f64> { Ok(squeezing_threshold(q, n_th, eta)? * omega / q) };
    let (mut lo, mut hi) = (1e-3_f64, 1e12_f64);
    if speed(lo)? < mu || speed(hi)? > mu {
        return Err(Error::Numerical(format!(
            "no quality factor in [{lo:e}, {hi:e}] gives mu = {mu:e}"
        )));
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if speed(mid)? > mu {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi / lo).ln() < 1e-14 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}
