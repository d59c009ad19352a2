//! Oscillator parameters shared by the per-state commands.

use std::f64::consts::TAU;

use squeeze_core::{cooperativity, Bath, Coupling, OscillatorParams};

use crate::input_error;

#[derive(clap::Args, Debug, Clone)]
pub struct ParamArgs {
    /// Mechanical frequency Ω/2π in Hz. Without any Ω flag the run is
    /// dimensionless, with Γ = 1 and Ω = Q.
    #[arg(long, conflicts_with = "omega_rad_s")]
    pub omega_hz: Option<f64>,
    /// Mechanical frequency Ω in rad/s.
    #[arg(long)]
    pub omega_rad_s: Option<f64>,

    /// Quality factor Ω/Γ.
    #[arg(long, conflicts_with_all = ["gamma_hz", "gamma_rad_s"])]
    pub q: Option<f64>,
    /// Energy damping rate Γ/2π in Hz.
    #[arg(long, conflicts_with = "gamma_rad_s")]
    pub gamma_hz: Option<f64>,
    /// Energy damping rate Γ in rad/s.
    #[arg(long)]
    pub gamma_rad_s: Option<f64>,

    /// Thermal occupancy of the bath.
    #[arg(long, conflicts_with = "temp_k")]
    pub n_th: Option<f64>,
    /// Bath temperature in kelvin; needs an SI frequency.
    #[arg(long)]
    pub temp_k: Option<f64>,

    /// Measurement cooperativity.
    #[arg(long, conflicts_with_all = ["g_hz", "g_rad_s", "kappa_hz", "kappa_rad_s"])]
    pub c: Option<f64>,
    /// Boosted optomechanical coupling g/2π in Hz.
    #[arg(long, conflicts_with = "g_rad_s")]
    pub g_hz: Option<f64>,
    #[arg(long)]
    pub g_rad_s: Option<f64>,
    /// Cavity decay κ/2π in Hz.
    #[arg(long, conflicts_with = "kappa_rad_s")]
    pub kappa_hz: Option<f64>,
    #[arg(long)]
    pub kappa_rad_s: Option<f64>,

    /// Detection efficiency in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
}

fn rad(hz: Option<f64>, rad_s: Option<f64>) -> Option<f64> {
    hz.map(|f| TAU * f).or(rad_s)
}

impl ParamArgs {
    pub fn is_si(&self) -> bool {
        self.omega_hz.is_some() || self.omega_rad_s.is_some()
    }

    pub fn resolve(&self) -> anyhow::Result<OscillatorParams> {
        let omega = rad(self.omega_hz, self.omega_rad_s);
        let gamma = rad(self.gamma_hz, self.gamma_rad_s);
        let g = rad(self.g_hz, self.g_rad_s);
        let kappa = rad(self.kappa_hz, self.kappa_rad_s);

        let (omega, gamma) = match (omega, gamma, self.q) {
            (Some(w), Some(gm), None) => (w, gm),
            (Some(w), None, Some(q)) => (w, w / q),
            (Some(_), None, None) => {
                return Err(input_error("give --q or a --gamma-* flag with --omega-*"))
            }
            (None, None, Some(q)) => (q, 1.0),
            (None, Some(_), _) => {
                return Err(input_error(
                    "--gamma-* needs an --omega-* flag; use --q for dimensionless runs",
                ))
            }
            (None, None, None) => return Err(input_error("give --omega-hz/--omega-rad-s or --q")),
            (Some(_), Some(_), Some(_)) => unreachable!("clap rejects --q with --gamma-*"),
        };

        let bath = match (self.n_th, self.temp_k) {
            (Some(n), None) => Bath::Occupancy(n),
            (None, Some(t)) if self.is_si() => Bath::Temperature(t),
            (None, Some(_)) => return Err(input_error("--temp-k needs an --omega-* flag")),
            _ => return Err(input_error("give --n-th or --temp-k")),
        };

        let coupling = match (self.c, g, kappa) {
            (Some(c), None, None) => Coupling::Cooperativity(c),
            (None, Some(g), Some(kappa)) if self.is_si() => Coupling::Optomechanical { g, kappa },
            (None, Some(_), Some(_)) => {
                return Err(input_error("--g-* and --kappa-* need an --omega-* flag"))
            }
            (None, Some(_), None) | (None, None, Some(_)) => {
                return Err(input_error("--g-* and --kappa-* must be given together"))
            }
            _ => return Err(input_error("give --c or both --g-* and --kappa-*")),
        };

        Ok(OscillatorParams::new(
            omega, gamma, self.eta, bath, coupling,
        )?)
    }
}

/// `C` from the coupling flags, for reporting.
pub fn resolved_cooperativity(p: &OscillatorParams) -> anyhow::Result<f64> {
    Ok(match p.coupling {
        Coupling::Cooperativity(c) => c,
        Coupling::Optomechanical { g, kappa } => cooperativity(g, p.gamma, kappa)?,
    })
}
