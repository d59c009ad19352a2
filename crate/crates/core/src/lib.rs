//! Conditional-state estimation for a continuously position-measured,
//! thermally driven mechanical oscillator.
//!
//! Variances are in zero-point units (ground state = 1). Rates and
//! frequencies are angular (rad/s) unless a name ends in `_hz`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditional;
pub mod error;
pub mod montecarlo;
pub mod params;
pub mod quadrature;
pub mod riccati;
pub mod wiener;

pub use conditional::{
    boundary_curves, closed_form_covariance, conditional_covariance, log_space, optimal_quadrature,
    purity, rwa_baseline, theta_closed_form, wigner, ConditionalCovariance, RegimeMapAxes,
    WignerGrid, WignerSpec,
};
pub use error::{Error, Result};
pub use params::{
    classify, cooperativity, derive, quality_for_threshold_speed, squeezing_threshold,
    thermal_occupancy, Bath, ClassifierConfig, Coupling, DerivedQuantities, OscillatorParams,
    PhysicalConstants, Regime, RegimeLabel,
};
