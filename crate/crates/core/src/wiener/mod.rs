//! Record spectra, causal Wiener synthesis and spectral error integrals.

pub mod excess;
pub mod filter;
pub mod rational;
pub mod spectra;
pub mod table;
pub mod variance;

pub use excess::{
    excess_covariance, excess_filters, threshold_shift, ExcessFilter, ExcessNoiseModel,
    ResidualFactor, ResidualGrid, ThresholdShift,
};
pub use filter::{
    band_limited_impulse, momentum_filter, position_filter, wiener_from_factor,
    wiener_from_spectra, wiener_from_tables, AnalyticFilter, FilterResponse, ImpulseResponse,
    RecoveredCoefficients,
};
pub use rational::{spectral_factor_rational, PartialFractions, RationalSpectrum, Zpk};
pub use spectra::{
    analytic_factor, analytic_factor_at, cross_spectrum, cross_spectrum_zpk, measured_spectrum,
    mechanical_spectrum, s_qq, s_yy, susceptibility, Target,
};
pub use table::{CepstralFactor, SpectrumTable};
pub use variance::{error_covariance, error_variance};
