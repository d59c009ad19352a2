//! Reproducible parameter sweeps shared by the acceptance suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use squeeze_core::{derive, DerivedQuantities, OscillatorParams, RegimeMapAxes};

/// One dimensionless system (`Γ = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub q_factor: f64,
    pub n_th: f64,
    pub eta: f64,
    pub c: f64,
}

impl SweepPoint {
    pub fn derived(&self) -> squeeze_core::Result<DerivedQuantities> {
        derive(&OscillatorParams::dimensionless(
            self.q_factor,
            self.n_th,
            self.eta,
            self.c,
        )?)
    }
}

/// Seed of every sweep in the acceptance suite.
pub const SWEEP_SEED: u64 = 0x5eed_2024;

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
}

/// Log-uniform draws of `C ∈ [1e-3, 1e9]`, `n_th ∈ [1e-3, 1e9]`, `Q ∈ [1, 1e7]`,
/// `η ∈ [0.01, 1]`. Every 64th point has `n_th = 0`.
pub fn log_uniform_sweep(n: usize, seed: u64) -> Vec<SweepPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let c = log_uniform(&mut rng, 1e-3, 1e9);
            let n_th = log_uniform(&mut rng, 1e-3, 1e9);
            let q_factor = log_uniform(&mut rng, 1.0, 1e7);
            let eta = log_uniform(&mut rng, 0.01, 1.0);
            SweepPoint {
                q_factor,
                n_th: if k % 64 == 63 { 0.0 } else { n_th },
                eta,
                c,
            }
        })
        .collect()
}

/// Every node of the default regime map.
pub fn regime_map_grid(axes: &RegimeMapAxes) -> Vec<SweepPoint> {
    let cs = axes.c_axis();
    axes.n_th_axis()
        .into_iter()
        .flat_map(|n_th| {
            cs.iter().map(move |&c| SweepPoint {
                q_factor: axes.q_factor,
                n_th,
                eta: axes.eta,
                c,
            })
        })
        .collect()
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}
