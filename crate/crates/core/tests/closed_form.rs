#![allow(clippy::excessive_precision)]

use std::f64::consts::{FRAC_PI_4, PI};

use proptest::prelude::*;
use squeeze_core::conditional::{representative_states, wigner_density};
use squeeze_core::riccati::{
    build_full_model, build_rwa_model, lyapunov, steady_state, steady_state_bisection,
    steady_state_newton,
};
use squeeze_core::wiener::{mechanical_spectrum, s_qq, s_yy};
use squeeze_core::{
    boundary_curves, classify, closed_form_covariance, conditional_covariance, cooperativity,
    derive, purity, rwa_baseline, squeezing_threshold, thermal_occupancy, wigner, Bath,
    ClassifierConfig, ConditionalCovariance, Coupling, DerivedQuantities, OscillatorParams, Regime,
    WignerSpec,
};

fn dq(q: f64, n: f64, eta: f64, c: f64) -> DerivedQuantities {
    derive(&OscillatorParams::dimensionless(q, n, eta, c).unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

// Values from tests/oracles/derive_mp.py at 50 digits.
#[test]
fn derived_symbols_match_high_precision_oracle() {
    let p = OscillatorParams::new(
        1e5,
        1.0,
        1.0,
        Bath::Occupancy(1e6),
        Coupling::Cooperativity(1e5),
    )
    .unwrap();
    let d = derive(&p).unwrap();
    assert!(rel(d.omega_prime, 364748.37494132640768) < 1e-13);
    assert!(rel(d.gamma_prime, 496067.28782059078662) < 1e-13);
    assert!(rel(d.coef_a, 194545498.91704788166) < 1e-13);
    assert!(rel(d.coef_b, 4.0317029915109684703e-6) < 1e-13);
    let v = conditional_covariance(&d).unwrap();
    assert!(rel(v.v_qq, 1.2401657195514769666) < 1e-12);
    assert!(rel(v.v_pp, 16.499304746282528312) < 1e-12);
    assert!(rel(v.c_qp, 3.0760220239012652376) < 1e-12);
}

#[test]
fn covariance_matches_oracle_and_riccati() {
    let d = dq(100.0, 1000.0, 1.0, 100.0);
    let v = conditional_covariance(&d).unwrap();
    let want = [
        1.2378220821681669411,
        16.441228836052404501,
        3.0644070142062724608,
    ];
    let r = steady_state(&build_full_model(&d)).unwrap();
    for (got, w) in [v.v_qq, v.v_pp, v.c_qp].iter().zip(want) {
        assert!(rel(*got, w) < 1e-12, "{got} vs {w}");
    }
    assert!(rel(r.v_qq(), v.v_qq) < 1e-9);
    assert!(rel(r.v_pp(), v.v_pp) < 1e-9);
    assert!(rel(r.c_qp(), v.c_qp) < 1e-9);
    assert!(r.residual < 1e-10);
}

#[test]
fn thermal_occupancy_at_room_temperature() {
    let w = 2.0 * PI * 694e3;
    let n = thermal_occupancy(w, 300.0).unwrap();
    assert!((n.n_th - 9.01e6).abs() < 0.01e6);
    assert!(!n.strained);
    assert_eq!(thermal_occupancy(w, 0.0).unwrap().n_th, 0.0);
    assert!(thermal_occupancy(w, 0.0).unwrap().strained);
    assert!(rel(thermal_occupancy(w, 150.0).unwrap().n_th, n.n_th / 2.0) < 1e-15);
    assert!(thermal_occupancy(0.0, 300.0).is_err());
}

#[test]
fn cooperativity_identity_and_scaling() {
    let (gamma, kappa) = (3.0_f64, 8.0);
    let g = (gamma * kappa).sqrt() / 2.0;
    assert!(rel(cooperativity(g, gamma, kappa).unwrap(), 1.0) < 1e-15);
    assert!(rel(cooperativity(2.0 * g, gamma, kappa).unwrap(), 4.0) < 1e-15);
    assert!(cooperativity(0.0, gamma, kappa).is_err());
}

#[test]
fn optomechanical_coupling_feeds_derive() {
    let omega = 2.0 * PI * 694e3;
    let (g, gamma, kappa) = (2.0 * PI * 152e3 * 9e3_f64.sqrt(), omega / 1e5, 20.0 * omega);
    let c = cooperativity(g, gamma, kappa).unwrap();
    let p = OscillatorParams::new(
        omega,
        gamma,
        0.5,
        Bath::Temperature(300.0),
        Coupling::Optomechanical { g, kappa },
    )
    .unwrap();
    let d = derive(&p).unwrap();
    assert!(rel(d.c, c) < 1e-15);
    assert!(
        rel(
            d.n_tot,
            thermal_occupancy(omega, 300.0).unwrap().n_th + c + 0.5
        ) < 1e-15
    );
}

#[test]
fn room_temperature_zero_coupling() {
    let omega = 2.0 * PI * 694e3;
    let p = OscillatorParams::new(
        omega,
        omega / 1e5,
        1.0,
        Bath::Temperature(300.0),
        Coupling::Cooperativity(0.0),
    )
    .unwrap();
    let d = derive(&p).unwrap();
    assert!((d.n_tot - 9.01e6).abs() < 0.01e6);
    assert_eq!(d.omega_prime, d.omega);
    assert_eq!(d.gamma_prime, d.gamma);
}

#[test]
fn off_diagonal_identity() {
    for (q, n, eta, c) in [
        (10.0, 0.0, 0.1, 1.0),
        (1e3, 1e5, 0.7, 3e3),
        (1e6, 1e2, 1.0, 1e8),
    ] {
        let d = dq(q, n, eta, c);
        let v = closed_form_covariance(&d).unwrap();
        let g = d.gamma_prime - d.gamma;
        let want = g * g / (8.0 * eta * c * d.gamma * d.omega);
        assert!(rel(v.c_qp, want) < 1e-9, "{q} {n}");
    }
}

#[test]
fn theta_limits() {
    let weak = conditional_covariance(&dq(1e5, 1e6, 1.0, 1e-10)).unwrap();
    assert!((weak.theta + FRAC_PI_4).abs() < 1e-3);
    let d = dq(1e2, 1e2, 1.0, 1e9);
    assert!(d.rwa_ratio() >= 1e4);
    let strong = closed_form_covariance(&d).unwrap();
    assert!(strong.theta.abs() <= (2.0 * d.omega / d.gamma_prime).atan() / 2.0 + 1e-15);
}

#[test]
fn purity_examples() {
    assert_eq!(
        purity(&ConditionalCovariance::from_entries(1.0, 1.0, 0.0).unwrap()),
        1.0
    );
    let t = ConditionalCovariance::thermal(7.0);
    assert!(rel(purity(&t), 1.0 / 15.0) < 1e-15);
    for n in [0.0, 1e3] {
        let d = dq(1e2, n, 1.0, 1e9);
        let v = closed_form_covariance(&d).unwrap();
        assert!(rel(v.purity, (d.c / d.n_tot).sqrt()) < 1e-2);
    }
}

#[test]
fn rwa_baseline_limits() {
    let d = dq(1e7, 1.0, 1.0, 1e4);
    assert!((rwa_baseline(&d) - 1.0).abs() < 1e-2);
    let d = dq(1e3, 50.0, 1.0, 1e-13);
    assert!(rel(rwa_baseline(&d), 101.0) < 1e-9);
    for (n, eta, c) in [(10.0, 0.3, 2.0), (1e6, 1.0, 1e3), (0.0, 0.01, 1e-3)] {
        let d = dq(1e4, n, eta, c);
        let r = steady_state(&build_rwa_model(&d)).unwrap();
        assert!(rel(r.v_qq(), rwa_baseline(&d)) < 1e-6);
        assert!(rel(r.v_pp(), rwa_baseline(&d)) < 1e-6);
        assert!(r.c_qp().abs() < 1e-9 * r.v_qq());
    }
}

#[test]
fn wigner_ground_state_and_rotation() {
    let g = ConditionalCovariance::from_entries(1.0, 1.0, 0.0).unwrap();
    assert!((wigner_density(&g, 0.0, 0.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
    let grid = wigner(&g, &WignerSpec::default()).unwrap();
    assert!((grid.contour.semi_major - 2f64.sqrt()).abs() < 1e-15);
    assert!((grid.contour.semi_minor - 2f64.sqrt()).abs() < 1e-15);
    let w0 = wigner_density(&g, 0.0, 0.0);
    assert!((wigner_density(&g, 2f64.sqrt(), 0.0) - w0 / std::f64::consts::E).abs() < 1e-15);

    let v = conditional_covariance(&dq(1e3, 1e4, 0.8, 1e6)).unwrap();
    let phi = 0.37;
    let r = v.rotated(phi).unwrap();
    let (s, c) = phi.sin_cos();
    let mut worst = 0.0_f64;
    for i in -20..=20 {
        for j in -20..=20 {
            let (q, p) = (0.3 * i as f64, 0.3 * j as f64);
            let a = wigner_density(&r, q, p);
            let b = wigner_density(&v, c * q - s * p, s * q + c * p);
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn wigner_grid_normalization_and_contour() {
    for (_, p) in representative_states() {
        let v = conditional_covariance(&derive(&p).unwrap()).unwrap();
        let g = wigner(&v, &WignerSpec::default()).unwrap();
        assert!((g.integral() - 1.0).abs() < 1e-6);
        assert_eq!(g.contour.tilt, v.theta);
        assert!(g.density.iter().all(|w| *w >= 0.0));
    }
    let v = ConditionalCovariance::from_entries(4.0, 1.0, 0.0).unwrap();
    assert!(wigner(
        &v,
        &WignerSpec {
            points: 65,
            half_width: Some(3.0)
        }
    )
    .is_err());
}

#[test]
fn classifier_examples() {
    let cfg = ClassifierConfig::default();
    let d = dq(1e5, 1e6, 1.0, 1e-6);
    assert_eq!(
        classify(&d, &conditional_covariance(&d).unwrap(), &cfg).regime,
        Regime::ThermalRwa
    );

    let (q, n) = (1e5, 9e6);
    let c = squeezing_threshold(q, n, 1.0).unwrap() * 1.05;
    let d = dq(q, n, 1.0, c);
    let v = conditional_covariance(&d).unwrap();
    assert!(v.v_min < 1.0);
    assert_eq!(classify(&d, &v, &cfg).regime, Regime::ImpureQuantumSqueezed);

    let d = dq(1e5, 1e3, 1.0, 1e6);
    let label = classify(&d, &conditional_covariance(&d).unwrap(), &cfg);
    assert_eq!(label.regime, Regime::PureQuantumSqueezed);
    assert!(!label.rwa_valid && label.backaction_dominated && label.qco);
}

#[test]
fn rwa_flag_tracks_zero_frequency_excess_within_factor_sixteen() {
    // S_YY(0) = 2 sits at ηC n_tot = Q²/16; the classifier flips at Q².
    let (q, n, eta) = (1e4, 10.0, 0.5);
    let root = |target: f64| {
        let m = n + 0.5;
        2.0 * target / eta / (m + (m * m + 4.0 * target / eta).sqrt())
    };
    let c_shot = root(q * q / 16.0);
    let d = dq(q, n, eta, c_shot);
    assert!((s_yy(&d, 0.0) - 2.0).abs() < 1e-9);
    let c_flag = root(q * q);
    let cfg = ClassifierConfig::default();
    let below = dq(q, n, eta, c_flag * 0.999);
    let above = dq(q, n, eta, c_flag * 1.001);
    assert!(classify(&below, &conditional_covariance(&below).unwrap(), &cfg).rwa_valid);
    assert!(!classify(&above, &conditional_covariance(&above).unwrap(), &cfg).rwa_valid);
    let ratio = below.eta * below.c * below.n_tot / (d.eta * d.c * d.n_tot);
    assert!((ratio / 16.0 - 1.0).abs() < 2e-3);
}

#[test]
fn squeezing_threshold_asymptote_and_efficiency_scaling() {
    let (q, n) = (1e5, 9.01e6);
    let c = squeezing_threshold(q, n, 1.0).unwrap();
    let asym = n.cbrt() * q.powf(2.0 / 3.0) / 4.0;
    assert!(rel(c, asym) < 1e-2);
    let half = squeezing_threshold(q, n, 0.5).unwrap();
    assert!(rel(half, 2.0 * c) < 3e-2);
    let direct = (n + half + 0.5).cbrt() * q.powf(2.0 / 3.0) / (4.0 * 0.5);
    assert!(rel(half, direct) < 1e-12);
}

#[test]
fn vmin_crosses_one_at_threshold_in_hot_regime() {
    for (q, n, eta) in [(1e5, 9.01e6, 0.5), (1e3, 1e6, 1.0), (1e4, 1e7, 0.2)] {
        let vmin = |c: f64| conditional_covariance(&dq(q, n, eta, c)).unwrap().v_min;
        let (mut lo, mut hi) = (1e-3_f64, 1e14);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if vmin(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = squeezing_threshold(q, n, eta).unwrap();
        assert!(rel(lo, t) < 1e-2, "{q} {n} {eta}: {lo} vs {t}");
    }
}

#[test]
fn boundary_curve_examples() {
    let (q, eta) = (1e5, 1.0);
    let rows = boundary_curves(q, eta, &[1e2, 1e6, 1e9]).unwrap();
    for r in &rows {
        assert_eq!(r.iv_v, r.n_th);
        assert!(rel(r.ii_v, q / eta) < 1e-15);
        assert!(rel(r.iii_iv, r.n_th.cbrt() * q.powf(2.0 / 3.0) / (4.0 * eta)) < 1e-15);
    }
    // Squeezing threshold tracks the III-IV asymptote once C ≪ n_th.
    let hot = rows[2];
    assert!(hot.squeezing < 1e-2 * hot.n_th);
    assert!(rel(hot.squeezing, hot.iii_iv) < 1e-2);
}

#[test]
fn unconditional_variance_from_lyapunov_and_spectrum() {
    let d = dq(20.0, 30.0, 1.0, 4.0);
    let m = build_full_model(&d);
    let v = lyapunov(&m.drift, &m.diffusion).unwrap();
    let want = 2.0 * d.n_th + 1.0 + 2.0 * d.c;
    assert!(rel(v[0][0], want) < 1e-12);
    assert!(rel(v[1][1], want) < 1e-12);
    let spec = mechanical_spectrum(&d);
    let (int, _) = squeeze_core::quadrature::integrate_scalar(
        |w| 2.0 * spec.eval(w) / (2.0 * PI),
        &[0.0, d.omega - 5.0, d.omega, d.omega + 5.0, 1e3, 1e5],
        Default::default(),
    )
    .unwrap();
    let tail = 2.0 * s_qq(&d, 1e5) * 1e5 / 3.0 / (2.0 * PI);
    assert!(rel(int + tail, want) < 1e-7);
}

#[test]
fn riccati_model_examples() {
    let d = dq(10.0, 0.0, 1.0, 0.0);
    assert_eq!(build_full_model(&d).diffusion[1][1], 2.0);
    let d = dq(10.0, 4.0, 0.5, 3.0);
    assert!(rel(build_full_model(&d).diffusion[1][1] / 2.0, 2.0 * d.n_tot) < 1e-15);
    let mut m = build_full_model(&d);
    m.diffusion = [[0.0, 0.0], [0.0, 0.0]];
    assert!(steady_state(&m).is_err());
}

#[test]
fn newton_and_bisection_agree() {
    for (q, n, eta, c) in [
        (3.0, 0.0, 1.0, 0.5),
        (50.0, 100.0, 1.0, 500.0),
        (1e4, 1e7, 0.05, 1e3),
        (1e6, 1.0, 0.9, 1e9),
    ] {
        let m = build_full_model(&dq(q, n, eta, c));
        let a = steady_state_newton(&m).unwrap();
        let b = steady_state_bisection(&m).unwrap();
        for (x, y) in [
            (a.v_qq(), b.v_qq()),
            (a.v_pp(), b.v_pp()),
            (a.c_qp(), b.c_qp()),
        ] {
            assert!(rel(x, y) < 1e-9, "{q} {n}: {x} {y}");
        }
        assert!(a.residual < 1e-10);
    }
}

#[test]
fn heisenberg_deficit_is_confined_to_low_q() {
    // The closed form dips below det = 1 by at most ~0.3/Q, and only near η = 1.
    let mut worst = 0.0_f64;
    for q in [1.0, 3.0, 10.0, 1e2, 1e3, 1e5] {
        for n in [0.0, 1e-2, 1.0, 10.0] {
            for c in [1e-2, 1.0, 1e2, 1e4, 1e6, 1e8] {
                let det = closed_form_covariance(&dq(q, n, 1.0, c))
                    .unwrap()
                    .determinant();
                worst = worst.max((1.0 - det) * q);
            }
        }
    }
    assert!(worst < 0.3, "{worst}");
    let d = dq(3.0, 0.0, 1.0, 0.5);
    assert!(matches!(
        conditional_covariance(&d),
        Err(squeeze_core::Error::Heisenberg { .. })
    ));
    for q in [1e3, 1e5] {
        for n in [0.0, 10.0, 1e6] {
            for c in [1e-2, 1.0, 1e4, 1e8] {
                let det = closed_form_covariance(&dq(q, n, 0.9, c))
                    .unwrap()
                    .determinant();
                assert!(det >= 1.0 - 1e-9, "{q} {n} {c}: {det}");
            }
        }
    }
}

fn arb_point() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.0..7.0f64, -3.0..9.0f64, -2.0..0.0f64, -3.0..9.0f64).prop_map(|(lq, ln, le, lc)| {
        (
            10f64.powf(lq),
            10f64.powf(ln),
            10f64.powf(le),
            10f64.powf(lc),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn derived_identities((q, n, eta, c) in arb_point()) {
        let d = dq(q, n, eta, c);
        let lhs = d.omega_prime.powi(4);
        let rhs = 16.0 * eta * c * d.n_tot * q * q + q.powi(4);
        prop_assert!(rel(lhs, rhs) < 1e-12);
        let lhs = d.gamma_prime * d.gamma_prime;
        let rhs = 1.0 + 2.0 * d.stiffening;
        prop_assert!(rel(lhs, rhs) < 1e-12);
        prop_assert!(d.omega_prime >= d.omega && d.gamma_prime >= d.gamma);
    }

    #[test]
    fn resonance_and_decay_increase_with_cooperativity((q, n, eta, c) in arb_point()) {
        let a = dq(q, n, eta, c);
        let b = dq(q, n, eta, c * 1.5);
        prop_assert!(b.omega_prime > a.omega_prime || rel(b.omega_prime, a.omega_prime) < 1e-15);
        prop_assert!(b.gamma_prime > a.gamma_prime);
    }

    #[test]
    fn covariance_properties((q, n, eta, c) in arb_point()) {
        let d = dq(q, n, eta, c);
        let v = closed_form_covariance(&d).unwrap();
        prop_assert!(v.v_qq <= v.v_pp * (1.0 + 1e-12));
        prop_assert!(v.c_qp > 0.0);
        prop_assert!(v.v_min <= v.v_qq.min(v.v_pp) * (1.0 + 1e-15));
        prop_assert!((v.purity * v.determinant().sqrt() - 1.0).abs() < 1e-12);
        prop_assert!(v.theta > -std::f64::consts::FRAC_PI_2 && v.theta <= std::f64::consts::FRAC_PI_2);
        let (s2, c2) = (2.0 * v.theta).sin_cos();
        let (x, y) = (v.v_qq - v.v_pp, 2.0 * v.c_qp);
        prop_assert!((x * s2 - y * c2).abs() <= 1e-9 * x.hypot(y) + 1e-13 * (v.v_qq + v.v_pp));
        if q >= 200.0 {
            prop_assert!(v.purity <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn vmin_decreases_with_efficiency((q, n, eta, c) in arb_point()) {
        let a = closed_form_covariance(&dq(q, n, eta, c)).unwrap();
        let b = closed_form_covariance(&dq(q, n, (eta * 1.3).min(1.0), c)).unwrap();
        prop_assert!(b.v_min <= a.v_min * (1.0 + 1e-12));
    }

    #[test]
    fn classification_is_pure((q, n, eta, c) in arb_point()) {
        let d = dq(q, n, eta, c);
        let v = closed_form_covariance(&d).unwrap();
        let cfg = ClassifierConfig::default();
        prop_assert_eq!(classify(&d, &v, &cfg), classify(&d, &v, &cfg));
    }

    #[test]
    fn riccati_oracle_matches_closed_form((q, n, eta, c) in arb_point()) {
        let d = dq(q, n, eta, c);
        let v = closed_form_covariance(&d).unwrap();
        let r = steady_state(&build_full_model(&d)).unwrap();
        prop_assert!(rel(r.v_qq(), v.v_qq) < 1e-9);
        prop_assert!(rel(r.v_pp(), v.v_pp) < 1e-9);
        prop_assert!(rel(r.c_qp(), v.c_qp) < 1e-9);
    }
}
