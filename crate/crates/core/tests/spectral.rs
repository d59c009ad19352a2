use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use squeeze_core::quadrature::{integrate, Tolerance};
use squeeze_core::wiener::{
    analytic_factor, cross_spectrum_zpk, error_covariance, error_variance, excess_covariance,
    excess_filters, measured_spectrum, momentum_filter, position_filter, s_yy,
    spectral_factor_rational, wiener_from_factor, wiener_from_spectra, wiener_from_tables,
    AnalyticFilter, ExcessNoiseModel, FilterResponse, RecoveredCoefficients, ResidualGrid,
    SpectrumTable, Target, Zpk,
};
use squeeze_core::{
    conditional_covariance, derive, thermal_occupancy, Bath, Coupling, DerivedQuantities,
    OscillatorParams,
};

fn dq(q: f64, n: f64, eta: f64, c: f64) -> DerivedQuantities {
    derive(&OscillatorParams::dimensionless(q, n, eta, c).unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn crel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm())
}

#[test]
fn record_spectrum_levels() {
    let d = dq(50.0, 100.0, 0.5, 20.0);
    let dc = 16.0 * d.eta * d.c * d.n_tot / (d.omega * d.omega);
    assert!(rel(s_yy(&d, 0.0), 1.0 + dc) < 1e-14);
    assert!((s_yy(&d, 1e8) - 1.0).abs() < 1e-15);
    assert_eq!(s_yy(&d, 7.0), s_yy(&d, -7.0));
    assert!(s_yy(&d, d.omega) > s_yy(&d, 0.0));
    let rs = measured_spectrum(&d);
    for w in [0.0, 3.0, 50.0, 1e3] {
        assert!(rel(rs.eval(w), s_yy(&d, w)) < 1e-12);
    }
}

#[test]
fn position_filter_asymptotes() {
    let d = dq(1e3, 1e4, 0.7, 300.0);
    let h = AnalyticFilter::new(&d, Target::Position).unwrap();
    assert!(crel(h.eval(0.0), C64::new(d.coef_a / d.omega_prime_sq(), 0.0)) < 1e-14);
    let w = 1e12;
    assert!(crel(h.eval(w) * w, C64::new(0.0, d.coef_a * d.coef_b)) < 1e-6);
    assert!(crel(h.eval(-3.0), h.eval(3.0).conj()) < 1e-15);
}

#[test]
fn momentum_filter_dc_value() {
    let d = dq(1e3, 1e4, 0.7, 300.0);
    let h = AnalyticFilter::new(&d, Target::Momentum).unwrap();
    let want = -d.coef_a * d.coef_b * d.omega / d.omega_prime_sq();
    assert!(crel(h.eval(0.0), C64::new(want, 0.0)) < 1e-14);
}

#[test]
fn closed_form_impulse_transforms_back_to_filter() {
    let d = dq(20.0, 10.0, 1.0, 50.0);
    for target in [Target::Position, Target::Momentum] {
        let h = AnalyticFilter::new(&d, target).unwrap();
        let end = 80.0 / d.gamma_prime;
        let knots: Vec<f64> = (0..=400).map(|k| end * k as f64 / 400.0).collect();
        for w in [0.0, 2.0, 20.0, d.omega_prime, 300.0] {
            let est = integrate::<2, _>(
                |t| {
                    let (s, c) = (w * t).sin_cos();
                    let v = h.impulse_at(t);
                    [v * c, v * s]
                },
                &knots,
                Tolerance::default(),
            )
            .unwrap();
            let got = C64::new(est.value[0], est.value[1]);
            assert!(crel(got, h.eval(w)) < 1e-8, "{target:?} {w}");
        }
    }
}

#[test]
fn bin_integrated_kernel_sums_to_dc_gain() {
    let d = dq(20.0, 10.0, 1.0, 50.0);
    let h = position_filter(&d).unwrap();
    let dt = 1e-3;
    let r = h.impulse_response(dt, 80.0 / d.gamma_prime).unwrap();
    let sum: f64 = r.kernel.iter().sum();
    assert!(rel(sum, h.eval(0.0).re) < 1e-9);
    assert_eq!(r.leakage, 0.0);
    assert!(crel(r.frequency_response(3.0), h.eval(3.0)) < 1e-2);
}

#[test]
fn rational_synthesis_reproduces_closed_forms() {
    for (q, n, eta, c) in [
        (50.0, 100.0, 1.0, 500.0),
        (3.0, 0.0, 0.2, 1.0),
        (1e4, 1e6, 0.5, 1e5),
    ] {
        let d = dq(q, n, eta, c);
        let s = measured_spectrum(&d);
        for (target, exact) in [
            (Target::Position, position_filter(&d).unwrap()),
            (Target::Momentum, momentum_filter(&d).unwrap()),
        ] {
            let h = wiener_from_spectra(&cross_spectrum_zpk(&d, target), &s).unwrap();
            for w in [0.0, 0.3, q * 0.9, q, d.omega_prime, 1e2 * q] {
                let tol = if target == Target::Position {
                    1e-9
                } else {
                    1e-6
                };
                assert!(crel(h.eval(w), exact.eval(w)) < tol, "{target:?} {q} {w}");
            }
        }
    }
}

#[test]
fn filter_coefficients_recovered_from_synthesis() {
    for (q, n, eta, c) in [(50.0, 100.0, 1.0, 500.0), (1e3, 1e2, 0.3, 40.0)] {
        let d = dq(q, n, eta, c);
        let m = spectral_factor_rational(&measured_spectrum(&d)).unwrap();
        let h = wiener_from_factor(&cross_spectrum_zpk(&d, Target::Position), &m).unwrap();
        let r = RecoveredCoefficients::from_zpk(&h).unwrap();
        assert!(rel(r.coef_a, d.coef_a) < 1e-8);
        assert!(rel(r.coef_b, d.coef_b) < 1e-8);
        assert!(rel(r.omega_prime, d.omega_prime) < 1e-8);
        assert!(rel(r.gamma_prime, d.gamma_prime) < 1e-8);
    }
}

#[test]
fn analytic_factor_is_minimum_phase() {
    let d = dq(30.0, 5.0, 1.0, 80.0);
    let z = analytic_factor(&d);
    assert!(z.zeros.iter().chain(&z.poles).all(|r| r.im < 0.0));
    for w in [0.0, 1.0, 29.0, 30.0, 1e3] {
        assert!(rel(z.eval_real(w).norm_sqr(), s_yy(&d, w)) < 1e-12);
    }
}

#[test]
fn zero_cross_spectrum_gives_zero_filter() {
    let d = dq(30.0, 5.0, 1.0, 80.0);
    let m = analytic_factor(&d);
    let h = wiener_from_factor(&Zpk::zero(), &m).unwrap();
    assert!(h.is_zero());
    let f = FilterResponse::Rational(h);
    assert_eq!(f.eval(4.0), C64::new(0.0, 0.0));
    let r = f.impulse_response(1e-3, 1.0).unwrap();
    assert!(r.kernel.iter().all(|x| *x == 0.0));
}

#[test]
fn table_decomposition_and_causality() {
    let n = 1 << 15;
    let dw = SpectrumTable::grid_spacing(n, 2000.0);
    // t e^{−at} is causal and continuous at 0; its mirror is anticausal.
    let a = 3.0;
    let causal = SpectrumTable::from_fn(n, dw, false, |w| 1.0 / C64::new(a, -w).powi(2)).unwrap();
    let anti = SpectrumTable::from_fn(n, dw, false, |w| 1.0 / C64::new(a, w).powi(2)).unwrap();
    let sum = causal.zip_with(&anti, false, |x, y| x + y).unwrap();
    let back = sum
        .causal_part()
        .zip_with(&sum.anticausal_part(), false, |x, y| x + y)
        .unwrap();
    let peak = sum.values.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    for (x, y) in back.values.iter().zip(&sum.values) {
        assert!((x - y).norm() < 1e-12 * peak);
    }
    let cp = sum.causal_part();
    for k in (0..n).step_by(97) {
        let w = cp.omega(k);
        if w.abs() < 50.0 {
            let e = (cp.values[k] - causal.values[k]).norm() / causal.values[k].norm();
            assert!(e < 1e-4, "{w} {e:e}");
        }
    }
}

fn table_filter(d: &DerivedQuantities, n: usize) -> (SpectrumTable, FilterResponse) {
    let dw = SpectrumTable::grid_spacing(n, 200.0 * d.omega_prime.max(d.gamma_prime));
    let g = d.record_gain();
    let syy = SpectrumTable::from_real_fn(n, dw, |w| s_yy(d, w)).unwrap();
    let sxy = SpectrumTable::from_fn(n, dw, false, |w| {
        C64::new(g * squeeze_core::wiener::s_qq(d, w), 0.0)
    })
    .unwrap();
    let h = wiener_from_tables(&sxy, &syy).unwrap();
    (syy, h)
}

#[test]
fn tabulated_synthesis_matches_closed_form() {
    let d = dq(10.0, 20.0, 1.0, 30.0);
    let exact = position_filter(&d).unwrap();
    let (syy, h) = table_filter(&d, 1 << 18);
    let (_, h2) = table_filter(&d, 1 << 19);
    let (mut err, mut drift) = (0.0_f64, 0.0_f64);
    // Grid nodes of the coarse table, which the fine table also contains.
    for k in [0, 10, 50, 90, 100, 101, 110, 200, 400] {
        let w = syy.omega(k);
        err = err.max(crel(h.eval(w), exact.eval(w)));
        drift = drift.max(crel(h.eval(w), h2.eval(w)));
    }
    assert!(err < 5e-5, "{err:e}");
    assert!(drift < 1e-6, "{drift:e}");
}

#[test]
fn tabulated_filter_impulse_is_causal() {
    let d = dq(10.0, 20.0, 1.0, 30.0);
    let (syy, h) = table_filter(&d, 1 << 18);
    let r = h.impulse_response(syy.dt(), 30.0 / d.gamma_prime).unwrap();
    assert!(r.leakage < 1e-8, "{:e}", r.leakage);
    assert!(h.impulse_response(syy.dt() * 2.0, 1.0).is_err());
}

#[test]
fn closed_form_filters_are_locally_optimal() {
    let d = dq(40.0, 50.0, 0.8, 200.0);
    let base = AnalyticFilter::new(&d, Target::Position).unwrap();
    let v0 = error_variance(&d, None, Target::Position, &FilterResponse::Analytic(base)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worse = 0;
    for _ in 0..100 {
        let mut f = base;
        let mut jitter = |x: &mut f64| *x *= 1.0 + 1e-3 * rng.random_range(-1.0..1.0);
        jitter(&mut f.coef_a);
        jitter(&mut f.coef_b);
        jitter(&mut f.omega_prime);
        jitter(&mut f.gamma_prime);
        let v = error_variance(&d, None, Target::Position, &FilterResponse::Analytic(f)).unwrap();
        if v >= v0 {
            worse += 1;
        }
    }
    assert!(worse >= 99, "{worse}");
}

#[test]
fn spectral_error_integral_reaches_closed_form() {
    for (q, n, eta, c) in [(50.0, 100.0, 1.0, 500.0), (1e3, 1e5, 0.3, 40.0)] {
        let d = dq(q, n, eta, c);
        let v = error_covariance(
            &d,
            None,
            &position_filter(&d).unwrap(),
            &momentum_filter(&d).unwrap(),
        )
        .unwrap();
        let w = conditional_covariance(&d).unwrap();
        assert!(rel(v.v_qq, w.v_qq) < 1e-6);
        assert!(rel(v.v_pp, w.v_pp) < 1e-6);
        assert!(rel(v.c_qp, w.c_qp) < 1e-6);
    }
}

#[test]
fn pink_model_reporting() {
    let omega = 2.0 * PI * 694e3;
    let m = ExcessNoiseModel::pink(omega);
    assert!((m.dc_db() - 66.4).abs() < 0.05);
    let corner_hz = m.corner().unwrap() / (2.0 * PI);
    assert!(rel(corner_hz, 6.94e4) < 1e-6);
    assert!(ExcessNoiseModel::table(vec![1.0, 1.0], vec![1.0, 1.0]).is_err());
    assert!(ExcessNoiseModel::White(-1.0).validate().is_err());
}

fn si_point(q: f64, c: f64) -> DerivedQuantities {
    let omega = 2.0 * PI * 694e3;
    let n = thermal_occupancy(omega, 300.0).unwrap().n_th;
    derive(
        &OscillatorParams::new(
            omega,
            omega / q,
            0.5,
            Bath::Occupancy(n),
            Coupling::Cooperativity(c),
        )
        .unwrap(),
    )
    .unwrap()
}

#[test]
fn pink_noise_is_suppressed_at_low_frequency() {
    let d = si_point(1e5, 3e5);
    let pink = ExcessNoiseModel::pink(d.omega);
    let (hx, _) = excess_filters(&d, Some(&pink), ResidualGrid::default()).unwrap();
    let clean = position_filter(&d).unwrap();
    for k in 0..60 {
        let w = 0.1 * d.omega * 10f64.powf(-(k as f64) / 10.0);
        for w in [w, -w] {
            assert!(hx.eval(w).norm() < clean.eval(w).norm(), "{w}");
        }
    }
}

// tests/oracles/pink_care.py: Lorentzian-sum CARE, fit error 8.5e-4 in the PSD.
#[test]
fn pink_covariance_matches_state_space_oracle() {
    let d = si_point(4129.9, 28387.786625515342);
    let pink = ExcessNoiseModel::pink(d.omega);
    let v = excess_covariance(&d, Some(&pink), ResidualGrid::default()).unwrap();
    assert!(rel(v.v_qq, 1.9577074694662286) < 1e-3, "{}", v.v_qq);
    assert!(rel(v.v_pp, 664.1942723901603) < 1e-3, "{}", v.v_pp);
    assert!(rel(v.c_qp, 25.202105730612306) < 1e-3, "{}", v.c_qp);
    assert!((v.v_min - 1.0).abs() < 1e-3);
}

#[test]
fn excess_noise_never_helps() {
    let d = dq(50.0, 100.0, 1.0, 500.0);
    let clean = conditional_covariance(&d).unwrap();
    for m in [
        ExcessNoiseModel::White(0.3),
        ExcessNoiseModel::Pink {
            level: 0.1,
            omega_ref: 50.0,
            offset: 0.1,
        },
        ExcessNoiseModel::table(vec![0.0, 40.0, 60.0], vec![0.0, 2.0, 0.0]).unwrap(),
    ] {
        let v = excess_covariance(&d, Some(&m), ResidualGrid::default()).unwrap();
        assert!(v.v_qq >= clean.v_qq && v.v_pp >= clean.v_pp, "{m:?}");
        assert!(v.determinant() >= clean.determinant());
    }
}
