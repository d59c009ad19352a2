use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use squeeze_core::montecarlo::{
    apply_filter, block_length, error_statistics, run_ensemble, simulate, trajectory_seed,
    BlockMoments, FilterPair, SimulationConfig,
};
use squeeze_core::wiener::{
    error_covariance, excess_covariance, excess_filters, momentum_filter, position_filter,
    AnalyticFilter, ExcessNoiseModel, FilterResponse, ImpulseResponse, ResidualGrid, Target,
};
use squeeze_core::{conditional_covariance, derive, DerivedQuantities, OscillatorParams};

fn dq(q: f64, n: f64, eta: f64, c: f64) -> DerivedQuantities {
    derive(&OscillatorParams::dimensionless(q, n, eta, c).unwrap()).unwrap()
}

fn pair(
    d: &DerivedQuantities,
    cfg: &SimulationConfig,
    hq: &FilterResponse,
    hp: &FilterResponse,
) -> FilterPair {
    FilterPair {
        q: hq.impulse_response(cfg.dt, cfg.filter_truncation).unwrap(),
        p: hp.impulse_response(cfg.dt, cfg.filter_truncation).unwrap(),
    }
    .checked(d)
}

trait Checked {
    fn checked(self, d: &DerivedQuantities) -> Self;
}

impl Checked for FilterPair {
    fn checked(self, d: &DerivedQuantities) -> Self {
        assert!(self.q.len() as f64 * self.q.dt >= SimulationConfig::min_truncation(d));
        self
    }
}

fn optimal(d: &DerivedQuantities, cfg: &SimulationConfig) -> FilterPair {
    pair(
        d,
        cfg,
        &position_filter(d).unwrap(),
        &momentum_filter(d).unwrap(),
    )
}

#[test]
fn records_are_reproducible() {
    let d = dq(10.0, 5.0, 1.0, 20.0);
    let cfg = SimulationConfig::for_window(&d, 50.0, 4, 77);
    let a = simulate(&d, &cfg, None, 2).unwrap();
    let b = simulate(&d, &cfg, None, 2).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.seed, trajectory_seed(77, 2));
    let c = simulate(&d, &cfg, None, 3).unwrap();
    assert_ne!(a.y, c.y);
    let f = optimal(&d, &cfg);
    let r1 = run_ensemble(&d, &cfg, None, std::slice::from_ref(&f)).unwrap();
    let r2 = run_ensemble(&d, &cfg, None, &[f]).unwrap();
    assert_eq!(r1, r2);
}

#[test]
fn uncoupled_oscillator_is_thermal_and_record_is_shot_noise() {
    let d = dq(10.0, 3.0, 1.0, 0.0);
    let cfg = SimulationConfig::for_window(&d, 4000.0, 8, 5);
    let r = run_ensemble(&d, &cfg, None, &[]).unwrap();
    let u = r.unconditional;
    let want = 2.0 * 3.0 + 1.0;
    assert!(
        (u.v_qq - want).abs() < 3.0 * u.se_qq,
        "{} ± {}",
        u.v_qq,
        u.se_qq
    );
    assert!(
        (u.v_pp - want).abs() < 3.0 * u.se_pp,
        "{} ± {}",
        u.v_pp,
        u.se_pp
    );
    assert!(u.c_qp.abs() < 3.0 * u.se_qp);
    let n = (cfg.samples() - cfg.first_scored()) * cfg.trajectories;
    assert!(
        (r.record_variance - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt(),
        "{}",
        r.record_variance
    );
}

#[test]
fn unconditional_moments_follow_lyapunov() {
    let d = dq(10.0, 5.0, 1.0, 20.0);
    let cfg = SimulationConfig::for_window(&d, 300.0, 8, 9);
    let u = run_ensemble(&d, &cfg, None, &[]).unwrap().unconditional;
    let want = 2.0 * d.n_th + 1.0 + 2.0 * d.c;
    assert!(
        (u.v_qq - want).abs() < 3.0 * u.se_qq,
        "{} ± {}",
        u.v_qq,
        u.se_qq
    );
    assert!(
        (u.v_pp - want).abs() < 3.0 * u.se_pp,
        "{} ± {}",
        u.v_pp,
        u.se_pp
    );
}

#[test]
fn zero_filter_errors_equal_raw_moments() {
    let d = dq(10.0, 5.0, 1.0, 20.0);
    let cfg = SimulationConfig::for_window(&d, 100.0, 2, 1);
    let zero = FilterPair {
        q: ImpulseResponse::zero(cfg.dt),
        p: ImpulseResponse::zero(cfg.dt),
    };
    let r = run_ensemble(&d, &cfg, None, &[zero]).unwrap();
    assert_eq!(r.errors[0], r.unconditional);
    let rec = simulate(&d, &cfg, None, 0).unwrap();
    assert!(apply_filter(&rec, &ImpulseResponse::zero(cfg.dt))
        .unwrap()
        .iter()
        .all(|x| *x == 0.0));
}

#[test]
fn optimal_filter_reaches_conditional_covariance() {
    let d = dq(10.0, 5.0, 1.0, 20.0);
    let want = conditional_covariance(&d).unwrap();
    let cfg = SimulationConfig::for_window(&d, 300.0, 8, 2024);
    let e = run_ensemble(&d, &cfg, None, &[optimal(&d, &cfg)])
        .unwrap()
        .errors[0];
    assert!(
        (e.v_qq - want.v_qq).abs() < 3.0 * e.se_qq,
        "{} ± {} vs {}",
        e.v_qq,
        e.se_qq,
        want.v_qq
    );
    assert!(
        (e.v_pp - want.v_pp).abs() < 3.0 * e.se_pp,
        "{} ± {} vs {}",
        e.v_pp,
        e.se_pp,
        want.v_pp
    );
    assert!(
        (e.c_qp - want.c_qp).abs() < 3.0 * e.se_qp,
        "{} ± {} vs {}",
        e.c_qp,
        e.se_qp,
        want.c_qp
    );
    assert!(e.c_qp > 0.0);
    assert!(e.blocks >= 100);
}

#[test]
fn naive_estimators_lose_to_the_optimal_filter() {
    let d = dq(10.0, 5.0, 1.0, 20.0);
    let cfg = SimulationConfig::for_window(&d, 100.0, 2, 3);
    // Inverting the record sample by sample keeps the full shot noise.
    let g = d.record_gain();
    let delta = FilterPair {
        q: ImpulseResponse::delta(cfg.dt, 1.0 / g),
        p: ImpulseResponse::zero(cfg.dt),
    };
    let r = run_ensemble(&d, &cfg, None, &[optimal(&d, &cfg), delta]).unwrap();
    assert!(r.errors[0].v_qq < r.errors[1].v_qq);
    assert!(r.errors[0].v_pp < r.errors[1].v_pp);
}

#[test]
fn standard_errors_shrink_with_more_trajectories() {
    let d = dq(10.0, 5.0, 1.0, 20.0);
    let mut small = SimulationConfig::for_window(&d, 100.0, 16, 404);
    let f = optimal(&d, &small);
    let a = run_ensemble(&d, &small, None, std::slice::from_ref(&f))
        .unwrap()
        .errors[0];
    small.trajectories = 32;
    let b = run_ensemble(&d, &small, None, &[f]).unwrap().errors[0];
    for (x, y) in [(a.se_qq, b.se_qq), (a.se_pp, b.se_pp)] {
        let ratio = x / y;
        assert!((1.1..1.8).contains(&ratio), "{ratio}");
    }
    assert_eq!(b.samples, 2 * a.samples);
}

#[test]
fn perturbed_filters_do_not_beat_the_optimum() {
    let d = dq(10.0, 5.0, 1.0, 20.0);
    let cfg = SimulationConfig::for_window(&d, 200.0, 4, 99);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base_q = AnalyticFilter::new(&d, Target::Position).unwrap();
    let base_p = AnalyticFilter::new(&d, Target::Momentum).unwrap();
    let mut filters = vec![optimal(&d, &cfg)];
    for _ in 0..20 {
        let (mut fq, mut fp) = (base_q, base_p);
        for f in [&mut fq, &mut fp] {
            f.coef_a *= 1.0 + rng.random_range(-0.1..0.1);
            f.coef_b *= 1.0 + rng.random_range(-0.1..0.1);
            f.omega_prime *= 1.0 + rng.random_range(-0.05..0.05);
            f.gamma_prime *= 1.0 + rng.random_range(-0.1..0.1);
        }
        filters.push(pair(
            &d,
            &cfg,
            &FilterResponse::Analytic(fq),
            &FilterResponse::Analytic(fp),
        ));
    }
    let r = run_ensemble(&d, &cfg, None, &filters).unwrap();
    let best = r.errors[0];
    for e in &r.errors[1..] {
        assert!(
            best.v_qq <= e.v_qq + 2.0 * best.se_qq,
            "{} vs {}",
            best.v_qq,
            e.v_qq
        );
        assert!(
            best.v_pp <= e.v_pp + 2.0 * best.se_pp,
            "{} vs {}",
            best.v_pp,
            e.v_pp
        );
    }
}

#[test]
fn excess_aware_filter_wins_under_pink_noise() {
    let d = dq(20.0, 1.0, 1.0, 10.0);
    let pink = ExcessNoiseModel::Pink {
        level: 3.0,
        omega_ref: 20.0,
        offset: 0.1,
    };
    let cfg = SimulationConfig::for_window(&d, 300.0, 8, 31);
    let (xq, xp) = excess_filters(&d, Some(&pink), ResidualGrid::default()).unwrap();
    let (xq, xp) = (FilterResponse::Excess(xq), FilterResponse::Excess(xp));
    let (cq, cp) = (position_filter(&d).unwrap(), momentum_filter(&d).unwrap());
    let r = run_ensemble(
        &d,
        &cfg,
        Some(&pink),
        &[pair(&d, &cfg, &xq, &xp), pair(&d, &cfg, &cq, &cp)],
    )
    .unwrap();
    let (aware, clean) = (r.errors[0], r.errors[1]);
    assert!(aware.v_qq + 3.0 * aware.se_qq < clean.v_qq);
    assert!(aware.v_pp + 3.0 * aware.se_pp < clean.v_pp);

    let want = excess_covariance(&d, Some(&pink), ResidualGrid::default()).unwrap();
    let mismatch = error_covariance(&d, Some(&pink), &cq, &cp).unwrap();
    assert!(
        (aware.v_qq - want.v_qq).abs() < 3.0 * aware.se_qq,
        "{} ± {} vs {}",
        aware.v_qq,
        aware.se_qq,
        want.v_qq
    );
    // Pink noise left in by the clean filter stays correlated far beyond the
    // 10/Γ′ bootstrap block, so its quoted SE is too small to test against.
    assert!(
        (clean.v_qq / mismatch.v_qq - 1.0).abs() < 3e-2,
        "{} vs {}",
        clean.v_qq,
        mismatch.v_qq
    );
    assert!(
        (clean.v_pp / mismatch.v_pp - 1.0).abs() < 3e-2,
        "{} vs {}",
        clean.v_pp,
        mismatch.v_pp
    );
}

#[test]
fn invalid_configurations_are_rejected() {
    let d = dq(10.0, 5.0, 1.0, 20.0);
    let good = SimulationConfig::for_window(&d, 200.0, 1, 0);
    let mut c = good;
    c.dt *= 1.5;
    let e = simulate(&d, &c, None, 0).unwrap_err();
    assert!(e.is_validation());
    let mut c = good;
    c.burn_in *= 0.5;
    assert!(c.validate(&d).is_err());
    let mut c = good;
    c.filter_truncation = 0.5 * SimulationConfig::min_truncation(&d);
    assert!(c.validate(&d).is_err());
    let mut c = good;
    c.trajectories = 0;
    assert!(c.validate(&d).is_err());

    let rec = simulate(&d, &good, None, 0).unwrap();
    assert!(apply_filter(&rec, &ImpulseResponse::zero(good.dt * 2.0)).is_err());
    let zeros = vec![0.0; rec.q.len()];
    assert!(error_statistics(&rec, &zeros[1..], &zeros, 0, 10).is_err());
}

#[test]
fn too_few_blocks_is_an_error() {
    let d = dq(10.0, 5.0, 1.0, 20.0);
    let cfg = SimulationConfig::for_window(&d, 20.0, 1, 0);
    let block = block_length(&d, cfg.dt);
    let rec = simulate(&d, &cfg, None, 0).unwrap();
    let zeros = vec![0.0; rec.q.len()];
    assert!(error_statistics(&rec, &zeros, &zeros, cfg.first_scored(), block).is_err());
    let m = BlockMoments::from_series(&rec.q, &rec.p, rec.q.len() / 10);
    assert!(m.statistics(0).is_err());
    assert!(run_ensemble(&d, &cfg, None, &[]).is_err());
}
