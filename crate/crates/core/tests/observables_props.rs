mod common;

use common::{planck_config, planck_spec, K};
use massosc::evolution::proper_time_at;
use massosc::exec::Exec;
use massosc::observables::{
    oscillation_wavelength, out_of_phase_baseline_exact, out_of_phase_baselines,
    probability_period, simulate_events, survival_curve, survival_exact_joint,
    survival_exact_marginal, survival_isolated, survival_marginal_closed_form, survival_shifted_pair,
    DoubleHitModel, EventPlan, LinearGrid,
};
use massosc::{Constants, Extended, ParticleSpec};
use massosc_oracle as oracle;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `1 - sin²(2θ) sin²(Δm c² τ / 2ħ)` with the argument reduced by the oracle.
fn isolated_oracle(theta: f64, dm: f64, tau: f64) -> f64 {
    let arg = oracle::product(&[dm, K.c(), K.c(), tau])
        / (oracle::rat(K.hbar()) * BigRational::from_integer(2.into()));
    let r = oracle::reduce_mod_2pi(&arg);
    1.0 - (2.0 * theta).sin().powi(2) * r.sin().powi(2)
}

#[test]
fn isolated_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let theta = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
        let dm = 10f64.powf(rng.random_range(-38.0..-20.0));
        let tau = 10f64.powf(rng.random_range(-6.0..1.0));
        let spec = ParticleSpec::new(1e-8, dm, theta);
        let got = survival_isolated(&K, &spec, &Extended::exact(tau)).unwrap();
        let want = isolated_oracle(theta, dm, tau);
        assert!((got - want).abs() < 1e-10, "θ={theta} Δm={dm:e} τ={tau:e}");
    }
}

#[test]
fn marginal_matches_its_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = planck_config();
    for _ in 0..500 {
        let spec = ParticleSpec::new(
            10f64.powf(rng.random_range(-10.0..-6.0)),
            10f64.powf(rng.random_range(-27.0..-22.0)),
            rng.random_range(0.0..std::f64::consts::FRAC_PI_2),
        );
        let tau = Extended::exact(rng.random_range(1e-7..1e-4));
        let exact = survival_exact_marginal(&K, &spec, cfg.separation, &tau).unwrap();
        let closed = survival_marginal_closed_form(&K, &spec, cfg.separation, &tau).unwrap();
        assert!((exact - closed).abs() < 1e-12);
    }
}

#[test]
fn joint_is_isolated_squared_without_gravity() {
    let k0 = Constants::without_gravity();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let spec = ParticleSpec::new(1e-8, 10f64.powf(rng.random_range(-30.0..-20.0)), rng.random_range(0.0..1.5));
        let tau = Extended::exact(10f64.powf(rng.random_range(-8.0..-3.0)));
        let j = survival_exact_joint(&k0, &spec, 1e-15, &tau).unwrap();
        let i = survival_isolated(&k0, &spec, &tau).unwrap();
        assert!((j - i * i).abs() < 1e-12);
    }
}

#[test]
fn no_mixing_means_certain_survival() {
    let spec = ParticleSpec::new(1e-8, 1e-25, 0.0);
    let tau = Extended::exact(1e-5);
    for p in [
        survival_isolated(&K, &spec, &tau).unwrap(),
        survival_shifted_pair(&K, &spec, 1e-15, &tau).unwrap(),
        survival_exact_joint(&K, &spec, 1e-15, &tau).unwrap(),
        survival_exact_marginal(&K, &spec, 1e-15, &tau).unwrap(),
    ] {
        assert_eq!(p, 1.0);
    }
}

#[test]
fn wavelength_and_first_out_of_phase_baseline() {
    let spec = planck_spec();
    let cfg = planck_config();
    let lambda = oscillation_wavelength(&K, &spec, cfg.gamma);
    assert!((lambda / 4.4e-13 - 1.0).abs() < 0.05);
    let l0 = out_of_phase_baselines(&K, &spec, &cfg, 10).unwrap();
    assert!((l0[0].baseline_m / 7.4e6 - 1.0).abs() < 0.05);
    for b in &l0 {
        let want = (b.n as f64 + 0.5) * std::f64::consts::PI;
        assert!((b.phi_g_rad - want).abs() < 1e-9, "n={} got {}", b.n, b.phi_g_rad);
    }
}

#[test]
fn curve_period_is_probability_period() {
    let spec = planck_spec();
    let cfg = planck_config();
    let period = probability_period(&K, &spec, cfg.gamma);
    let start = Extended::exact(cfg.baseline);
    let span = Extended::exact(20.0 * period);
    let grid = LinearGrid::span(start.clone(), &start + &span, 1000).unwrap();
    let curve = survival_curve(&K, &spec, &cfg, &grid, Exec::Parallel).unwrap();
    let ys: Vec<f64> = curve.iter().map(|p| p.p_isolated).collect();
    let fit = oracle::fitted_period(&ys, grid.step.to_f64());
    assert!((fit / period - 1.0).abs() < 0.01, "fit {fit:e} vs {period:e}");
}

#[test]
fn out_of_phase_patterns_are_quarter_cycle_apart() {
    // at L0 the pair oscillation argument leads the lone one by π/2
    let spec = planck_spec();
    let cfg = planck_config();
    let l0 = out_of_phase_baseline_exact(&K, &spec, &cfg, 0).unwrap();
    let period = probability_period(&K, &spec, cfg.gamma);
    let grid = LinearGrid::span(l0.clone(), &l0 + &Extended::exact(4.0 * period), 400).unwrap();
    let mut plan = EventPlan::detector_bins(&cfg, 400, 1_000_000, 9);
    plan.bins = grid.clone();
    plan.model = DoubleHitModel::ShiftedPair;
    plan.affected_fraction = 0.5;
    let ev = simulate_events(&K, &spec, &cfg, &plan, Exec::Parallel).unwrap();
    // phase of the fundamental of sin² over one probability period
    let phase = |ys: Vec<f64>| {
        let (mut re, mut im) = (0.0, 0.0);
        for (k, y) in ys.iter().enumerate() {
            let x = grid.step.to_f64() * k as f64 / period * std::f64::consts::TAU;
            re += y * x.cos();
            im += y * x.sin();
        }
        im.atan2(re)
    };
    let doubles = phase(ev.iter().map(|e| e.n_double_hits as f64 / e.n_affected as f64).collect());
    let singles = phase(
        ev.iter()
            .map(|e| e.n_single_hits as f64 / (e.n_pairs_emitted - e.n_affected) as f64)
            .collect(),
    );
    // the sin² arguments differ by π/2, so the fundamentals differ by π
    let gap = common::angle_gap(doubles, singles);
    assert!((gap - std::f64::consts::PI).abs() < 0.05, "gap {gap}");
}

#[test]
fn double_hits_track_joint_probability() {
    let spec = planck_spec();
    let cfg = planck_config();
    let plan = EventPlan::detector_bins(&cfg, 100, 1_000_000, 42);
    let ev = simulate_events(&K, &spec, &cfg, &plan, Exec::Parallel).unwrap();
    let mut inside = 0;
    for e in &ev {
        let tau = proper_time_at(&K, cfg.gamma, &plan.bins.point(e.bin)).unwrap();
        let p = survival_exact_joint(&K, &spec, cfg.separation, &tau).unwrap();
        let n = e.n_affected as f64;
        let se = (p * (1.0 - p) / n).sqrt().max(1e-12);
        if ((e.n_double_hits as f64 / n) - p).abs() <= 4.0 * se {
            inside += 1;
        }
        assert!(e.n_double_hits + e.n_single_hits <= e.n_pairs_emitted);
    }
    assert!(inside >= 99, "{inside} of 100 bins within 4 SE");
}

#[test]
fn certain_survival_hits_every_pair() {
    let spec = ParticleSpec::new(1e-8, 1e-25, 0.0);
    let cfg = planck_config();
    let plan = EventPlan::detector_bins(&cfg, 10, 1000, 1);
    for e in simulate_events(&K, &spec, &cfg, &plan, Exec::Sequential).unwrap() {
        assert_eq!(e.n_double_hits, e.n_affected);
        assert_eq!(e.n_single_hits, e.n_pairs_emitted - e.n_affected);
    }
}

#[test]
fn events_reproducible_across_schedules() {
    let spec = planck_spec();
    let cfg = planck_config();
    let plan = EventPlan::detector_bins(&cfg, 64, 10_000, 7);
    let a = simulate_events(&K, &spec, &cfg, &plan, Exec::Sequential).unwrap();
    let b = simulate_events(&K, &spec, &cfg, &plan, Exec::Parallel).unwrap();
    let c = simulate_events(&K, &spec, &cfg, &plan, Exec::Parallel).unwrap();
    assert_eq!(a, b);
    assert_eq!(b, c);
}

fn spec_strategy() -> impl Strategy<Value = ParticleSpec> {
    (-12.0f64..-6.0, -38.0f64..-20.0, 0.0f64..std::f64::consts::FRAC_PI_2)
        .prop_map(|(m1, dm, th)| ParticleSpec::new(10f64.powf(m1), 10f64.powf(dm), th))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn probabilities_are_probabilities(spec in spec_strategy(), tau in -9.0f64..1.0, d in -16.0f64..-10.0) {
        let tau = Extended::exact(10f64.powf(tau));
        let d = 10f64.powf(d);
        for p in [
            survival_isolated(&K, &spec, &tau).unwrap(),
            survival_shifted_pair(&K, &spec, d, &tau).unwrap(),
            survival_exact_joint(&K, &spec, d, &tau).unwrap(),
            survival_exact_marginal(&K, &spec, d, &tau).unwrap(),
        ] {
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn joint_never_exceeds_marginal(spec in spec_strategy(), tau in -9.0f64..1.0, d in -16.0f64..-10.0) {
        let tau = Extended::exact(10f64.powf(tau));
        let d = 10f64.powf(d);
        let j = survival_exact_joint(&K, &spec, d, &tau).unwrap();
        let m = survival_exact_marginal(&K, &spec, d, &tau).unwrap();
        prop_assert!(j <= m + 1e-12, "joint {j} marginal {m}");
    }

    #[test]
    fn isolated_has_probability_period(k in 0u32..50, frac in 0.0f64..1.0) {
        let spec = planck_spec();
        let cfg = planck_config();
        let period = probability_period(&K, &spec, cfg.gamma);
        let l = Extended::exact(cfg.baseline + frac * period);
        let shifted = &l + &Extended::exact(period * k as f64);
        let at = |l: &Extended| survival_isolated(&K, &spec, &proper_time_at(&K, cfg.gamma, l).unwrap()).unwrap();
        prop_assert!((at(&l) - at(&shifted)).abs() < 1e-6);
    }
}

#[test]
fn oracle_reduction_sanity() {
    let r = oracle::reduce_mod_2pi(&(oracle::pi() * BigRational::from_integer(3.into())));
    assert!((r - std::f64::consts::PI).abs() < 1e-15);
    assert!(oracle::pi().to_f64().is_some());
}
