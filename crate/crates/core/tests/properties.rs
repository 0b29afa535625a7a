use proptest::prelude::*;

use threshold_kw::dynamics::{simulate_ar1, simulate_dgsv, Ar1Params, DgsvParams};
use threshold_kw::kw::{self, Exponents, LearnerConfig, ScalingMode, StepOrigin};
use threshold_kw::strategy::{
    growth_increment, realized_growth, wealth_path, Direction, StrategyKind, Theta,
};

fn ar1() -> impl Strategy<Value = Ar1Params> {
    (-0.02..0.02f64, -0.9..0.9f64, 0.001..0.1f64).prop_map(|(mu, alpha, sigma)| Ar1Params {
        mu,
        alpha,
        sigma,
    })
}

fn dgsv() -> impl Strategy<Value = DgsvParams> {
    (ar1(), -1.0..1.0f64, 0.05..0.6f64, 0.55..0.95f64, 2usize..80).prop_map(
        |(a, rho, b0, b, lags)| DgsvParams {
            mu: a.mu,
            alpha: a.alpha,
            sigma: a.sigma,
            rho,
            b0,
            b,
            lags,
        },
    )
}

fn direction() -> impl Strategy<Value = Direction> {
    prop_oneof![Just(Direction::Above), Just(Direction::Below)]
}

fn learner() -> impl Strategy<Value = LearnerConfig> {
    (
        direction(),
        0.6..1.0f64,
        0.05..0.45f64,
        prop_oneof![
            Just(ScalingMode::None),
            Just(ScalingMode::Stdev),
            Just(ScalingMode::Stdev5)
        ],
        prop_oneof![Just(StepOrigin::DataTime), Just(StepOrigin::FirstUpdate)],
    )
        .prop_map(|(direction, p, q, scaling, step_origin)| LearnerConfig {
            direction,
            schedule: Exponents { p, q },
            schedule2: Exponents { p, q },
            scaling,
            step_origin,
            ..LearnerConfig::default()
        })
}

fn running_bounds(h: &[f64]) -> Vec<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    h.iter()
        .map(|&x| {
            lo = lo.min(x);
            hi = hi.max(x);
            (lo, hi)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn increment_is_position_times_return(h in -5.0..5.0f64) {
        prop_assert_eq!(growth_increment(h, 0), 0.0);
        prop_assert_eq!(growth_increment(h, 1), h);
        // The increment agrees with log(1 - π + π e^h) where that is exact enough to compare.
        prop_assert!((h.exp().ln() - growth_increment(h, 1)).abs() < 1e-12);
    }

    #[test]
    fn final_wealth_is_total_growth(p in ar1(), seed in any::<u64>(), theta1 in -0.1..0.1f64, dir in direction()) {
        let path = simulate_ar1(&p, 400, seed).unwrap();
        let theta = Theta::univariate(theta1).with_direction(dir);
        let w = wealth_path(&path, &theta, StrategyKind::Univariate).unwrap();
        let g = realized_growth(&path, &theta, StrategyKind::Univariate).unwrap();
        let last = *w.last().unwrap();
        prop_assert!((last - 399.0 * g).abs() <= 1e-12 * last.abs().max(1.0));
    }

    #[test]
    fn log_volatility_update_identity(p in dgsv(), seed in any::<u64>()) {
        let path = simulate_dgsv(&p, 300, seed).unwrap();
        let beta0 = p.b0;
        for i in 0..path.len() {
            let lhs = path.log_vol[i] - path.nu[i];
            let ulp = f64::EPSILON * path.log_vol[i].abs().max(path.nu[i].abs());
            prop_assert!((lhs - beta0 * path.eps[i]).abs() <= 2.0 * ulp);
        }
    }

    #[test]
    fn dgsv_without_volatility_is_ar1(a in ar1(), b in 0.55..0.95f64, seed in any::<u64>()) {
        let d = DgsvParams { mu: a.mu, alpha: a.alpha, sigma: a.sigma, rho: 1.0, b0: 0.0, b, lags: 20 };
        let x = simulate_dgsv(&d, 200, seed).unwrap();
        let y = simulate_ar1(&a, 200, seed).unwrap();
        prop_assert_eq!(x.h, y.h);
    }

    #[test]
    fn univariate_threshold_stays_in_running_range(p in ar1(), cfg in learner(), seed in any::<u64>()) {
        let path = simulate_ar1(&p, 600, seed).unwrap();
        let run = kw::run(&path, &cfg).unwrap();
        let bounds = running_bounds(&path.h);
        for (i, &theta) in run.trajectory.theta1.iter().enumerate() {
            let (lo, hi) = bounds[run.trajectory.start_t + i - 1];
            prop_assert!(lo <= theta && theta <= hi, "t={} θ={} not in [{}, {}]", run.trajectory.start_t + i, theta, lo, hi);
        }
    }

    #[test]
    fn bivariate_thresholds_stay_in_bounds(p in dgsv(), cfg in learner(), seed in any::<u64>()) {
        let cfg = LearnerConfig { kind: StrategyKind::Volatility, theta2_bounds: [-0.5, 0.5], ..cfg };
        let path = simulate_dgsv(&p, 600, seed).unwrap();
        let run = kw::run(&path, &cfg).unwrap();
        let bounds = running_bounds(&path.h);
        let theta2 = run.trajectory.theta2.as_ref().unwrap();
        for (i, (&t1, &t2)) in run.trajectory.theta1.iter().zip(theta2).enumerate() {
            let (lo, hi) = bounds[run.trajectory.start_t + i - 1];
            prop_assert!(lo <= t1 && t1 <= hi);
            prop_assert!((-0.5..=0.5).contains(&t2));
        }
    }

    #[test]
    fn learner_ignores_the_future(p in ar1(), seed in any::<u64>(), cut in 11usize..399, shift in -1.0..1.0f64) {
        let cfg = LearnerConfig::default();
        let path = simulate_ar1(&p, 400, seed).unwrap();
        let mut altered = path.clone();
        for h in &mut altered.h[cut..] {
            *h += shift;
        }
        let a = kw::run(&path, &cfg).unwrap().trajectory;
        let b = kw::run(&altered, &cfg).unwrap().trajectory;
        // θ after time `cut` depends on H_1..H_cut only, i.e. h[..cut].
        let upto = cut - a.start_t + 1;
        prop_assert_eq!(&a.theta1[..upto], &b.theta1[..upto]);
    }

    #[test]
    fn wealth_ignores_the_future(p in dgsv(), seed in any::<u64>(), cut in 2usize..199, shift in -1.0..1.0f64) {
        let path = simulate_dgsv(&p, 200, seed).unwrap();
        let mut altered = path.clone();
        for i in cut..altered.len() {
            altered.h[i] += shift;
            altered.nu[i] += shift;
        }
        let theta = Theta::volatility(p.mu, 0.1);
        let a = wealth_path(&path, &theta, StrategyKind::Volatility).unwrap();
        let b = wealth_path(&altered, &theta, StrategyKind::Volatility).unwrap();
        prop_assert_eq!(&a[..cut], &b[..cut]);
    }
}
