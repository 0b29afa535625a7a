use threshold_kw::dynamics::{Ar1Params, DgsvParams, DynamicsSpec};
use threshold_kw::experiments::{
    run_convergence, run_scaling_table, DatasetName, ExperimentConfig, Model, TableConfig,
    ThetaStarSource,
};
use threshold_kw::kw::{self, LearnerConfig, ScalingMode};
use threshold_kw::oracle::McSettings;
use threshold_kw::rng::derive_seed;
use threshold_kw::strategy::StrategyKind;

fn ar1_experiment(n: usize, t_len: usize) -> ExperimentConfig {
    let spec = DynamicsSpec::Ar1(Ar1Params {
        mu: 0.01,
        alpha: 0.5,
        sigma: 0.05,
    });
    ExperimentConfig {
        n_realizations: n,
        t_len,
        base_seed: 17,
        max_points: 50,
        keep_trajectories: true,
        ..ExperimentConfig::new(spec, LearnerConfig::default())
    }
}

#[test]
fn mse_is_the_mean_squared_distance() {
    let cfg = ar1_experiment(5, 3000);
    let run = run_convergence(&cfg).unwrap();
    let star = -0.01 / 0.5;
    assert_eq!(run.series.theta_star, vec![star]);
    let trajs = run.trajectories.as_ref().unwrap();
    assert_eq!(trajs.len(), 5);
    for (&t, &mse) in run.series.t.iter().zip(&run.series.mse) {
        let direct = trajs
            .iter()
            .map(|tr| (tr.at(t).unwrap().theta1 - star).powi(2))
            .sum::<f64>()
            / 5.0;
        assert!((mse - direct).abs() <= 1e-15 * direct.max(1e-300), "t={t}");
    }
    assert_eq!(*run.series.t.first().unwrap(), 10);
    assert_eq!(*run.series.t.last().unwrap(), 3000);
}

#[test]
fn realizations_use_isolated_seeds() {
    let cfg = ar1_experiment(6, 1500);
    let run = run_convergence(&cfg).unwrap();
    let trajs = run.trajectories.unwrap();
    for (i, traj) in trajs.iter().enumerate() {
        let path = cfg
            .dynamics
            .simulate(1500, derive_seed(17, i as u64))
            .unwrap();
        let alone = kw::run(&path, &cfg.learner).unwrap().trajectory;
        assert_eq!(traj, &alone);
    }
    // Fewer realizations leave the shared ones untouched.
    let fewer = run_convergence(&ExperimentConfig {
        n_realizations: 3,
        ..cfg.clone()
    })
    .unwrap();
    assert_eq!(fewer.trajectories.unwrap()[..], trajs[..3]);
}

#[test]
fn worker_count_does_not_change_results() {
    let base = ar1_experiment(7, 2000);
    let one = run_convergence(&ExperimentConfig {
        workers: 1,
        ..base.clone()
    })
    .unwrap();
    let four = run_convergence(&ExperimentConfig { workers: 4, ..base }).unwrap();
    assert_eq!(one.series, four.series);
}

#[test]
fn volatility_learner_tracks_both_coordinates() {
    let spec = DynamicsSpec::Dgsv(DgsvParams {
        mu: 0.01,
        alpha: 0.5,
        sigma: 0.05,
        rho: -0.2,
        b0: 0.4,
        b: 0.7,
        lags: 50,
    });
    let learner = LearnerConfig {
        kind: StrategyKind::Volatility,
        ..LearnerConfig::default()
    };
    let cfg = ExperimentConfig {
        n_realizations: 3,
        t_len: 2000,
        theta_star: ThetaStarSource::Fixed {
            theta1: -0.02,
            theta2: Some(0.01),
        },
        keep_trajectories: true,
        max_points: 20,
        ..ExperimentConfig::new(spec, learner)
    };
    let run = run_convergence(&cfg).unwrap();
    let t = *run.series.t.last().unwrap();
    let direct = run
        .trajectories
        .unwrap()
        .iter()
        .map(|tr| {
            let th = tr.at(t).unwrap();
            (th.theta1 + 0.02).powi(2) + (th.theta2.unwrap() - 0.01).powi(2)
        })
        .sum::<f64>()
        / 3.0;
    assert!((run.series.last() - direct).abs() <= 1e-15 * direct);
}

#[test]
fn table_cells_match_standalone_runs() {
    let table = TableConfig {
        t_len: 3000,
        n_realizations: 4,
        base_seed: 5,
        lags: 40,
        oracle: McSettings {
            grid_size: 41,
            n_paths: 20,
            t_len: 2000,
            ..McSettings::default()
        },
        models: vec![Model::Ar1, Model::Dgsv],
        datasets: vec![DatasetName::Dataset2],
        modes: ScalingMode::ALL.to_vec(),
        ..TableConfig::default()
    };
    let rows = run_scaling_table(&table).unwrap();
    assert_eq!(rows.len(), 6);
    for row in &rows {
        let cell = table.cell(row.dynamics, row.dataset, row.scaling);
        let run = run_convergence(&cell).unwrap();
        assert_eq!(run.series.last(), row.mse_at_t, "{row:?}");
        assert_eq!(run.series.theta_star[0], row.theta_star);
    }
}

#[test]
fn invalid_experiments_are_rejected() {
    let cfg = ar1_experiment(0, 1000);
    assert!(run_convergence(&cfg).is_err());
    let cfg = ar1_experiment(2, 10);
    assert!(run_convergence(&cfg).is_err());
    let analytic_on_dgsv = ExperimentConfig {
        theta_star: ThetaStarSource::Analytic,
        ..ExperimentConfig::new(
            DynamicsSpec::Dgsv(DgsvParams {
                mu: 0.01,
                alpha: 0.5,
                sigma: 0.05,
                rho: -0.2,
                b0: 0.4,
                b: 0.7,
                lags: 10,
            }),
            LearnerConfig::default(),
        )
    };
    assert!(run_convergence(&analytic_on_dgsv).is_err());
}
