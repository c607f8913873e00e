use symprop::distributions::PropertyKind;
use symprop::estimators::Mode;
use symprop::harness::{
    run_experiment, trial_seed, verify_ml_metatheorem, EstimatorKind, ExperimentConfig,
    ReferenceEstimator, VerifyOptions,
};
use symprop::profiles::{enumerate_profiles, Profile};

fn config(
    dist: &str,
    property: PropertyKind,
    n_grid: Vec<usize>,
    estimators: Vec<EstimatorKind>,
) -> ExperimentConfig {
    ExperimentConfig {
        dist_spec: dist.into(),
        property,
        n_grid,
        trials: 10,
        estimators,
        master_seed: 5,
        epsilon: 0.1,
        mode: Mode::Performance,
        pml: None,
        record_timing: false,
    }
}

#[test]
fn point_mass_has_zero_error() {
    let cfg = config(
        "point:50",
        PropertyKind::Entropy,
        vec![10, 30],
        vec![EstimatorKind::Sml, EstimatorKind::Pml],
    );
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.trials.len(), 2 * 2 * 10);
    for t in &report.trials {
        assert_eq!(t.estimate, Some(0.0), "{t:?}");
        assert_eq!(t.abs_error, Some(0.0));
    }
}

#[test]
fn sml_never_exceeds_log_n() {
    let mut cfg = config(
        "uniform:2000",
        PropertyKind::Entropy,
        vec![1000],
        vec![EstimatorKind::Sml],
    );
    cfg.trials = 50;
    let report = run_experiment(&cfg).unwrap();
    let ceiling = 1000f64.ln();
    assert!(report.trials.iter().all(|t| t.estimate.unwrap() <= ceiling));
    let agg = report.aggregate(EstimatorKind::Sml, 1000).unwrap();
    assert_eq!(agg.completed, 50);
    // with at most 1000 distinct symbols the error is at least ln 2000 - ln 1000
    assert!(agg.mae.unwrap() >= 2f64.ln() - 1e-12);
    assert_eq!(agg.prob_error_above_epsilon, Some(1.0));
}

#[test]
fn reports_are_reproducible_and_seeded_per_trial() {
    let cfg = config(
        "twostep:100:4",
        PropertyKind::SupportCoverage { m: 400 },
        vec![100, 200],
        vec![EstimatorKind::Sml, EstimatorKind::Gt],
    );
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv_string().unwrap(), b.to_csv_string().unwrap());
    for t in &a.trials {
        assert_eq!(
            t.seed,
            trial_seed(cfg.master_seed, t.estimator, t.n, t.trial)
        );
    }
    let mut other = cfg.clone();
    other.master_seed += 1;
    assert_ne!(run_experiment(&other).unwrap().trials, a.trials);
}

#[test]
fn failed_trials_are_recorded_not_fatal() {
    // odd n cannot be split; n = 60 is beyond the PML guard
    let cfg = config(
        "uniform:20",
        PropertyKind::Entropy,
        vec![9, 10, 60],
        vec![EstimatorKind::Poly, EstimatorKind::Pml],
    );
    let report = run_experiment(&cfg).unwrap();
    let status = |e, n| {
        report
            .trials
            .iter()
            .filter(move |t| t.estimator == e && t.n == n)
    };
    assert!(status(EstimatorKind::Poly, 9).all(|t| t.estimate.is_none() && t.status != "ok"));
    assert!(status(EstimatorKind::Pml, 60).all(|t| t.estimate.is_none() && t.status != "ok"));
    assert!(status(EstimatorKind::Pml, 10).all(|t| t.status == "ok"));
    let agg = report.aggregate(EstimatorKind::Poly, 9).unwrap();
    assert_eq!((agg.completed, agg.failed), (0, 10));
    assert_eq!(agg.mae, None);
    let csv = report.to_csv_string().unwrap();
    let header = csv.lines().next().unwrap();
    for col in [
        "estimator",
        "property",
        "dist",
        "n",
        "trial",
        "estimate",
        "truth",
        "abs_error",
        "seed",
        "status",
    ] {
        assert!(header.split(',').any(|c| c == col), "missing column {col}");
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = config(
        "uniform:20",
        PropertyKind::Entropy,
        vec![20, 10],
        vec![EstimatorKind::Sml],
    );
    assert!(run_experiment(&cfg).is_err());
    cfg.n_grid = vec![10];
    cfg.trials = 0;
    assert!(run_experiment(&cfg).is_err());
    cfg.trials = 1;
    cfg.estimators = vec![EstimatorKind::Gt];
    assert!(run_experiment(&cfg).is_err());
    assert!(ExperimentConfig::from_json("{\"dist_spec\": 3}").is_err());
}

#[test]
fn poly_failure_rate_falls_with_n() {
    let mut cfg = config(
        "uniform:100",
        PropertyKind::Entropy,
        vec![200, 400, 800, 1600],
        vec![EstimatorKind::Poly],
    );
    cfg.trials = 200;
    let report = run_experiment(&cfg).unwrap();
    let rates: Vec<f64> = cfg
        .n_grid
        .iter()
        .map(|&n| {
            report
                .aggregate(EstimatorKind::Poly, n)
                .unwrap()
                .prob_error_above_epsilon
                .unwrap()
        })
        .collect();
    let inversions = rates.windows(2).filter(|w| w[1] > w[0]).count();
    assert!(inversions <= 1, "failure rates {rates:?}");
    assert!(rates[rates.len() - 1] < rates[0], "failure rates {rates:?}");
}

#[test]
fn metatheorem_report_is_consistent() {
    let opts = VerifyOptions::entropy(6, vec![0.1, 0.2], 0.05, vec![1.0, 0.5]);
    let report = verify_ml_metatheorem(&opts).unwrap();
    assert_eq!(report.num_profiles, 11);
    assert!(report.holds);
    assert!(report.max_path_discrepancy <= 1e-10);
    for e in &report.epsilons {
        let beta_one = e.betas.iter().find(|b| b.beta == 1.0).unwrap();
        assert!(beta_one.max_failure >= e.max_pml_failure - 1e-12);
        assert!((beta_one.bound - e.bound).abs() <= 1e-12);
        for p in &e.points {
            assert!((0.0..=1.0 + 1e-12).contains(&p.delta_p));
            assert!((0.0..=1.0 + 1e-12).contains(&p.pml_failure));
            assert!((p.delta_p - p.delta_p_enumerated).abs() <= 1e-10);
            assert!((p.pml_failure - p.pml_failure_enumerated).abs() <= 1e-10);
        }
    }
}

#[test]
fn metatheorem_with_table_reference() {
    // a deliberately poor reference: always answers ln 2
    let values: Vec<(Profile, f64)> = enumerate_profiles(5)
        .unwrap()
        .into_iter()
        .map(|p| (p, 2f64.ln()))
        .collect();
    let mut opts = VerifyOptions::entropy(5, vec![0.1], 0.1, vec![1.0]);
    opts.reference = ReferenceEstimator::Table { values };
    let report = verify_ml_metatheorem(&opts).unwrap();
    let e = &report.epsilons[0];
    // at q = 0 the reference misses by ln 2 > 0.1 with certainty
    assert!((e.delta - 1.0).abs() <= 1e-12);
    assert!(report.holds);

    let too_big = VerifyOptions::entropy(8, vec![0.1], 0.1, vec![1.0]);
    assert!(verify_ml_metatheorem(&too_big).is_err());
}
