use uma::experiment::{run, ExperimentConfig, ExperimentKind, ExperimentReport, CONFUSION_RATE, ERROR_RATE};

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::for_kind(kind);
    c.experiment.seed = 5;
    c.experiment.repeats = 3;
    c.data.n_train = 400;
    c.data.n_test = 2000;
    c
}

fn on_threads(threads: usize, config: &ExperimentConfig) -> ExperimentReport {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| run(config)).unwrap()
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let mut c = small(ExperimentKind::SweepNoise);
    c.experiment.noise_indices = vec![0, 4, 12];
    let one = on_threads(1, &c);
    let three = on_threads(3, &c);
    assert_eq!(one.without_timing(), three.without_timing());
    assert_eq!(one.rows.len(), 3);
}

#[test]
fn identity_level_makes_uma_and_its_identity_variant_agree() {
    let mut c = small(ExperimentKind::SweepNoise);
    c.experiment.noise_indices = vec![0];
    let report = run(&c).unwrap();
    let row = &report.rows[0];
    assert_eq!(row.x, 0.0);
    for metric in [ERROR_RATE, CONFUSION_RATE] {
        assert_eq!(row.series("uma", metric).unwrap().values, row.series("uma_identity", metric).unwrap().values);
    }
}

#[test]
fn reports_round_trip_through_csv() {
    let mut c = small(ExperimentKind::SweepApprox);
    c.experiment.noise_indices = vec![5, 10, 15];
    let report = run(&c).unwrap();
    let back = ExperimentReport::read_csv(report.to_csv_string().as_bytes()).unwrap();
    assert_eq!(back, report);
    let xs: Vec<f64> = report.rows.iter().map(|r| r.x).collect();
    assert_eq!(xs, vec![0.5, 0.0, -0.5]);
}

#[test]
fn pipeline_reports_every_model() {
    let report = run(&small(ExperimentKind::Pipeline)).unwrap();
    assert_eq!(report.rows.len(), 1);
    for name in ["g", "f_full", "uma", "f_y", "f_conf"] {
        let s = report.rows[0].series(name, ERROR_RATE).unwrap();
        assert_eq!(s.values.len(), 3);
        assert!(s.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn strategy_study_shares_data_and_logs_on_a_grid() {
    let mut c = small(ExperimentKind::StrategyStudy);
    c.study.log_every = 25;
    c.uma.max_updates = Some(200);
    let report = run(&c).unwrap();
    assert!(report.rows.len() <= 200 / 25 + 1);
    for row in &report.rows[..report.rows.len() - 1] {
        assert_eq!(row.index % 25, 0);
    }
    for strategy in ["error", "confusion", "random"] {
        assert!(report.rows[0].series(strategy, CONFUSION_RATE).is_some());
    }
    let again = run(&c).unwrap();
    assert_eq!(report.without_timing(), again.without_timing());
}

#[test]
fn random_selection_is_not_the_best_strategy() {
    let mut c = ExperimentConfig::for_kind(ExperimentKind::StrategyStudy);
    c.experiment.repeats = 10;
    c.data.n_test = 2000;
    c.study.log_every = 1_000_000;
    let report = run(&c).unwrap();
    let last = report.rows.last().unwrap();
    let mean = |name| last.series(name, CONFUSION_RATE).unwrap().mean();
    let (error, confusion, random) = (mean("error"), mean("confusion"), mean("random"));
    assert!(random >= error.min(confusion), "random {random}, error {error}, confusion {confusion}");
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let c = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        if let Some(train) = &c.data.train {
            assert!(train.starts_with(&dir));
        }
        seen += 1;
    }
    assert!(seen >= 5);
}
