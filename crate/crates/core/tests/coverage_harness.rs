use gfi_core::sim::{
    self, compare_to_reference, run_cell, run_experiment, ExperimentConfig, Format, Method, ReferenceTable,
};
use gfi_core::Error;

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        methods: vec![Method::GF, Method::JeffreysBayes],
        n_values: vec![3, 20],
        theta_values: vec![0.1, 0.5],
        replicates: 200,
        level: 0.95,
        grid_size: 512,
        seed: 17,
    }
}

#[test]
fn single_cell_experiment_equals_run_cell() {
    let config = ExperimentConfig {
        methods: vec![Method::ModGF],
        n_values: vec![10],
        theta_values: vec![0.3],
        ..small_config()
    };
    let records = run_experiment(&config).unwrap();
    let direct = run_cell(Method::ModGF, 10, 0.3, 200, 0.95, 512, 17).unwrap();
    assert_eq!(records, vec![direct]);
}

#[test]
fn cell_order_does_not_matter() {
    let config = small_config();
    let shuffled = ExperimentConfig {
        methods: vec![Method::JeffreysBayes, Method::GF],
        n_values: vec![20, 3],
        theta_values: vec![0.5, 0.1],
        ..small_config()
    };
    assert_eq!(run_experiment(&config).unwrap(), run_experiment(&shuffled).unwrap());
}

#[test]
fn output_is_independent_of_worker_count() {
    let render = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| sim::to_csv_string(&run_experiment(&small_config()).unwrap()).unwrap())
    };
    let one = render(1);
    assert_eq!(one, render(4));
    assert_eq!(one, render(7));
}

#[test]
fn seed_changes_the_results() {
    let a = run_experiment(&small_config()).unwrap();
    let b = run_experiment(&ExperimentConfig { seed: 18, ..small_config() }).unwrap();
    assert_ne!(a, b);
}

#[test]
fn full_grid_has_320_cells() {
    let config = ExperimentConfig { replicates: 1, grid_size: 64, ..ExperimentConfig::default() };
    assert_eq!(config.cell_count(), 320);
    let records = run_experiment(&config).unwrap();
    assert_eq!(records.len(), 320);
    assert!(compare_to_reference(&records, 0.015, 0.02).is_ok());
}

#[test]
fn verbatim_reference_passes_and_perturbation_fails() {
    let mut records = ReferenceTable::get().records(10_000);
    let report = compare_to_reference(&records, 0.015, 0.02).unwrap();
    assert!(report.passed);
    assert_eq!(report.passed_cells, 320);

    records[5].coverage += 0.15;
    records[9].mean_length += 0.2;
    let report = compare_to_reference(&records, 0.015, 0.02).unwrap();
    assert!(!report.cells[5].passed);
    assert!(!report.cells[9].passed);
    assert_eq!(report.passed_cells, 318);
    assert!(report.passed);

    for r in records.iter_mut().take(17) {
        r.coverage = 0.0;
    }
    assert!(!compare_to_reference(&records, 0.015, 0.02).unwrap().passed);
}

#[test]
fn replicate_variance_scales_inversely() {
    let variance = |replicates: usize| {
        let cov: Vec<f64> = (0..300u64)
            .map(|seed| run_cell(Method::GF, 5, 0.3, replicates, 0.95, 256, seed).unwrap().coverage)
            .collect();
        let mean = cov.iter().sum::<f64>() / cov.len() as f64;
        cov.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (cov.len() - 1) as f64
    };
    let v = [variance(25), variance(100), variance(400)];
    for w in v.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio / 4.0 - 1.0).abs() < 0.3, "variances {v:?}");
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        ExperimentConfig { replicates: 0, ..small_config() },
        ExperimentConfig { methods: vec![], ..small_config() },
        ExperimentConfig { theta_values: vec![0.0], ..small_config() },
        ExperimentConfig { level: 1.0, ..small_config() },
        ExperimentConfig { n_values: vec![0], ..small_config() },
    ];
    for c in bad {
        assert!(matches!(run_experiment(&c), Err(Error::InvalidConfig(_))));
    }
}

#[test]
fn emit_writes_files_and_reports_paths() {
    let dir = tempfile::tempdir().unwrap();
    let records = run_experiment(&small_config()).unwrap();
    for (format, name) in [(Format::Csv, "out.csv"), (Format::Json, "out.json")] {
        let path = dir.path().join(name);
        sim::emit(&records, format, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.contains('\r'));
        assert_eq!(sim::load(&path, format).unwrap(), records);
    }
    let missing = dir.path().join("no/such/dir/out.csv");
    match sim::emit(&records, Format::Csv, &missing) {
        Err(Error::Io { path, .. }) => assert_eq!(path, missing),
        other => panic!("expected an IO error, got {other:?}"),
    }
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("study.conf");
    std::fs::write(&path, "methods = FlatBayes\nn_values = 4, 8\ntheta_values = 0.2\nreplicates = 30\ngrid_size = 128\nseed = 5\n").unwrap();
    let config = ExperimentConfig::from_file(&path).unwrap();
    assert_eq!(config.methods, vec![Method::FlatBayes]);
    assert_eq!(config.n_values, vec![4, 8]);
    assert_eq!(run_experiment(&config).unwrap().len(), 2);
    assert!(matches!(ExperimentConfig::from_file(&dir.path().join("missing")), Err(Error::Io { .. })));
}
