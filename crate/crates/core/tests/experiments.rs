use glacier::experiments::{
    csv_path, run_experiment, run_manifest, ExperimentConfig, ExperimentKind, FreezeDiagnostics, CSV_HEADER,
    FREEZE_BINS, PROFILE_LABELS, SCALES_CSV_HEADER,
};
use glacier::Error;

fn small_config(out: &std::path::Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.merge_text(&format!(
        "# small but complete\nN = 400, 900\nC = 0.45, 1, 1.5\ntrials = 120\nseed = 3\nout = {}\npi_stderr = 0.02\n",
        out.display()
    ))
    .unwrap();
    c
}

#[test]
fn manifest_round_trips_through_the_parser() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let (table, manifest) = run_manifest(ExperimentKind::Prop1, &config).unwrap();
    assert_eq!(manifest.config().unwrap(), config);
    assert_eq!(manifest.master_seed, 3);
    assert_eq!(table.rows.len(), 6);
    let on_disk: glacier::experiments::Manifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("prop1.manifest.json")).unwrap()).unwrap();
    assert_eq!(on_disk, manifest);
    for name in ["prop1.csv", "prop1.json", "prop1.manifest.json"] {
        assert!(manifest.outputs.iter().any(|o| o == name), "{name}");
        assert!(dir.path().join(name).exists());
    }
}

#[test]
fn prop1_csv_schema_and_exact_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    run_manifest(ExperimentKind::Prop1, &config).unwrap();
    let text = std::fs::read_to_string(csv_path(ExperimentKind::Prop1, &config)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 9 && r[8].is_empty()));
    // ⌈0.45·√N⌉ gives a box with fewer than N vertices
    for r in rows.iter().filter(|r| r[2] == "0.45") {
        assert_eq!((r[4], r[5]), ("0", "0"));
    }
    let keys: Vec<(u64, &str)> = rows.iter().map(|r| (r[1].parse().unwrap(), r[3])).collect();
    assert!(keys.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn csv_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    let mut csvs = Vec::new();
    for threads in ["1", "4"] {
        config.set("threads", threads).unwrap();
        csvs.push(run_experiment(ExperimentKind::Prop1, &config).unwrap().csv(false));
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn empty_or_bad_grids_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    config.set("C", "").unwrap();
    let err = run_experiment(ExperimentKind::Prop1, &config).unwrap_err();
    assert!(err.is_validation(), "{err}");
    let mut config = small_config(dir.path());
    config.set("C1", "3").unwrap();
    assert!(run_experiment(ExperimentKind::FreezeDiag, &config).unwrap_err().is_validation());
    assert!(matches!("bogus = 1".parse::<ExperimentConfig>(), Err(Error::Config(_))));
    assert!(matches!("N: 4".parse::<ExperimentConfig>(), Err(Error::Config(_))));
}

#[test]
fn scales_write_level_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    config.merge_text("N = 10000\ndepth = 2").unwrap();
    let (table, manifest) = run_manifest(ExperimentKind::Scales, &config).unwrap();
    assert!(manifest.outputs.iter().any(|o| o == "scales-N10000.csv"));
    let levels = std::fs::read_to_string(dir.path().join("scales-N10000.csv")).unwrap();
    let mut lines = levels.lines();
    assert_eq!(lines.next(), Some(SCALES_CSV_HEADER));
    let m1: Vec<&str> = lines.nth(1).unwrap().split(',').collect();
    assert_eq!((m1[0], m1[1]), ("1", "104"));
    assert!(table.row(10_000, "pi(m_1)").is_some());
}

#[test]
fn profile_emits_five_labelled_points() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    config.merge_text("N = 900\ntrials = 60").unwrap();
    let table = run_experiment(ExperimentKind::Profile, &config).unwrap();
    let labels: Vec<&str> = table.rows.iter().map(|r| r.point_label.as_str()).collect();
    assert_eq!(labels, PROFILE_LABELS);
    let scales: Vec<u32> = table.rows.iter().map(|r| r.n_or_c.parse().unwrap()).collect();
    assert!(scales.windows(2).all(|w| w[0] <= w[1]), "{scales:?}");
}

#[test]
fn freeze_diagnostics_report_unreachable_windows() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    config.merge_text("N = 400\ntrials = 40\ntheta_trials = 500\nproxy_cap = 80").unwrap();
    let table = run_experiment(ExperimentKind::FreezeDiag, &config).unwrap();
    let diag: Vec<FreezeDiagnostics> = serde_json::from_value(table.details["diagnostics"].clone()).unwrap();
    let d = &diag[0];
    assert!(d.window.is_none() && d.window_error.is_some());
    assert!(table.warnings.iter().any(|w| w.contains("unreachable")));
    assert_eq!(d.histogram.len(), FREEZE_BINS);
    assert_eq!(d.histogram.iter().sum::<u64>() + d.never_froze, d.trials);
    assert!(d.box_radius >= d.region_radius && d.scale >= d.m_k);
    let h = &d.holes;
    assert!(h.origin_frozen + h.unbounded <= d.trials);
    assert!(table.row(400, "hole_in_annulus").is_some());
}
