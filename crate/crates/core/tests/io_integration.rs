use std::fs;

use wmon_core::io::{
    analyze_rows, parse_series, read_analysis, series_rows, series_to_csv, write_json, RunManifest, SeriesRow, SimConfig,
    SERIES_HEADER,
};
use wmon_core::report::{write_report, PANEL_HEADER};
use wmon_core::runner::{sweep_sizes, SweepOptions};
use wmon_core::stats::FitWeighting;
use wmon_core::Error;

const MINIMAL: &str = r#"
model = "XX"
gamma = 0.1
sizes = [8, 10]
n_traj = 4
seed = 7
[monitor]
kind = "single-site"
axis = "z"
"#;

fn rows(model: &str, f: impl Fn(f64) -> f64) -> Vec<SeriesRow> {
    [8usize, 10, 12, 14, 16]
        .iter()
        .map(|&l| SeriesRow {
            model: model.into(),
            monitor: "z".into(),
            n_sites: l,
            gamma: 0.1,
            dt: 0.05,
            n_traj: 100,
            s_mean: f(l as f64),
            s_stderr: 0.01,
        })
        .collect()
}

#[test]
fn minimal_config_runs_and_serializes() {
    let cfg = SimConfig::from_toml(MINIMAL).unwrap();
    assert_eq!(cfg.dt, 0.05);
    assert_eq!(cfg.sample_times, vec![26.0, 27.0, 28.0, 29.0, 30.0]);
    let base = cfg.run_config().unwrap();
    let sweep = sweep_sizes(&base, &cfg.sizes, &SweepOptions::default()).unwrap();
    let csv = series_to_csv(&series_rows(&base, &sweep.points)).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], SERIES_HEADER);
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("XX,z,8,0.1,0.05,4,"), "{}", lines[1]);
    assert_eq!(parse_series(&csv).unwrap(), series_rows(&base, &sweep.points));
}

#[test]
fn missing_key_is_named() {
    let text = MINIMAL.replace("sizes = [8, 10]\n", "");
    let err = SimConfig::from_toml(&text).unwrap_err().to_string();
    assert!(err.contains("sizes"), "{err}");
}

#[test]
fn unknown_key_is_rejected() {
    let text = MINIMAL.replace("seed = 7", "seed = 7\nsizez = [4]");
    assert!(SimConfig::from_toml(&text).is_err());
}

#[test]
fn negative_rate_is_rejected() {
    let text = MINIMAL.replace("gamma = 0.1", "gamma = -1.0");
    let err = SimConfig::from_toml(&text).unwrap().run_config().unwrap_err();
    assert!(matches!(err, Error::NegativeRate(_)));
    assert!(err.to_string().contains("measurement rate must be ≥ 0"), "{err}");
}

#[test]
fn preset_overrides_and_custom_couplings() {
    let text = MINIMAL.replace("model = \"XX\"", "model = \"XXZz\"") + "[overrides]\njz = 0.8\nhz = 0.3\n";
    let c = SimConfig::from_toml(&text).unwrap().run_config().unwrap();
    assert_eq!((c.model.couplings.jz, c.model.couplings.hz), (0.8, 0.3));
    let bad = MINIMAL.replace("model = \"XX\"", "model = \"XXZ\"") + "[overrides]\nhz = 0.3\n";
    assert!(SimConfig::from_toml(&bad).unwrap().run_config().is_err());
    let custom = MINIMAL.replace("model = \"XX\"\n", "") + "[couplings]\njx = 1.0\njy = 0.2\njz = 0.1\nhz = 0.0\n";
    let c = SimConfig::from_toml(&custom).unwrap().run_config().unwrap();
    assert!(c.model.preset.is_none());
    assert!(c.model.label().starts_with("custom"));
}

#[test]
fn series_header_is_exact() {
    let csv = series_to_csv(&rows("XX", |l| l)).unwrap();
    assert!(parse_series(&csv.replacen("S_mean", "s_mean", 1)).is_err());
    assert_eq!(parse_series(&csv).unwrap(), rows("XX", |l| l));
}

#[test]
fn analysis_verdicts() {
    let mut all = rows("XXZ", |l| 0.25 * l);
    all.extend(rows("XX", |l| 0.8 * l.ln() + 0.1));
    let entries = analyze_rows(&all, FitWeighting::Unweighted, 0.5).unwrap();
    let by = |m: &str| entries.iter().find(|e| e.setup.model == m).unwrap();
    assert_eq!(by("XXZ").report.p, 1.0);
    assert_eq!(by("XXZ").verdict, "volume-law favored");
    assert_eq!(by("XX").report.p, 0.0);
    assert_eq!(by("XX").verdict, "non-volume-law favored");
}

#[test]
fn report_files_round_trip_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let series = rows("XXZ", |l| 0.25 * l + 0.01 * (l * 1.7).sin());
    let entries = analyze_rows(&series, FitWeighting::Unweighted, 0.5).unwrap();
    let json = dir.path().join("report.json");
    write_json(&json, &entries).unwrap();
    let back = read_analysis(&json).unwrap();
    assert_eq!(back, entries);

    let with_svg = write_report(&dir.path().join("a"), &series, &back, true).unwrap();
    assert_eq!(with_svg.len(), 4);
    let data_only = write_report(&dir.path().join("b"), &series, &back, false).unwrap();
    assert_eq!(data_only.len(), 2);
    let text = fs::read_to_string(&data_only[0]).unwrap();
    assert_eq!(text.lines().next().unwrap(), PANEL_HEADER);
    assert_eq!(text.lines().count(), 6);
    assert!(write_report(&dir.path().join("c"), &series, &[], true).unwrap().is_empty());
    assert!(write_report(&dir.path().join("d"), &rows("XY", |l| l), &back, true).is_err());
}

#[test]
fn infinite_f_survives_json() {
    let entries = analyze_rows(&rows("XX", |l| 0.8 * l.ln() + 0.1), FitWeighting::Unweighted, 0.5).unwrap();
    let text = serde_json::to_string(&entries).unwrap();
    let back: Vec<wmon_core::io::AnalysisEntry> = serde_json::from_str(&text).unwrap();
    assert_eq!(back[0].report.f, f64::INFINITY);
}

#[test]
fn manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimConfig::from_toml(&MINIMAL.replace("sizes = [8, 10]", "sizes = [4, 6]")).unwrap();
    let base = cfg.run_config().unwrap();
    let sweep = sweep_sizes(&base, &cfg.sizes, &SweepOptions::default()).unwrap();
    let m = RunManifest::new(&cfg, &base, 1, &sweep);
    let path = dir.path().join("manifest.json");
    m.write(&path).unwrap();
    let back = RunManifest::load(&path).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.config.run_config().unwrap(), base);
}
