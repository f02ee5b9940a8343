use super::*;
use std::collections::BTreeMap;

const TWO_LEVEL: &str = r#"
experiment = "project"

[model]
kind = "two-level"
gap = 1.0
mixing = 0.4
level = 0.3
wavenumber = 0.5

[pipeline]
h_list = [0.1, 0.05, 0.025]
"#;

fn with_model(model: &str, experiment: &str) -> String {
    format!("experiment = \"{experiment}\"\n\n[model]\n{model}\n\n[pipeline]\nh_list = [0.1, 0.05, 0.025]\n")
}

#[test]
fn defaults_fill_the_schema() {
    let c = ExperimentConfig::from_toml(TWO_LEVEL).unwrap();
    assert_eq!(c.experiment, ExperimentKind::Project);
    assert_eq!(c.pipeline.order, 2);
    assert_eq!(c.pipeline.group, 1);
    assert_eq!(c.grid.x_points, 32);
    assert_eq!(c.model.d(), 1);
    assert_eq!(c.h_values(), vec![0.1, 0.05, 0.025]);
    assert_eq!(c.x0(), vec![0.0]);
}

#[test]
fn resolved_config_round_trips() {
    let c = ExperimentConfig::from_toml(TWO_LEVEL).unwrap();
    let again = ExperimentConfig::from_toml(&c.resolved()).unwrap();
    assert_eq!(c, again);
    assert_eq!(c.hash(), again.hash());
    assert_eq!(c.hash().len(), 64);
}

#[test]
fn unknown_keys_are_rejected() {
    for bad in [
        format!("{TWO_LEVEL}\nfoo = 1\n"),
        TWO_LEVEL.replace("gap = 1.0", "gap = 1.0\nspin = 2"),
        TWO_LEVEL.replace("[pipeline]", "[pipeline]\nordr = 3"),
        format!("{TWO_LEVEL}\n[grid]\nx_pts = 4\n"),
        format!("{TWO_LEVEL}\n[[assertions]]\nmetric = \"gap_min\"\nmin = 0.1\nmaximum = 2\n"),
        TWO_LEVEL.replace("two-level", "three-level"),
    ] {
        let e = ExperimentConfig::from_toml(&bad).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{bad}: {e}");
    }
}

#[test]
fn inconsistent_configs_are_config_errors() {
    let cases = [
        TWO_LEVEL.replace("h_list = [0.1, 0.05, 0.025]", "h = 1.5"),
        TWO_LEVEL.replace("[pipeline]", "[pipeline]\nx0 = [0.0, 1.0]"),
        TWO_LEVEL.replace("[pipeline]", "[pipeline]\nframe = \"ungauged\""),
        TWO_LEVEL.replace("\"project\"", "\"scan-h\"").replace("0.025", "0.03"),
        TWO_LEVEL.replace("\"project\"", "\"straight-line\""),
        format!("{TWO_LEVEL}\n[[assertions]]\nmetric = \"gap_min\"\n"),
    ];
    for c in cases {
        assert_eq!(ExperimentConfig::from_toml(&c).unwrap_err().exit_code(), 2, "{c}");
    }
    let grid = format!("{TWO_LEVEL}\n[grid]\nxi_points = 12\n");
    let c = ExperimentConfig::from_toml(&grid).unwrap();
    assert_eq!(run(&c).unwrap_err().exit_code(), 2);
}

#[test]
fn scan_needs_three_geometric_values() {
    let two = TWO_LEVEL.replace("\"project\"", "\"scan-h\"").replace("[0.1, 0.05, 0.025]", "[0.1, 0.05]");
    assert!(ExperimentConfig::from_toml(&two).is_err());
    let ok = TWO_LEVEL.replace("\"project\"", "\"scan-h\"");
    assert!(ExperimentConfig::from_toml(&ok).is_ok());
}

#[test]
fn assertions_need_the_metric_in_range() {
    let mut m = BTreeMap::new();
    m.insert("a".to_string(), 1.0);
    let asserts = vec![
        Assertion { metric: "a".into(), min: Some(0.5), max: None },
        Assertion { metric: "a".into(), min: None, max: Some(0.5) },
        Assertion { metric: "b".into(), min: Some(0.0), max: None },
        Assertion { metric: "a".into(), min: Some(1.0), max: Some(1.0) },
    ];
    let r = check_assertions(&asserts, &m);
    assert_eq!(r.iter().map(|a| a.passed).collect::<Vec<_>>(), vec![true, false, false, true]);
    assert!(r[2].value.is_none());
    assert!(r[1].describe().starts_with("FAIL a"));
}

#[test]
fn points_on_a_line_have_no_deviation() {
    let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0 + 0.3 * i as f64, -2.0 + 0.1 * i as f64]).collect();
    let (dev, len) = line_deviation(&pts);
    assert!(dev < 1e-12);
    assert!((len - 19.0 * (0.09f64 + 0.01).sqrt()).abs() < 1e-12);
}

#[test]
fn a_full_circle_deviates_by_its_radius() {
    let n = 400;
    let pts: Vec<Vec<f64>> = (0..=n)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            vec![0.5 * t.cos(), 0.5 * t.sin()]
        })
        .collect();
    let (dev, len) = line_deviation(&pts);
    assert!((dev - 0.5).abs() < 1e-3);
    assert!((len - std::f64::consts::PI).abs() < 1e-4);
}

#[test]
fn constant_fiber_defects_sit_at_the_floor() {
    let text = with_model("kind = \"constant-fiber\"\nenergies = [0.0, 2.0, 3.5]\nangle = 0.3", "project");
    let rep = run(&ExperimentConfig::from_toml(&text).unwrap()).unwrap();
    assert!(rep.metric("idempotency_max").unwrap() <= 1e-9);
    assert!(rep.metric("commutator_max").unwrap() <= 1e-9);
    assert!(rep.metric("idempotency_slope").is_none());
    let fits = rep.results.tables.iter().find(|t| t.name == "fits").unwrap();
    assert!(fits.rows.iter().all(|r| r[1] == io_text("floor")));
    assert_eq!(rep.exit_code(), 0);
}

fn io_text(s: &str) -> crate::io::Cell {
    crate::io::Cell::Text(s.into())
}

#[test]
fn crossing_levels_are_a_precondition_failure() {
    let text = with_model("kind = \"crossing\"\ngap = 1.0", "project");
    let c = ExperimentConfig::from_toml(&text).unwrap();
    let e = run(&c).unwrap_err();
    assert_eq!(e.exit_code(), 3);
    assert!(e.to_string().contains("gap"), "{e}");
    assert_eq!(validate(&c).unwrap_err().exit_code(), 3);
}

#[test]
fn failed_assertions_set_exit_one() {
    let text = format!("{TWO_LEVEL}\n[[assertions]]\nmetric = \"gap_min\"\nmin = 5.0\n");
    let rep = run(&ExperimentConfig::from_toml(&text).unwrap()).unwrap();
    assert!(!rep.passed());
    assert_eq!(rep.exit_code(), 1);
}

#[test]
fn reports_list_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let rep = run(&ExperimentConfig::from_toml(TWO_LEVEL).unwrap()).unwrap();
    let index = rep.write(dir.path()).unwrap();
    let read = crate::io::ArtifactIndex::read(dir.path()).unwrap();
    assert_eq!(index, read);
    for a in &read.entries {
        assert!(dir.path().join(&a.path).exists(), "{}", a.path);
    }
    let report: toml::Table = std::fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap().parse().unwrap();
    assert_eq!(report["meta"]["version"].as_str(), Some(VERSION));
    assert_eq!(report["meta"]["config_hash"].as_str(), Some(rep.config_hash.as_str()));
    let embedded = toml::to_string(&report["config"]).unwrap();
    assert_eq!(ExperimentConfig::from_toml(&embedded).unwrap(), rep.config);
}

#[test]
fn grid_runs_track_the_population() {
    let text = r#"
experiment = "propagate-grid"

[model]
kind = "two-level"
gap = 1.0
mixing = 0.4
level = 0.3
wavenumber = 0.5

[grid]
tensor_x_points = 256

[pipeline]
h = 0.1
t_final = 0.5
grid_dt = 0.05
stride = 2
xi0 = [0.5]
write_fields = true
"#;
    let rep = run(&ExperimentConfig::from_toml(text).unwrap()).unwrap();
    let obs = rep.results.tables.iter().find(|t| t.name == "observables").unwrap();
    assert_eq!(obs.len(), 6);
    assert!(rep.metric("norm_drift").unwrap() < 1e-10);
    let leak = rep.metric("leakage_final").unwrap();
    assert!(leak > 0.0 && leak < 1e-2, "{leak}");
    assert_eq!(rep.results.fields.len(), 2);
}
