use std::fs;

use mflevy::bench::{parse_config, persist, execute, run_experiment, ExperimentSpec};
use mflevy::models::ModelId;

fn small(text: &str) -> ExperimentSpec {
    parse_config(text).unwrap_or_else(|e| panic!("{e}"))
}

#[test]
fn minimal_config_gets_documented_defaults() {
    let spec = small("model = \"brownian\"\n");
    assert_eq!(spec.scheme.particles, 10_000);
    assert_eq!(spec.scheme.tau, 1.0 / 64.0);
    assert_eq!(spec.diagnostics.z, 4.0);
    assert_eq!(spec.diagnostics.floor, 1e-3);
    assert!(!spec.diagnostics.select.is_empty());
}

#[test]
fn negative_step_is_rejected_by_key_path() {
    let e = parse_config("model = \"brownian\"\n[scheme]\ntau = -0.1\n").unwrap_err();
    assert!(e.issues.iter().any(|i| i.path == "scheme.tau"), "{e}");
    assert!(e.issues.iter().all(|i| !i.remedy.is_empty()));
}

#[test]
fn star_model_without_radial_table_names_it() {
    let e = parse_config("model = \"star_stable_trunc\"\n").unwrap_err();
    let issue = e.issues.iter().find(|i| i.path == "params.radial").expect("named");
    assert!(issue.message.contains("[params.radial]"));
    let e = parse_config("model = \"star_stable_trunc\"\n[params]\nbeta = 0.2\n").unwrap_err();
    assert!(e.issues.iter().any(|i| i.path == "params.radial"), "{e}");
}

#[test]
fn parse_errors_carry_a_position() {
    let e = parse_config("model = \"brownian\"\n[scheme\ntau = 1\n").unwrap_err();
    assert_eq!(e.issues.len(), 1);
    assert!(e.issues[0].message.contains("line 2"), "{}", e.issues[0].message);
}

#[test]
fn unknown_model_and_keys_are_listed_together() {
    let e = parse_config("model = \"heston\"\ncolour = 1\n").unwrap_err();
    assert!(e.issues.iter().any(|i| i.path == "model" && i.remedy.contains("brownian")));
    assert!(e.issues.iter().any(|i| i.path == "colour"));
}

#[test]
fn bad_model_parameter_points_at_its_key() {
    let e = parse_config("model = \"brownian\"\n[params]\nsigma0 = -1.0\n").unwrap_err();
    assert!(e.issues.iter().any(|i| i.path == "params.sigma0"), "{e}");
    let e = parse_config("model = \"brownian\"\n[params]\nsigma = 1.0\n").unwrap_err();
    assert!(e.issues.iter().any(|i| i.path == "params"), "{e}");
}

#[test]
fn diagnostics_must_fit_the_model() {
    let e = parse_config("model = \"brownian\"\n[diagnostics]\nselect = [\"kinetic\"]\n").unwrap_err();
    assert!(e.issues.iter().any(|i| i.path == "diagnostics.select"), "{e}");
}

#[test]
fn echo_parses_back_to_the_same_spec() {
    for id in ModelId::ALL {
        let spec = ExperimentSpec::default_for(id);
        assert_eq!(small(&spec.to_toml()), spec, "{}", id.name());
    }
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let spec = small(&fs::read_to_string(&path).unwrap());
        assert_eq!(small(&spec.to_toml()), spec, "{}", path.display());
    }
}

const CHEAP: &str = r#"
model = "brownian"
[scheme]
particles = 400
seed = 11
[diagnostics]
select = ["rate", "weak", "holder"]
"#;

#[test]
fn brownian_run_writes_rate_table_with_slope() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("b");
    let out = run_experiment(&small(CHEAP), &dir).unwrap();
    for f in ["config.toml", "reports.json", "reports.csv", "rates.csv", "variance.csv", "paths.bin", "paths.csv"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let rates = fs::read_to_string(dir.join("rates.csv")).unwrap();
    let header: Vec<&str> = rates.lines().next().unwrap().split(',').collect();
    assert!(header.contains(&"slope"));
    assert!(rates.lines().skip(1).any(|l| l.starts_with("subdivision,")));
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("reports.json")).unwrap()).unwrap();
    assert_eq!(rep["reports"].as_array().unwrap().len(), out.results.reports.len());
    // the snapshot holds the full ensemble
    let ens = mflevy::PathEnsemble::read_binary(fs::File::open(dir.join("paths.bin")).unwrap()).unwrap();
    assert_eq!(ens, {
        let mut e = out.results.ensemble.clone();
        e.cache = None;
        e
    });
}

#[test]
fn repeated_seed_gives_identical_report_files() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = small(CHEAP);
    run_experiment(&spec, &tmp.path().join("a")).unwrap();
    run_experiment(&spec, &tmp.path().join("b")).unwrap();
    for f in ["reports.json", "reports.csv", "rates.csv", "paths.bin", "paths.csv", "config.toml"] {
        assert_eq!(
            fs::read(tmp.path().join("a").join(f)).unwrap(),
            fs::read(tmp.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    // the echo alone reproduces the run
    let echo = small(&fs::read_to_string(tmp.path().join("a/config.toml")).unwrap());
    run_experiment(&echo, &tmp.path().join("c")).unwrap();
    assert_eq!(
        fs::read(tmp.path().join("a/reports.json")).unwrap(),
        fs::read(tmp.path().join("c/reports.json")).unwrap()
    );
}

#[test]
fn kinetic_variance_table_matches_the_oracle() {
    let spec = small(
        r#"
model = "mean_field_kinetic"
[scheme]
particles = 4000
seed = 3
[diagnostics]
select = ["kinetic"]
"#,
    );
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("k");
    let out = run_experiment(&spec, &dir).unwrap();
    assert_eq!(out.results.variance.len(), 8);
    let table = fs::read_to_string(dir.join("variance.csv")).unwrap();
    assert_eq!(table.lines().count(), 9);
    for v in &out.results.variance {
        assert!((v.observed - v.predicted).abs() <= 4.0 * v.stderr, "{v:?}");
    }
}

#[test]
fn failed_write_leaves_nothing_behind() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = small(CHEAP);
    let res = execute(&spec).unwrap();
    // parent of the target is a regular file
    let blocker = tmp.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    assert!(persist(&spec, &res, &blocker.join("out")).is_err());
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 1);
    // an existing output is replaced as a whole
    let dir = tmp.path().join("out");
    fs::create_dir(&dir).unwrap();
    fs::write(dir.join("stale.txt"), b"old").unwrap();
    persist(&spec, &res, &dir).unwrap();
    assert!(!dir.join("stale.txt").exists());
    assert!(dir.join("reports.json").is_file());
}
