mod common;

use mompca::experiments::{self, ExperimentConfig, ResultTable};

fn eigengap(seed: u64) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        r#"
seed = {seed}
replicates = 3
[experiment]
kind = "eigengap-sweep"
p = 6
r = 2
n = 400
k = 8
eigengaps = [0.5, 2.0]
methods = ["full-pca", "random-subset", "projector-average", "mom-fixed:1", "mom-rpca"]
"#
    ))
    .unwrap()
}

fn badnode(seed: u64) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        r#"
seed = {seed}
replicates = 3
[experiment]
kind = "badnode-fraction"
p = 6
r = 2
n = 400
k = 8
eigengap = 2.0
contamination = "mean-shift"
severity = 5.0
fractions = [0.0, 0.25]
methods = ["random-subset", "projector-average", "mom-fixed:1", "mom-rpca"]
"#
    ))
    .unwrap()
}

#[test]
fn row_count_is_grid_times_replicates_times_methods() {
    let t = experiments::run(&eigengap(1)).unwrap();
    assert_eq!(t.rows.len(), 2 * 3 * 5);
    assert!(t.rows.iter().all(|r| r.mean_error.unwrap().is_finite() && r.subspace_error.unwrap().is_finite()));
    let rpca: Vec<_> = t.rows.iter().filter(|r| r.method == "mom-rpca").collect();
    assert!(rpca.iter().all(|r| r.alpha.is_some() && r.s_mu.is_some() && r.tau_sub.is_some()));
}

#[test]
fn runs_are_deterministic() {
    let a = experiments::run(&eigengap(2)).unwrap();
    let b = experiments::run(&eigengap(2)).unwrap();
    assert_eq!(a.rows, b.rows);
    let mut x = Vec::new();
    let mut y = Vec::new();
    a.write_csv(&mut x).unwrap();
    b.write_csv(&mut y).unwrap();
    assert_eq!(x, y);
    assert_ne!(a.rows, experiments::run(&eigengap(3)).unwrap().rows);
}

#[test]
fn clean_badnode_point_reproduces_eigengap_sweep() {
    let clean = experiments::run(&eigengap(7)).unwrap();
    let bad = experiments::run(&badnode(7)).unwrap();
    for row in bad.rows.iter().filter(|r| r.sweep_value == 0.0) {
        let twin = clean
            .rows
            .iter()
            .find(|c| c.sweep_value == 2.0 && c.replicate == row.replicate && c.method == row.method)
            .unwrap();
        assert_eq!(twin.mean_error, row.mean_error, "{}", row.method);
        assert_eq!(twin.subspace_error, row.subspace_error);
        assert_eq!(row.bad_nodes, Some(0));
    }
    assert!(bad.rows.iter().filter(|r| r.sweep_value == 0.25).all(|r| r.bad_nodes == Some(2)));
}

#[test]
fn csv_roundtrip_preserves_rows() {
    let t = experiments::run(&badnode(8)).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    let back = ResultTable::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, t.rows);
    let summary = t.summary();
    assert!(summary.iter().any(|s| s.metric == "mean_error" && s.n == 3));
}

#[test]
fn invalid_configs_are_rejected() {
    let bad_fraction = r#"
seed = 1
replicates = 1
[experiment]
kind = "badnode-fraction"
p = 6
r = 2
n = 400
k = 8
eigengap = 2.0
contamination = "mean-shift"
severity = 5.0
fractions = [0.6]
methods = ["mom-rpca"]
"#;
    let cfg = ExperimentConfig::from_toml(bad_fraction).unwrap();
    assert!(experiments::run(&cfg).is_err());
    assert!(ExperimentConfig::from_toml("seed = 1\nreplicates = 1\n[experiment]\nkind = \"nope\"\n").is_err());
    assert!(ExperimentConfig::from_toml(&bad_fraction.replace("methods = [\"mom-rpca\"]", "methods = [\"median-of-what\"]")).is_err());
}

#[test]
fn shipped_configs_parse_and_validate() {
    for name in [
        "eigengap_desk.toml",
        "eigengap_full.toml",
        "badnode_fraction_desk.toml",
        "badnode_severity_desk.toml",
        "oracle_desk.toml",
        "regime_desk.toml",
    ] {
        common::load_config(name).validate().unwrap();
    }
}
