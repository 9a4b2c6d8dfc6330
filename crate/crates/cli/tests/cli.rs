use std::path::Path;
use std::process::{Command, Output};

fn softqec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_softqec")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL_PHENO: &str = r#"
name = "small"
distances = [3, 5, 7]
rounds = "d"
decoders = ["soft-uf"]
trials = 400
seed = 5

[noise]
family = "pheno"
p = [0.02, 0.035, 0.05, 0.07]
"#;

#[test]
fn lists_presets() {
    let o = softqec(&["presets"]);
    assert!(o.status.success());
    for name in ["pheno-soft", "pheno-hard", "circuit-10x", "circuit-1x", "tradeoff", "convergence"] {
        assert!(stdout(&o).contains(name));
    }
}

#[test]
fn invalid_probability_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &SMALL_PHENO.replace("0.07]", "0.6]"));
    let o = softqec(&["curve", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("configuration error"));
    assert_eq!(softqec(&["curve", "--preset", "no-such-preset"]).status.code(), Some(1));
    assert_eq!(softqec(&["curve", "/nonexistent/config.toml"]).status.code(), Some(1));
}

#[test]
fn threshold_writes_csv_json_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL_PHENO);
    let out = dir.path().join("t.csv");
    let o = softqec(&["threshold", &cfg, "-q", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("d,T,param_name,param,decoder,basis,n,k,mean,ci_lo,ci_hi,p_bar,seconds_per_trial\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 4 * 3);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["name"], "small");
    let p = json["fits"]["soft-uf"]["p_star"].as_f64().unwrap();
    assert!(p > 0.02 && p < 0.07, "{p}");
    assert!(stdout(&o).contains("soft-uf: p* ="));
}

#[test]
fn threshold_needs_three_distances() {
    let o = softqec(&["threshold", "--preset", "pheno-soft", "--distances", "3,5", "--trials", "10"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL_PHENO);
    let a = softqec(&["curve", &cfg, "-q", "--trials", "300", "--workers", "1"]);
    let b = softqec(&["curve", &cfg, "-q", "--trials", "300", "--workers", "4"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = softqec(&["curve", &cfg, "-q", "--trials", "300", "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn tradeoff_single_measurement_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "t.toml",
        r#"
name = "one"
distances = [3]
rounds = 3
decoders = ["soft-uf"]
trials = 50

[noise]
family = "parametric-circuit"
tau_g = 10e-9
tau_d = 30e-6
tau_a = 15e-6
tau_f = 100e-9
tau_m = [300e-9]
"#,
    );
    let o = softqec(&["tradeoff", &cfg, "-q"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert!(csv.lines().next().unwrap().ends_with(",avg_soft_flip"));
    assert_eq!(csv.lines().filter(|l| l.contains(",X,")).count(), 1);
}

#[test]
fn tradeoff_marks_flip_optimum() {
    let o = softqec(&["tradeoff", "--preset", "tradeoff", "-q", "--trials", "20", "--distances", "3"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|&h| h == "tau_m_flip_opt").unwrap();
    let opt: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert!(opt.iter().all(|&t| t == opt[0] && t > 7e-7 && t < 9e-7));
    // the optimum is one of the scanned points
    assert!(csv.lines().skip(1).any(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap() == opt[0]));
}

#[test]
fn tradeoff_rejects_other_noise() {
    assert_eq!(softqec(&["tradeoff", "--preset", "pheno-soft", "--trials", "5"]).status.code(), Some(1));
}

#[test]
fn validate_stock_and_corrupted_models() {
    let o = softqec(&["validate", "--preset", "pheno-soft", "--distances", "3", "--samples", "200"]);
    assert!(o.status.success());
    let report = stdout(&o);
    assert!(!report.contains("FAIL"));
    assert!(report.contains("PASS X-error graph C1"));
    assert!(report.contains("PASS syndrome equals boundary"));
    assert!(report.contains("PASS log posterior difference"));

    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let e = softqec(&["export-graph", "--preset", "pheno-soft", "--distances", "3", "--rounds", "2", "-o", model.to_str().unwrap()]);
    assert!(e.status.success());
    let ok = softqec(&["validate", "--model", model.to_str().unwrap()]);
    assert!(ok.status.success());
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    v["x_error_graph"]["edges"][0]["vertices"] = serde_json::json!([0, 1, 2]);
    let bad = write(dir.path(), "bad.json", &v.to_string());
    let o = softqec(&["validate", "--model", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL X-error graph C1"));
}

#[test]
fn validate_amplitude_damping_readout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "ad.toml",
        &SMALL_PHENO.replace("p = [", "readout = { model = \"amplitude-damping\", tau_m = 1.0, tau_a = 10.0, tau_f = 0.25 }\np = ["),
    );
    let o = softqec(&["validate", &cfg, "--samples", "100", "--ks-samples", "200000"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let report = stdout(&o);
    assert!(report.contains("density 1 normalised"));
    assert!(report.contains("against simulated readout: KS distance"));
}

#[test]
fn export_decoding_graph() {
    let o = softqec(&["export-graph", "--preset", "circuit-10x", "--distances", "3", "--decoding"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["distance"], 3);
    assert!(v["x_error_graph"]["edges"].as_array().unwrap().len() > 10);
    let p = softqec(&["export-graph", "--preset", "circuit-10x", "--distances", "3", "--param", "0.123"]);
    assert_eq!(p.status.code(), Some(1));
}
