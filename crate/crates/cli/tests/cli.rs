use std::path::Path;

use hypocert_cli::commands::{CertifyReport, SweepReport};
use hypocert_cli::{main_with_args, RunConfig, EXIT_MISSING_CONSTANT, EXIT_OK, EXIT_RESOURCE_CAP};
use serde_json::{json, Value};

fn quadratic(coef: f64) -> Value {
    json!({"family": "Quadratic", "params": {"coef": coef}, "dim": 1})
}

fn bump() -> Value {
    json!({"family": "GaussianBump", "params": {"amplitude": 0.1, "width": 1.0, "sign": "attractive"}, "dim": 1})
}

fn base(interaction: Value) -> Value {
    json!({
        "model": {"particles": 3, "confinement": quadratic(1.0), "interaction": interaction},
        "master_seed": 11,
        "simulate": {
            "integrator": {"scheme": "baoab", "dt": 0.02},
            "replicas": 64,
            "horizon": 2.0,
            "observables": ["mean_position", "kinetic_energy"],
            "stride": 5
        },
        "sweep": {
            "particles": [2, 3],
            "integrator": {"scheme": "baoab", "dt": 0.02},
            "replicas": 400,
            "horizon": 6.0,
            "observable": "mean_position",
            "equilibrium_value": 0.0,
            "stride": 5,
            "compare_certificate": true
        }
    })
}

fn write_config(dir: &Path, cfg: &Value) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

fn call(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("hypocert").chain(args.iter().copied()))
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn certify_bump_interaction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &base(bump()));
    let out = dir.path().join("out");
    assert_eq!(call(&["certify", "--config", &cfg, "--out", out.to_str().unwrap()]), EXIT_OK);
    let report: CertifyReport = serde_json::from_value(read_json(&out.join("certificate.json"))).unwrap();
    assert!(report.certificate.certified);
    assert!(report.certificate.lambda > 0.0);
    assert_eq!(report.meta.command, "certify");
    assert_eq!(report.meta.config_hash, report.meta.config.content_hash());
}

#[test]
fn unbounded_interaction_gradient_needs_log_sobolev_route() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &base(quadratic(0.5)));
    assert_eq!(call(&["certify", "--config", &cfg, "--mode", "thm3"]), EXIT_MISSING_CONSTANT);
    assert_eq!(call(&["certify", "--config", &cfg, "--mode", "thm4"]), EXIT_OK);
}

#[test]
fn split_reports_both_rates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &base(bump()));
    let out = dir.path().join("out");
    assert_eq!(call(&["certify", "--config", &cfg, "--mode", "split", "--out", out.to_str().unwrap()]), EXIT_OK);
    let v = read_json(&out.join("certificate.json"));
    let lam = v["certificate"]["lambda"].as_f64().unwrap();
    let single = v["certificate"]["lambda_single_m"].as_f64().unwrap();
    assert!(lam > 0.0 && single > 0.0);
}

#[test]
fn paper_literal_skips_refinement() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &base(bump()));
    let out = dir.path().join("out");
    assert_eq!(call(&["certify", "--config", &cfg, "--paper-literal", "--out", out.to_str().unwrap()]), EXIT_OK);
    let v = read_json(&out.join("certificate.json"));
    assert_eq!(v["config"]["certify"]["refine"], json!(false));
}

#[test]
fn empty_observable_list_is_rejected() {
    let mut cfg = base(bump());
    cfg["simulate"]["observables"] = json!([]);
    let err = RunConfig::from_json(&cfg.to_string()).unwrap_err();
    assert!(err.to_string().contains("observables"));
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &cfg);
    assert_ne!(call(&["simulate", "--config", &path]), EXIT_OK);
}

#[test]
fn unknown_fields_are_rejected() {
    let mut cfg = base(bump());
    cfg["simulate"]["dtt"] = json!(0.1);
    assert!(RunConfig::from_json(&cfg.to_string()).is_err());
}

#[test]
fn simulate_writes_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &base(bump()));
    let out = dir.path().join("out");
    assert_eq!(call(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]), EXIT_OK);
    let csv = std::fs::read_to_string(out.join("timeseries.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("time,observable_id,mean,variance,replicas"));
    // 2.0 / 0.02 = 100 steps, stride 5, plus the initial record; two observables.
    assert_eq!(lines.count(), 21 * 2);
    assert!(out.join("run.json").exists());
}

#[test]
fn json_format_embeds_series() {
    let mut cfg = base(bump());
    cfg["report_format"] = json!("json");
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &cfg);
    let out = dir.path().join("out");
    assert_eq!(call(&["simulate", "--config", &path, "--out", out.to_str().unwrap()]), EXIT_OK);
    assert!(!out.join("timeseries.csv").exists());
    assert!(read_json(&out.join("run.json"))["series"]["times"].is_array());
}

#[test]
fn sweep_has_one_row_per_particle_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &base(bump()));
    let out = dir.path().join("out");
    assert_eq!(call(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]), EXIT_OK);
    let report: SweepReport = serde_json::from_value(read_json(&out.join("sweep.json"))).unwrap();
    let ns: Vec<usize> = report.table.rows.iter().map(|r| r.particles).collect();
    assert_eq!(ns, vec![2, 3]);
    assert_eq!(report.certificate_below_fits, Some(true));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn oracle_defaults_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(call(&["oracle", "--out", out.to_str().unwrap()]), EXIT_OK);
    assert_eq!(read_json(&out.join("oracle.json"))["oracle_suite"]["pass"], json!(true));
}

#[test]
fn reruns_are_bit_identical_and_config_echo_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &base(bump()));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for o in [&a, &b] {
        assert_eq!(call(&["simulate", "--config", &cfg, "--out", o.to_str().unwrap()]), EXIT_OK);
    }
    let csv_a = std::fs::read(a.join("timeseries.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join("timeseries.csv")).unwrap());

    let mut echo = read_json(&a.join("run.json"))["config"].clone();
    let c = dir.path().join("c");
    echo["output_dir"] = json!(c);
    let echo_path = dir.path().join("echo.json");
    std::fs::write(&echo_path, echo.to_string()).unwrap();
    assert_eq!(call(&["simulate", "--config", echo_path.to_str().unwrap()]), EXIT_OK);
    assert_eq!(csv_a, std::fs::read(c.join("timeseries.csv")).unwrap());

    let other = dir.path().join("d");
    assert_eq!(call(&["simulate", "--config", &cfg, "--seed", "12", "--out", other.to_str().unwrap()]), EXIT_OK);
    assert_ne!(csv_a, std::fs::read(other.join("timeseries.csv")).unwrap());
}

#[test]
fn oversized_run_hits_resource_cap() {
    let mut cfg = base(bump());
    cfg["simulate"]["horizon"] = json!(1e9);
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &cfg);
    assert_eq!(call(&["simulate", "--config", &path]), EXIT_RESOURCE_CAP);
}

#[test]
fn missing_config_is_an_error() {
    assert_ne!(call(&["simulate"]), EXIT_OK);
}
