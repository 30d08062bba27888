use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pexp(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_pexp"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "pexp {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const WN_CONFIG: &str = r#"{
    "model": "white-noise",
    "prior": {"p": 2, "alpha": 1},
    "truth": {"kind": "besov", "beta": 1, "q": 2, "delta": 0.05},
    "n_grid": [128, 256, 512, 1024],
    "replicates": 3, "posterior_draws": 40, "master_seed": 1
}"#;

#[test]
fn rate_json_has_all_keys() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&pexp(&["rate", "--beta", "1"]))).unwrap();
    for key in [
        "poly_exponent",
        "log_exponent",
        "regime",
        "switch_point",
        "lambda_poly_exponent",
        "lambda_log_exponent",
        "minimax",
        "linear_minimax",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!((v["poly_exponent"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);

    let sup: serde_json::Value = serde_json::from_str(&stdout(&pexp(&[
        "rate", "--setting", "sup", "--alpha", "1", "--beta", "1", "--p", "1",
    ])))
    .unwrap();
    assert!((sup["poly_exponent"].as_f64().unwrap() - 7.0 / 24.0).abs() < 1e-15);
}

#[test]
fn rate_grid_emits_csv() {
    let text = stdout(&pexp(&["rate", "--beta", "1", "--grid", "0.5:1.5:0.5"]));
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("alpha,poly_exponent,log_exponent"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn sample_prior_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    pexp(&["sample-prior", "--p", "1.5", "--levels", "6", "--seed", "3", "--out", d]);
    let prior = fs::read_to_string(dir.path().join("prior.csv")).unwrap();
    assert!(prior.starts_with("scheme,k,l,ell,value"));
    let u = pexp_core::CoefVec::read_csv(prior.as_bytes()).unwrap();
    assert_eq!(u.len(), 127);
    let func = fs::read_to_string(dir.path().join("function.csv")).unwrap();
    assert_eq!(func.lines().next().unwrap(), "x,value");
    assert_eq!(func.lines().count(), 1026);

    let again = tempfile::tempdir().unwrap();
    pexp(&["sample-prior", "--p", "1.5", "--levels", "6", "--seed", "3", "--out", again.path().to_str().unwrap()]);
    assert_eq!(prior, fs::read_to_string(again.path().join("prior.csv")).unwrap());
}

#[test]
fn smallball_and_conc_tables() {
    let fit = stdout(&pexp(&[
        "smallball", "--p", "1", "--n", "64", "--mc-samples", "20000", "--eps-grid", "0.5:1.5:5", "--fit-slope",
    ]));
    assert_eq!(fit.lines().next().unwrap(), "slope,stderr,theory_slope");
    let table = stdout(&pexp(&["smallball", "--n", "64", "--mc-samples", "20000", "--eps-grid", "0.8,1.2"]));
    assert_eq!(table.lines().count(), 3);

    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.csv");
    pexp_core::CoefVec::linear((1..=64).map(|l| (l as f64).powf(-1.2)).collect())
        .write_csv(fs::File::create(&w).unwrap())
        .unwrap();
    let conc = stdout(&pexp(&[
        "conc",
        "--w-file",
        w.to_str().unwrap(),
        "--p",
        "1.5",
        "--mc-samples",
        "20000",
        "--eps-grid",
        "0.6,0.9,1.2",
    ]));
    assert_eq!(
        conc.lines().next().unwrap(),
        "eps,inf_term,inf_argmin_l2norm,neglog,neglog_lo,neglog_hi,phi"
    );
    assert_eq!(conc.lines().count(), 4);
}

fn run_wn(dir: &Path, threads: Option<&str>) -> String {
    let cfg = dir.join("wn.json");
    fs::write(&cfg, WN_CONFIG).unwrap();
    let out = dir.join("out");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pexp"));
    cmd.args(["wn-experiment", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    if let Some(t) = threads {
        cmd.env("PEXP_THREADS", t);
    }
    let status = cmd.output().unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    for f in ["results.csv", "summary.json", "plotdata.csv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    fs::read_to_string(out.join("results.csv")).unwrap()
}

#[test]
fn experiment_outputs_independent_of_threads() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run_wn(a.path(), Some("1")), run_wn(b.path(), Some("4")));
}

#[test]
fn experiment_rejects_wrong_model_and_missing_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("wn.json");
    fs::write(&cfg, WN_CONFIG).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_pexp"))
        .args(["de-experiment", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!status.status.success());
    let status = Command::new(env!("CARGO_BIN_EXE_pexp")).arg("wn-experiment").output().unwrap();
    assert!(!status.status.success());
}

#[test]
fn inequality_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ineq.json");
    fs::write(&cfg, r#"{"anderson_shifts": 3, "anderson_samples": 20000}"#).unwrap();
    let text = stdout(&pexp(&["check-inequalities", "--config", cfg.to_str().unwrap()]));
    assert!(text.starts_with("check,p,dim,case,margin,verdict"));
    assert!(!text.contains("FAIL"));
}
