use frac_helmholtz_lab::output::read_snapshot;
use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn fhlab(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fhlab"));
    cmd.args(args).env_remove("FHLAB_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("fhlab runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(exp: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![exp, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    fhlab(&args, &[])
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

fn summary(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &str = r#"{"grid": {"n": 3, "points_per_axis": 16, "box_length": 16.0}}"#;

#[test]
fn minimal_resolvent_apply() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL);
    let out = tmp.path().join("out");
    let o = run("resolvent-apply", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(listing(&out), ["resolvent-apply.csv", "resolvent-apply.json"]);

    let s = summary(&out.join("resolvent-apply.json"));
    assert_eq!(s["status"], "pass");
    assert!(s["summary"]["inversion_residual"].as_f64().unwrap() <= 1e-10);
    let csv = fs::read_to_string(out.join("resolvent-apply.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,re_u,im_u,abs_u");
    assert_eq!(lines.len(), 16 + 2);
    assert_eq!(*lines.last().unwrap(), format!("# config_hash={}", s["config_hash"].as_str().unwrap()));
}

#[test]
fn negative_regime_needs_the_flag() {
    let tmp = TempDir::new().unwrap();
    let body = r#"{"grid": {"n": 3, "points_per_axis": 16, "box_length": 16.0},
                   "physics": {"s": 0.7}, "exponents": {"p": 1.5, "q": 1.8},
                   "sweep": {"lambdas": [1.0]}}"#;
    let cfg = write_config(tmp.path(), "c.json", body);
    let o = run("opnorm-sweep", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("s ≥ n/(n+1)"));

    let body = body.replace(r#""s": 0.7"#, r#""s": 0.7, "negative_regime": true"#);
    let cfg = write_config(tmp.path(), "d.json", &body);
    let out = tmp.path().join("out2");
    let o = run("opnorm-sweep", &cfg, &out, &[]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary(&out.join("opnorm-sweep.json"))["summary"]["admissible"], false);

    let body = body.replace(r#""lambdas": [1.0]"#, r#""lambdas": [1.0, 8.0]"#);
    let cfg = write_config(tmp.path(), "e.json", &body);
    let o = run("opnorm-sweep", &cfg, &tmp.path().join("out3"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sweep.lambdas"));
}

#[test]
fn oversized_data_reports_non_contraction() {
    let tmp = TempDir::new().unwrap();
    let body = r#"{"grid": {"n": 3, "points_per_axis": 16, "box_length": 16.0},
                   "physics": {"s": 0.8}, "solver": {"amplitude": 50.0}}"#;
    let cfg = write_config(tmp.path(), "c.json", body);
    let out = tmp.path().join("out");
    let o = run("solve-complex", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let s = summary(&out.join("solve-complex.json"));
    assert_eq!(s["status"], "non-contraction");
    assert!(s["diagnostic"].as_str().unwrap().contains("too large"));
}

#[test]
fn small_data_contracts() {
    let tmp = TempDir::new().unwrap();
    let body = r#"{"grid": {"n": 3, "points_per_axis": 16, "box_length": 16.0}, "physics": {"s": 0.8}}"#;
    let cfg = write_config(tmp.path(), "c.json", body);
    let out = tmp.path().join("out");
    let o = run("solve-complex", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out.join("solve-complex.json"));
    assert!(s["summary"]["trace"]["observed_ratio"].as_f64().unwrap() <= 0.9);
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cases = [
        (r#"{"grid": {"nn": 3}}"#, "nn"),
        (r#"{"grid": {"n": 3}, "extra": 1}"#, "extra"),
        (r#"{"grid": {"points_per_axis": 24}}"#, "power of two"),
        (r#"{"experiment": "tau"}"#, "experiment"),
        (r#"{"physics": {"epsilon": 1e-6}}"#, "grid floor"),
        (r#"{"output": {"csv": "../x.csv"}}"#, "plain file name"),
        (r#"{"grid": {"points_per_axis": 16"#, "EOF"),
    ];
    for (body, needle) in cases {
        let cfg = write_config(tmp.path(), "c.json", body);
        let o = run("resolvent-apply", &cfg, &out, &[]);
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(o.status.code(), Some(2), "{body}: {err}");
        assert!(err.contains(needle), "{body}: {err}");
    }
    let missing = tmp.path().join("missing.json");
    assert_eq!(run("tau", &missing, &out, &[]).status.code(), Some(2));
    let cfg = write_config(tmp.path(), "c.json", SMALL);
    assert_eq!(run("no-such-experiment", &cfg, &out, &[]).status.code(), Some(2));
    let o = fhlab(
        &["resolvent-apply", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
        &[("FHLAB_THREADS", "zero")],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn inadmissible_window_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let body = r#"{"grid": {"points_per_axis": 16, "box_length": 4.0}, "physics": {"s": 0.9}, "exponents": {"p": 3.0}}"#;
    let cfg = write_config(tmp.path(), "c.json", body);
    let o = run("mountain-pass", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2(n+1)/(n-1)"));
}

#[test]
fn identical_configs_give_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let body = r#"{"grid": {"n": 3, "points_per_axis": 16, "box_length": 16.0},
                   "physics": {"s": 0.8}, "output": {"snapshots": true}}"#;
    let cfg = write_config(tmp.path(), "c.json", body);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert_eq!(run("solve-complex", &cfg, &a, &["--seed", "3"]).status.code(), Some(0));
    assert_eq!(run("solve-complex", &cfg, &b, &["--seed", "3"]).status.code(), Some(0));
    let o = fhlab(
        &["solve-complex", "--config", cfg.to_str().unwrap(), "--out", c.to_str().unwrap(), "--seed", "3"],
        &[("FHLAB_THREADS", "1")],
    );
    assert_eq!(o.status.code(), Some(0));
    let names = listing(&a);
    assert_eq!(names, ["solve-complex-u.c64", "solve-complex-u.json", "solve-complex.csv", "solve-complex.json"]);
    for n in &names {
        let x = fs::read(a.join(n)).unwrap();
        assert_eq!(x, fs::read(b.join(n)).unwrap(), "{n}");
        assert_eq!(x, fs::read(c.join(n)).unwrap(), "{n}");
    }

    let d = tmp.path().join("d");
    assert_eq!(run("solve-complex", &cfg, &d, &["--seed", "4"]).status.code(), Some(0));
    assert_ne!(summary(&a.join("solve-complex.json"))["config_hash"], summary(&d.join("solve-complex.json"))["config_hash"]);
    assert_ne!(fs::read(a.join("solve-complex-u.c64")).unwrap(), fs::read(d.join("solve-complex-u.c64")).unwrap());
}

#[test]
fn snapshot_sidecar_describes_the_array() {
    let tmp = TempDir::new().unwrap();
    let body = r#"{"grid": {"n": 3, "points_per_axis": 16, "box_length": 16.0}, "output": {"snapshots": true}}"#;
    let cfg = write_config(tmp.path(), "c.json", body);
    let out = tmp.path().join("out");
    assert_eq!(run("herglotz", &cfg, &out, &[]).status.code(), Some(0));
    let side = summary(&out.join("herglotz-phi.json"));
    assert_eq!(side["dtype"], "complex64");
    assert_eq!(side["byte_order"], "little");
    assert_eq!(side["points_per_axis"], 16);
    let vals = read_snapshot(&out.join("herglotz-phi.c64")).unwrap();
    assert_eq!(vals.len(), 16 * 16 * 16);
    let sup = vals.iter().map(|&(a, b)| (a as f64).hypot(b as f64)).fold(0.0, f64::max);
    // default amplitude is the sup norm of the data
    assert!((sup - 0.1).abs() < 1e-6, "sup {sup}");
    let s = summary(&out.join("herglotz.json"));
    assert_eq!(s["config_hash"], side["config_hash"]);
}

#[test]
fn admissibility_tables() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"physics": {"s": 1.0}, "exponents": {"p": 1.3333333333333333, "q": 4.0}}"#);
    let out = tmp.path().join("out");
    assert_eq!(run("admissible", &cfg, &out, &[]).status.code(), Some(0));
    let csv = fs::read_to_string(out.join("admissible.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,s,p,q,t,case,q_lo,q_hi,admissible");
    assert!(lines[1].ends_with(",true"), "{}", lines[1]);

    let cfg = write_config(tmp.path(), "d.json", r#"{"physics": {"s": 0.8}, "exponents": {"t": 3.0}}"#);
    assert_eq!(run("q-window", &cfg, &out, &[]).status.code(), Some(0));
    let csv = fs::read_to_string(out.join("q-window.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let cfg = write_config(tmp.path(), "e.json", r#"{"sweep": {"max_den": 2}}"#);
    assert_eq!(run("tau", &cfg, &out, &[]).status.code(), Some(0));
    let csv = fs::read_to_string(out.join("tau.csv")).unwrap();
    // alphas 5/2, 3, 7/2, ..., 17/2 on the half-integer lattice above 2
    assert!(csv.lines().nth(1).unwrap().starts_with("2.5,0.5,0.5"), "{csv}");
    assert!(csv.contains("\n3,2,1\n"), "{csv}");
}

#[test]
fn every_experiment_writes_a_table_and_summary() {
    let tmp = TempDir::new().unwrap();
    let runs: [(&str, &str); 15] = [
        ("resolvent-apply", r#"{"grid": {"points_per_axis": 16}, "physics": {"eps_sequence": [3.0, 2.4, 1.8]}}"#),
        ("kernel-table", r#"{"grid": {"points_per_axis": 16}}"#),
        ("split-kernel", r#"{"grid": {"points_per_axis": 16}}"#),
        ("admissible", r#"{"physics": {"s": 0.9}, "sweep": {"max_den": 4}}"#),
        ("q-window", r#"{"physics": {"s": 0.9}, "sweep": {"max_den": 3}}"#),
        ("tau", r#"{"sweep": {"max_den": 3}}"#),
        ("opnorm-sweep", r#"{"grid": {"points_per_axis": 16}, "exponents": {"p": 1.3333333333333333, "q": 4.0}, "sweep": {"lambdas": [1.0, 2.0]}}"#),
        ("local-l2", r#"{"grid": {"points_per_axis": 16}, "exponents": {"p": 1.5}, "sweep": {"lambdas": [1.0, 2.0]}}"#),
        ("weighted-check", r#"{"grid": {"points_per_axis": 16}, "exponents": {"alpha": 3.0}}"#),
        ("radiation", r#"{"grid": {"points_per_axis": 16}}"#),
        ("herglotz", r#"{"grid": {"points_per_axis": 16}}"#),
        ("solve-complex", r#"{"grid": {"points_per_axis": 16}, "physics": {"s": 0.8}}"#),
        ("solve-lipschitz", r#"{"grid": {"points_per_axis": 16}, "solver": {"kappa": 0.4}}"#),
        ("branch", r#"{"grid": {"points_per_axis": 16}, "physics": {"s": 0.9}, "solver": {"mu_steps": 3}}"#),
        ("mountain-pass", r#"{"grid": {"points_per_axis": 16, "box_length": 4.0}, "physics": {"s": 0.9}}"#),
    ];
    for (exp, body) in runs {
        let cfg = write_config(tmp.path(), &format!("{exp}.json"), body);
        let out = tmp.path().join(exp);
        let o = run(exp, &cfg, &out, &[]);
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(matches!(o.status.code(), Some(0 | 1)), "{exp}: {err}");
        let s = summary(&out.join(format!("{exp}.json")));
        assert_eq!(s["experiment"], exp);
        assert_eq!(s["status"] == "pass", o.status.code() == Some(0), "{exp}: {s}");
        let csv = fs::read_to_string(out.join(format!("{exp}.csv"))).unwrap();
        assert!(csv.lines().count() >= 3, "{exp}: {csv}");
        assert_eq!(csv.lines().last().unwrap(), format!("# config_hash={}", s["config_hash"].as_str().unwrap()));
    }
}
