use std::path::{Path, PathBuf};
use std::process::Command;

use l1cert_cli::io::{read_matrix, read_vector, write_matrix, write_vector};
use l1cert_cli::{run, run_with_seed_env, Output};
use l1cert::DenseMatrix;
use serde_json::Value;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn exec(args: &[&str]) -> (Output, Value) {
    let mut argv = vec!["l1cert"];
    argv.extend_from_slice(args);
    let out = run_with_seed_env(argv, None);
    let v: Value = serde_json::from_str(&out.stdout).unwrap_or(Value::Null);
    (out, v)
}

struct Example {
    _dir: tempfile::TempDir,
    a: String,
    b: String,
    x_lasso: String,
    x_bp: String,
    x_bad: String,
    root: PathBuf,
}

fn example() -> Example {
    let dir = tempfile::tempdir().unwrap();
    let s = |p: PathBuf| p.to_str().unwrap().to_string();
    Example {
        a: s(write(dir.path(), "A.csv", "1,0,2\n0,2,-2\n")),
        b: s(write(dir.path(), "b.csv", "1\n1\n")),
        x_lasso: s(write(dir.path(), "x.csv", "0\n0.25\n0\n")),
        x_bp: s(write(dir.path(), "xbp.csv", "1\n0.5\n0\n")),
        x_bad: s(write(dir.path(), "xbad.csv", "0.1\n0.2\n0\n")),
        root: dir.path().to_path_buf(),
        _dir: dir,
    }
}

/// `command: key, key.sub, ...` with the dotted paths of every object key.
fn field_line(name: &str, v: &Value) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<String>) {
        if let Value::Object(map) = v {
            for (k, child) in map {
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                out.push(path.clone());
                walk(&path, child, out);
            }
        }
    }
    let mut keys = Vec::new();
    walk("", v, &mut keys);
    format!("{name}: {}", keys.join(", "))
}

#[test]
fn report_field_sets_match_golden_file() {
    let p = example();
    let gen_dir = p.root.join("gen");
    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("solve-lasso", vec!["solve", "--model", "lasso", "--A", &p.a, "--b", &p.b, "--lambda", "1"]),
        ("solve-bp", vec!["solve", "--model", "bp", "--A", &p.a, "--b", &p.b]),
        (
            "check-lasso-oracle",
            vec!["check", "--model", "lasso", "--A", &p.a, "--b", &p.b, "--param", "1", "--x", &p.x_lasso, "--with-oracle"],
        ),
        ("check-bp", vec!["check", "--model", "bp", "--A", &p.a, "--b", &p.b, "--x", &p.x_bp]),
        ("certify", vec!["certify", "--A", &p.a, "--support", "1", "--signs", "+1"]),
        ("oracle", vec!["oracle", "--model", "bp", "--A", &p.a, "--b", &p.b, "--x", &p.x_bp]),
        (
            "generate",
            vec!["generate", "--m", "4", "--n", "8", "--k", "2", "--delta", "0.1", "--seed", "7", "--out", gen_dir.to_str().unwrap()],
        ),
        ("error", vec!["solve", "--model", "bp", "--A", &p.a, "--b", &p.x_lasso]),
    ];
    let actual: Vec<String> = cases
        .iter()
        .map(|(name, args)| field_line(name, &exec(args).1))
        .collect();
    let golden = include_str!("golden/report_fields.txt");
    let expected: Vec<&str> = golden.lines().filter(|l| !l.is_empty()).collect();
    assert_eq!(actual, expected);
}

#[test]
fn example_lasso_solve_and_check() {
    let p = example();
    let (out, v) = exec(&["solve", "--model", "lasso", "--A", &p.a, "--b", &p.b, "--lambda", "1"]);
    assert_eq!(out.exit_code, 0);
    let x: Vec<f64> = v["x"].as_array().unwrap().iter().map(|t| t.as_f64().unwrap()).collect();
    for (xi, want) in x.iter().zip([0.0, 0.25, 0.0]) {
        assert!((xi - want).abs() <= 1e-6);
    }
    let (out, v) = exec(&["check", "--model", "lasso", "--A", &p.a, "--b", &p.b, "--lambda", "1", "--x", &p.x_lasso]);
    assert_eq!(out.exit_code, 0);
    assert_eq!(v["status"], "Unique");
    assert!((v["margin"].as_f64().unwrap() - 2.0 / 3.0).abs() <= 1e-9);
    assert_eq!(v["equicorrelation"]["indices"], serde_json::json!([0, 1, 2]));
    assert_eq!(v["equicorrelation"]["rank"], 2);
}

#[test]
fn check_verdicts() {
    let p = example();
    let (out, v) = exec(&["check", "--model", "bp", "--A", &p.a, "--b", &p.b, "--x", &p.x_bp, "--with-oracle"]);
    assert_eq!(out.exit_code, 0);
    assert_eq!(v["status"], "NotUnique");
    assert!(v["witness"]["vector"].is_array());
    assert_eq!(v["oracle"]["agrees"], true);

    let (out, v) = exec(&["check", "--model", "lasso", "--A", &p.a, "--b", &p.b, "--param", "1", "--x", &p.x_bad]);
    assert_eq!(out.exit_code, 0);
    assert_eq!(v["status"], "Indeterminate");
    assert_eq!(v["reason"], "not optimal");
}

#[test]
fn certify_examples() {
    let p = example();
    let eps = |args: &[&str]| exec(args).1["epsilon"].as_f64();
    assert!((eps(&["certify", "--A", &p.a, "--support", "1", "--signs", "+1"]).unwrap() - 2.0 / 3.0).abs() <= 1e-9);
    assert!(eps(&["certify", "--A", &p.a, "--support", "0,1", "--signs", "+1,+1"]).unwrap().abs() <= 1e-9);
    let id = write(&p.root, "I.csv", "1,0\n0,1\n");
    let id = id.to_str().unwrap();
    assert!((eps(&["certify", "--A", id, "--support", "0", "--signs", "+1"]).unwrap() - 1.0).abs() <= 1e-9);
    for engine in ["barrier", "admm"] {
        let (out, v) = exec(&["certify", "--A", &p.a, "--support", "1", "--signs", "-1", "--engine", engine]);
        assert_eq!(out.exit_code, 0);
        assert_eq!(v["status"], "Holds");
        assert!(v["certificate_margin"].as_f64().unwrap() >= 1e-6);
        assert!(v["iterations"].as_u64().unwrap() > 0);
    }
    // Two equal columns with opposite signs: a_1^T y = 1 and a_1^T y = -1.
    let dup = write(&p.root, "dup.csv", "1,1\n0,0\n");
    let (out, v) = exec(&["certify", "--A", dup.to_str().unwrap(), "--support", "0,1", "--signs", "+1,-1"]);
    assert_eq!(out.exit_code, 0);
    assert_eq!(v["status"], "Fails");
    assert_eq!(v["reason"], "no equality solution");
    assert_eq!(v["epsilon"], Value::Null);
}

#[test]
fn input_errors_exit_with_code_two() {
    let p = example();
    let (out, v) = exec(&["solve", "--model", "bp", "--A", &p.a, "--b", &p.x_lasso]);
    assert_eq!(out.exit_code, 2);
    assert_eq!(v["error"]["code"], "dimension mismatch");
    let (out, v) = exec(&["solve", "--model", "lasso", "--A", &p.a, "--b", &p.b]);
    assert_eq!(out.exit_code, 2);
    assert_eq!(v["error"]["code"], "invalid argument");
    let (out, v) = exec(&["solve", "--model", "ridge", "--A", &p.a, "--b", &p.b]);
    assert_eq!(out.exit_code, 2);
    assert_eq!(v["error"]["code"], "usage");
    let (out, _) = exec(&["certify", "--A", &p.a, "--support", "7", "--signs", "+1"]);
    assert_eq!(out.exit_code, 2);
    let (out, _) = exec(&["oracle", "--model", "lasso", "--A", &p.a, "--b", &p.b, "--param", "1", "--x", &p.x_bad]);
    assert_eq!(out.exit_code, 2);
}

#[test]
fn binary_exit_codes_and_stdout() {
    let p = example();
    let bin = env!("CARGO_BIN_EXE_l1cert");
    let ok = Command::new(bin)
        .args(["check", "--model", "bp", "--A", &p.a, "--b", &p.b, "--x", &p.x_bp])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["status"], "NotUnique");
    let bad = Command::new(bin)
        .args(["solve", "--model", "bp", "--A", &p.a, "--b", &p.x_lasso])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    // --k above min(m, n) cannot be generated.
    let gen = Command::new(bin)
        .args(["generate", "--m", "2", "--n", "3", "--k", "3", "--delta", "0.1", "--seed", "1", "--out"])
        .arg(p.root.join("g"))
        .output()
        .unwrap();
    assert_ne!(gen.status.code(), Some(0));
}

#[test]
fn timings_only_on_request() {
    let p = example();
    let args = ["certify", "--A", &p.a, "--support", "1", "--signs", "+1"];
    assert!(exec(&args).1.get("timings").is_none());
    let mut with = args.to_vec();
    with.push("--timings");
    assert!(exec(&with).1["timings"]["total_seconds"].is_number());
}

#[test]
fn csv_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let vals: Vec<f64> = (1..=12).map(|i| (i as f64).sqrt() * 10f64.powi(i - 6) * if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
    let a = DenseMatrix::new(3, 4, vals.clone()).unwrap();
    let pa = dir.path().join("A.csv");
    write_matrix(&pa, &a).unwrap();
    assert_eq!(read_matrix(&pa).unwrap(), a);
    let pv = dir.path().join("v.csv");
    let v = vec![1.0 / 3.0, -2.0f64.sqrt(), 5e-324, f64::MAX, -0.0];
    write_vector(&pv, &v).unwrap();
    let back = read_vector(&pv).unwrap();
    assert!(back.iter().zip(&v).all(|(x, y)| x.to_bits() == y.to_bits()));
}

fn generate_then_check(seed: u64, nonunique: bool, m: &str, n: &str, k: &str) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("inst");
    let mut args = vec!["generate", "--m", m, "--n", n, "--k", k, "--delta", "0.1", "--out", out.to_str().unwrap()];
    let seed = seed.to_string();
    args.extend(["--seed", &seed]);
    if nonunique {
        args.push("--nonunique");
    }
    let (res, report) = exec(&args);
    assert_eq!(res.exit_code, 0, "{}", res.stdout);
    let claimed = report["claimed"].as_str().unwrap().to_string();
    assert_eq!(report["validation"]["consistent"], true);
    for f in ["A.csv", "b.csv", "xstar.csv", "instance.json"] {
        assert!(out.join(f).exists());
    }
    let (res, check) = exec(&[
        "check",
        "--model",
        "bp",
        "--A",
        out.join("A.csv").to_str().unwrap(),
        "--b",
        out.join("b.csv").to_str().unwrap(),
        "--x",
        out.join("xstar.csv").to_str().unwrap(),
        "--with-oracle",
    ]);
    assert_eq!(res.exit_code, 0);
    assert_eq!(check["status"].as_str().unwrap(), claimed);
    assert_eq!(check["oracle"]["agrees"], true);
}

#[test]
fn generate_check_round_trip() {
    generate_then_check(7, false, "4", "8", "2");
    generate_then_check(7, true, "2", "3", "2");
    for seed in 0..6 {
        generate_then_check(seed, seed % 2 == 1, "5", "9", "2");
    }
}

#[test]
fn zero_sparsity_gives_the_zero_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z");
    let (res, report) = exec(&["generate", "--m", "3", "--n", "5", "--k", "0", "--delta", "0.2", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(res.exit_code, 0);
    assert_eq!(report["support"], serde_json::json!([]));
    assert!(read_vector(&out.join("b.csv")).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn seed_variable_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let gen = |seed_flag: &str, env: Option<&str>, sub: &str| {
        let out = dir.path().join(sub);
        let r = run_with_seed_env(
            ["l1cert", "generate", "--m", "3", "--n", "6", "--k", "1", "--delta", "0.1", "--seed", seed_flag, "--out", out.to_str().unwrap()],
            env.map(str::to_string),
        );
        assert_eq!(r.exit_code, 0);
        std::fs::read_to_string(out.join("A.csv")).unwrap()
    };
    assert_eq!(gen("1", Some("99"), "a"), gen("99", None, "b"));
    assert_ne!(gen("1", None, "c"), gen("99", None, "d"));
    let bad = run_with_seed_env(
        ["l1cert", "generate", "--m", "3", "--n", "6", "--k", "1", "--delta", "0.1", "--seed", "1", "--out", "unused"],
        Some("abc".into()),
    );
    assert_eq!(bad.exit_code, 2);
}

#[test]
fn reports_are_deterministic() {
    let p = example();
    let args = ["l1cert", "check", "--model", "lasso", "--A", &p.a, "--b", &p.b, "--param", "1", "--x", &p.x_lasso, "--with-oracle"];
    assert_eq!(run(args).stdout, run(args).stdout);
}
