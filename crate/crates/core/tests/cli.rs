use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn pconn(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pconn"));
    cmd.args(args).env_remove("PCONN_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn pconn")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn write(path: &Path, v: &Value) {
    std::fs::write(path, serde_json::to_string(v).unwrap()).unwrap();
}

fn rank_one(dir: &Path, name: &str, a0: &str, tail: &str, trunc: usize, n: i64) -> String {
    let mut m = vec![json!([[a0]])];
    m.extend((0..trunc).map(|_| json!([[tail]])));
    let path = dir.join(name);
    write(&path, &json!({"p": 2, "precision": n, "trunc": trunc, "rank": 1, "matrix": m}));
    path.to_str().unwrap().to_owned()
}

#[test]
fn usage_errors_exit_2_and_name_the_flag() {
    let out = pconn(&["solve", "--conn", "x.json", "--bogus"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--bogus"));
    assert_eq!(pconn(&["frobnicate"], &[]).status.code(), Some(2));
    assert_eq!(pconn(&["gauge", "--from", "a.json", "--to", "model"], &[]).status.code(), Some(2));
}

#[test]
fn engine_errors_exit_1_and_name_the_case() {
    let out = pconn(&["run", "no_such_scenario"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("UnknownScenario"));

    let dir = tempfile::tempdir().unwrap();
    let c = rank_one(dir.path(), "res.json", "-2", "0", 6, 64);
    let out = pconn(&["solve", "--conn", &c], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ResidueShiftSingular"));

    let bad = dir.path().join("bad.json");
    write(&bad, &json!({"p": 2, "precision": 64, "trunc": 2, "rank": 1, "matrix": [[["0"]]]}));
    let out = pconn(&["cohomology", "--conn", bad.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("DimensionMismatch"));
}

#[test]
fn solve_rank_one_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let c = rank_one(dir.path(), "third.json", "1/3", "0", 30, 256);
    let csv = dir.path().join("profile.csv");
    let out = pconn(
        &["solve", "--conn", &c, "--deg", "12", "--coefficients", "--csv", csv.to_str().unwrap()],
        &[],
    );
    let report = stdout_json(&out);
    // θa + a/3 = Σ z^i gives a_i = 3/(3i + 1).
    for (i, c) in report["coefficients"].as_array().unwrap().iter().enumerate() {
        let expected = if i == 0 { "3".to_owned() } else { format!("3/{}", 3 * i + 1) };
        assert_eq!(c[0][0], expected);
    }
    assert_eq!(report["certificate"]["verdict"]["kind"], "CONVERGENT_UP_TO_D");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("degree,valuation"));
    assert_eq!(lines.count(), 13);

    let rhs = dir.path().join("rhs.json");
    write(&rhs, &json!([["1"], [0], [0]]));
    let out = pconn(&["solve", "--conn", &c, "--deg", "2", "--rhs", rhs.to_str().unwrap(), "--coefficients"], &[]);
    assert_eq!(stdout_json(&out)["coefficients"], json!([[["3"]], [["0"]], [["0"]]]));
    let out = pconn(&["solve", "--conn", &c, "--deg", "5", "--rhs", rhs.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fuchs_cohomology_and_gauge() {
    let dir = tempfile::tempdir().unwrap();
    let z = rank_one(dir.path(), "z.json", "0", "1", 20, 128);
    let dims = stdout_json(&pconn(&["cohomology", "--conn", &z], &[]));
    assert_eq!((dims["h0"].clone(), dims["h1"].clone()), (json!(1), json!(1)));
    let dims = stdout_json(&pconn(&["cohomology", "--conn", &z, "--cut", "4"], &[]));
    assert_eq!(dims["n_used"], 4);

    let f = stdout_json(&pconn(&["fuchs", "--conn", &z, "--coefficients"], &[]));
    // A = Σ_{i≥1} z^i, A_0 = 0: θU = −A·U, so U = exp(−Σ z^i / i) = 1 − z.
    for (i, c) in f["coefficients"].as_array().unwrap().iter().enumerate() {
        assert_eq!(c[0][0], ["1", "-1"].get(i).copied().unwrap_or("0"));
    }

    let rep = dir.path().join("gauge.json");
    let out = pconn(&["gauge", "--from", &z, "--to", "model", "--k", "0", "--out", rep.to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let g: Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(g["unit_determinant"], true);
    assert_eq!(g["residual"], ">=128");
}

#[test]
fn type_estimates_separate_gap_signs() {
    let est = |lambda: &str| {
        let out = pconn(&["type", "--lambda", lambda, "--precision", "1024", "--terms", "300"], &[]);
        stdout_json(&out)["type_upper_bound"].as_f64().unwrap()
    };
    assert!(est("gap:4") < 0.2);
    assert!(est("-gap:4") > 0.9);
    let out = pconn(&["type", "--lambda", "1/3", "--terms", "100", "--slope"], &[]);
    let v = stdout_json(&out);
    assert!(v["estimate"]["type_upper_bound"].as_f64().unwrap() > 0.5);
    assert!(v["slope"]["verdict"].is_object() || v["slope"]["verdict"].is_string());
}

#[test]
fn run_is_reproducible_and_honours_seed_env() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("s.json");
    write(&scen, &json!({"scenario": "fuchs_demo", "params": {"precision": 256, "degree": 30, "seed": 3}}));
    let run = |name: &str, envs: &[(&str, &str)]| {
        let out_path = dir.path().join(name);
        let csv_dir = dir.path().join(format!("{name}.csv"));
        let out = pconn(
            &["run", scen.to_str().unwrap(), "--out", out_path.to_str().unwrap(), "--csv", csv_dir.to_str().unwrap()],
            envs,
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(out_path).unwrap()).unwrap();
        assert!(v["generated_at"].is_u64());
        v.as_object_mut().unwrap().remove("generated_at");
        let csvs = std::fs::read_dir(csv_dir).unwrap().count();
        (v, csvs)
    };
    let (a, csvs) = run("a.json", &[]);
    let (b, _) = run("b.json", &[]);
    assert_eq!(a, b);
    assert!(csvs > 0);
    assert_eq!(a["params"]["seed"], 3);
    assert_eq!(a["passed"], true);
    let (c, _) = run("c.json", &[("PCONN_SEED", "99")]);
    assert_eq!(c["params"]["seed"], 99);
    assert_ne!(a["results"], c["results"]);

    let list = stdout_json(&pconn(&["list-scenarios", "--json"], &[]));
    assert_eq!(list.as_array().unwrap().len(), 6);
}

#[test]
fn connection_files_round_trip() {
    use pconn::io::{load_connection, save_connection};
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("in.json");
    write(
        &src,
        &json!({"p": 2, "precision": 64, "trunc": 2, "rank": 2,
                "matrix": [[["0", "1"], ["0", "1/3"]], [[1, 0], ["-gap:2", "digits:1,1"]], [["2^-1*3", 0], [0, 0]]],
                "exponents": ["0", "1/3"]}),
    );
    let m = load_connection(&src).unwrap();
    let dst = dir.path().join("out.json");
    save_connection(&dst, &m).unwrap();
    assert_eq!(load_connection(&dst).unwrap(), m);
}
