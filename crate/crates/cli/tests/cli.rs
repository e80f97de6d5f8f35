use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_critmarkets"));
    for var in [
        "CRITMARKETS_THREADS",
        "CRITMARKETS_SEED",
        "CRITMARKETS_OUT",
        "CRITMARKETS_MANIFEST",
    ] {
        c.env_remove(var);
    }
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn classify_ts_names_the_stag_hunt() {
    let o = run(&["classify-ts", "--T", "0.5", "--S", "-0.5"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "StagHunt, NE: CC, DD");
}

#[test]
fn transform_reads_a_game_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chicken.json");
    std::fs::write(&path, r#"{"p1": [[0, 7], [2, 6]], "p2": [[0, 7], [2, 6]]}"#).unwrap();
    let o = run(&["transform", "--game", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for p in v.as_array().unwrap() {
        assert_eq!(p["gparams"]["g0"], 3.75);
        assert_eq!(p["gparams"]["g_self"], 0.25);
        assert_eq!(p["gparams"]["g_other"], 2.75);
        assert_eq!(p["gparams"]["g12"], -0.75);
        assert_eq!(p["sdt"]["j"], -0.75);
    }
}

#[test]
fn gumbel_check_emits_the_three_fields() {
    let o = run(&[
        "gumbel-check",
        "--utilities",
        "1,0",
        "--xi",
        "1",
        "--samples",
        "200000",
        "--seed",
        "42",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["analytic"].as_array().unwrap().len(), 2);
    assert_eq!(v["empirical"].as_array().unwrap().len(), 2);
    assert!(v["tv_distance"].as_f64().unwrap() < 0.01);
}

#[test]
fn sdt_sweep_csv_has_header_and_three_branches_past_the_fold() {
    let o = run(&[
        "sdt-sweep",
        "--h",
        "0",
        "--j",
        "1",
        "--xi-range",
        "0.5:1.5:0.25",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("xi,equilibrium,stability"));
    let at_1_5 = out.lines().filter(|l| l.starts_with("1.5,")).count();
    assert_eq!(at_1_5, 3);
}

#[test]
fn qre_surface_regions() {
    let o = run(&[
        "qre-surface",
        "--game",
        "chicken-paper",
        "--xi1",
        "0:4:2",
        "--xi2",
        "0:4:2",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("xi1,xi2,x1,x2,stability,region\n"));
    let rows: Vec<Vec<&str>> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert!(rows
        .iter()
        .any(|r| r[0] == "0" && r[1] == "0" && r[5] == "A"));
    assert_eq!(
        rows.iter()
            .filter(|r| r[0] == "4" && r[1] == "4" && r[5] == "B")
            .count(),
        3
    );
}

#[test]
fn qre_critical_convention_rescales_precision() {
    let a = run(&[
        "qre-critical",
        "--game",
        "chicken-paper",
        "--xi1",
        "0:4:0.1",
        "--xi2",
        "0:4:0.1",
    ]);
    let b = run(&[
        "qre-critical",
        "--game",
        "chicken-paper",
        "--xi1",
        "0:1:0.025",
        "--xi2",
        "0:1:0.025",
        "--xi-convention",
        "eq45",
    ]);
    assert!(a.status.success() && b.status.success());
    let first = |o: &Output| -> Vec<f64> {
        stdout(o)
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect()
    };
    let (pa, pb) = (first(&a), first(&b));
    assert!((pa[0] - 4.0 * pb[0]).abs() < 1e-6 && (pa[1] - 4.0 * pb[1]).abs() < 1e-6);
}

#[test]
fn twin_crises_reports_a_joint_jump_and_replays_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let summary = dir.path().join("jumps.json");
    let o = run(&[
        "twin-crises",
        "--game",
        "chicken-paper",
        "--xi2",
        "3.0",
        "--xi1",
        "0:4:0.005",
        "--direction",
        "down",
        "--out",
        out.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("xi1,x1,x2,jumped\n"));
    assert_eq!(csv.lines().filter(|l| l.ends_with(",true")).count(), 1);
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["jumps"][0]["co_collapse"], true);

    let manifest = Path::new(&format!("{}.manifest.json", out.display())).to_path_buf();
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["subcommand"], "twin-crises");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);

    let again = dir.path().join("again.csv");
    let o = run(&[
        "--replay",
        manifest.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn abm_run_is_reproducible_and_validates_its_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("abm.json");
    std::fs::write(
        &cfg,
        r#"{"n": 50, "J": 1.0, "xi": 1.5, "z": 0.1, "beta": 0.05, "horizon": 100}"#,
    )
    .unwrap();
    let a = run(&["abm-run", "--config", cfg.to_str().unwrap(), "--seed", "3"]);
    let b = run(&["abm-run", "--config", cfg.to_str().unwrap(), "--seed", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("t,p,x\n"));
    assert_eq!(stdout(&a).lines().count(), 102);

    std::fs::write(
        &cfg,
        r#"{"n": 50, "J": 1.0, "xi": 1.5, "z": 0.1, "horizon": 100, "typo": 1}"#,
    )
    .unwrap();
    let o = run(&["abm-run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("typo"));
}

#[test]
fn cusp_outputs() {
    let o = run(&["cusp-surface", "--u1", "-1:1:1", "--u2", "0:0:1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("u1,u2,root,stability,region\n"));
    assert_eq!(out.lines().filter(|l| l.starts_with("1,0,")).count(), 3);

    let o = run(&["cusp-critical", "--u1-max", "3", "--points", "10"]);
    for line in stdout(&o).lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((4.0 * v[0].powi(3) - 27.0 * v[1] * v[1]).abs() < 1e-10 * (1.0 + v[0].powi(3)));
    }

    let o = run(&[
        "cusp-density",
        "--u1",
        "3",
        "--u2",
        "0",
        "--xi",
        "4",
        "--points",
        "11",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 12);
}

#[test]
fn exit_codes() {
    // unknown flag
    assert_eq!(
        run(&["classify-ts", "--T", "1.5", "--S", "0.5", "--bogus"])
            .status
            .code(),
        Some(2)
    );
    // validation error names the field
    let o = run(&["cusp-density", "--u1", "1", "--u2", "0", "--xi", "-2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`xi`"));
    let o = run(&["sdt-sweep", "--xi-range", "1:0:0.1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["qre-surface", "--game", "no-such-game"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`game`"));
}

#[test]
fn verify_prints_one_line_per_check() {
    let o = run(&["verify", "--suite", "game"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let checks: Vec<&str> = out
        .lines()
        .filter(|l| l.starts_with("PASS") || l.starts_with("FAIL"))
        .collect();
    assert_eq!(checks.len(), 6);
    assert!(checks.iter().all(|l| l.starts_with("PASS game/")));
}
