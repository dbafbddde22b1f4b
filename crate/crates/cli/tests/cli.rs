use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn l2lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_l2lab")).current_dir(dir).args(args).output().expect("binary runs")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

#[test]
fn missing_config_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = l2lab(dir.path(), &["--config", "no/such/l2lab.toml", "fees"]);
    assert!(!o.status.success());
    assert!(text(&o).contains("no/such/l2lab.toml"), "{}", text(&o));
}

#[test]
fn fees_prints_congestion_fee() {
    let dir = tempfile::tempdir().unwrap();
    let o = l2lab(dir.path(), &["--quick", "fees"]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("p* = 3.5928e-5"), "{}", text(&o));
    assert!(dir.path().join("out/pnl_curve.csv").exists());
}

#[test]
fn fee_conditions_surface_as_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("low.toml"), "[controller]\nlambda_bar = 60.0\n").unwrap();
    let o = l2lab(dir.path(), &["--config", "low.toml", "fees"]);
    assert!(!o.status.success());
    assert!(text(&o).contains("congestion target condition"), "{}", text(&o));

    fs::write(dir.path().join("b0.toml"), "[cost]\nb0 = 100000.0\n").unwrap();
    let o = l2lab(dir.path(), &["--config", "b0.toml", "fees"]);
    assert!(!o.status.success());
    assert!(text(&o).contains("existence condition"), "{}", text(&o));
}

#[test]
fn solve_writes_one_threshold_per_price() {
    let dir = tempfile::tempdir().unwrap();
    let o = l2lab(dir.path(), &["solve", "--fee", "3.5928e-5"]);
    assert!(o.status.success(), "{}", text(&o));
    let t = fs::read_to_string(dir.path().join("out/thresholds.csv")).unwrap();
    assert_eq!(t.lines().count(), 2 + 101);
}

#[test]
fn smoke_simulation_is_fast() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let o = l2lab(dir.path(), &["simulate", "ar1-dec", "--replicas", "1", "--horizon", "10"]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(start.elapsed() < Duration::from_secs(5), "{:?}", start.elapsed());
    let out = dir.path().join("out");
    for f in ["trajectory_r0.csv", "summary.csv", "switch_matrix.csv", "config.toml"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let svgs = fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg")).count();
    assert_eq!(svgs, 4);
}

#[test]
fn same_seed_gives_identical_csvs_and_config_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| ["--seed", "42", "--out", out, "simulate", "iid-const", "--replicas", "2", "--horizon", "300"].map(String::from);
    for out in ["a", "b"] {
        let o = Command::new(env!("CARGO_BIN_EXE_l2lab")).current_dir(dir.path()).args(args(out)).output().unwrap();
        assert!(o.status.success(), "{}", text(&o));
    }
    let o = l2lab(dir.path(), &["--config", "a/config.toml", "--out", "c", "simulate", "iid-const"]);
    assert!(o.status.success(), "{}", text(&o));
    for f in ["trajectory_r0.csv", "trajectory_r1.csv", "summary.csv", "switch_matrix.csv", "config.toml"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        assert_eq!(a, fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
        assert_eq!(a, fs::read(dir.path().join("c").join(f)).unwrap(), "rerun from config: {f}");
    }
}

#[test]
fn unknown_scenario_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let o = l2lab(dir.path(), &["simulate", "ar2-dec"]);
    assert!(!o.status.success());
    let t = text(&o);
    for name in ["iid-dec", "iid-const", "ar1-dec", "ar1-const"] {
        assert!(t.contains(name), "{t}");
    }
}

#[test]
fn verify_fails_with_broken_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("loose.toml"), "[mdp]\ntol = 1.0\n").unwrap();
    let o = l2lab(dir.path(), &["--config", "loose.toml", "verify", "--criteria", "1,2"]);
    assert!(!o.status.success());
    assert!(text(&o).contains("[FAIL]  1"), "{}", text(&o));

    let o = l2lab(dir.path(), &["verify", "--criteria", "1,2,12"]);
    assert!(o.status.success(), "{}", text(&o));
    let acc = fs::read_to_string(dir.path().join("out/acceptance.csv")).unwrap();
    assert!(acc.starts_with("# l2lab schema=acceptance version=1"));
    assert_eq!(acc.lines().count(), 2 + 3);
}
