use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn nmfa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmfa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn toy(dir: &Path, mode: &str, level: &str, seed: &str, epoch: &str) -> String {
    let o = nmfa(&[
        "generate", "toy", "--mode", mode, "--level", level, "--seed", seed, "--epoch", epoch, "--out", p(dir),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    dir.join("toy.toml").to_str().unwrap().to_string()
}

fn metrics(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn invalid_flags_exit_2_without_output() {
    let tmp = TempDir::new().unwrap();
    let m = toy(&tmp.path().join("in"), "random", "0", "1", "0");
    let out = tmp.path().join("out");
    for bad in [
        vec!["--lambda", "-1"],
        vec!["--horizon", "0"],
        vec!["--q-step", "0"],
        vec!["--samples", "0"],
        vec!["--d-threshold", "nan"],
        vec!["--fit-r-min", "8", "--fit-r-max", "4"],
        vec!["--bogus"],
    ] {
        let mut args = vec!["analyze", m.as_str(), "--out", p(&out)];
        args.extend(bad.iter().copied());
        let o = nmfa(&args);
        assert_eq!(code(&o), 2, "{bad:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.exists(), "{bad:?} left output behind");
    }
    assert_eq!(code(&nmfa(&["--threads", "0", "selfcheck"])), 2);
}

#[test]
fn missing_input_exits_3() {
    let tmp = TempDir::new().unwrap();
    let o = nmfa(&["analyze", p(&tmp.path().join("nope.toml")), "--out", p(tmp.path())]);
    assert_eq!(code(&o), 3);
}

#[test]
fn emergence_single_checkpoint_is_zero_and_order_is_enforced() {
    let tmp = TempDir::new().unwrap();
    let a = toy(&tmp.path().join("a"), "random", "0", "1", "0");
    let b = toy(&tmp.path().join("b"), "random", "0", "2", "100");
    let out = tmp.path().join("e");
    let o = nmfa(&["emergence", a.as_str(), "--horizon", "2", "--nodes-per-layer", "16", "--samples", "2", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("emergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("epoch,alpha0,width,E"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "0");
    assert_eq!(row[3].parse::<f64>().unwrap(), 0.0);
    assert!(out.join("emergence.meta.json").exists());

    // Reports from a separate analyze run chain into emergence.
    let ana = tmp.path().join("ana");
    assert_eq!(code(&nmfa(&["analyze", a.as_str(), "--horizon", "2", "--nodes-per-layer", "16", "--samples", "2", "--out", p(&ana)])), 0);
    let ana_b = tmp.path().join("ana_b");
    assert_eq!(code(&nmfa(&["analyze", b.as_str(), "--horizon", "2", "--nodes-per-layer", "16", "--samples", "2", "--out", p(&ana_b)])), 0);
    let ra = ana.join("toy.metrics.json");
    let rb = ana_b.join("toy.metrics.json");
    let o = nmfa(&["emergence", p(&ra), p(&rb), "--out", p(&tmp.path().join("e2"))]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = nmfa(&["emergence", p(&rb), p(&ra), "--out", p(&tmp.path().join("e3"))]);
    assert_eq!(code(&o), 3);
}

#[test]
fn generated_instances_are_well_formed() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("bin");
    assert_eq!(code(&nmfa(&["generate", "binomial", "--p", "0.3", "--depth", "8", "--out", p(&dir)])), 0);
    let csv = fs::read_to_string(dir.join("binomial.csv")).unwrap();
    let masses: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(masses.len(), 256);
    assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    let dir = tmp.path().join("ws");
    assert_eq!(code(&nmfa(&["generate", "ws", "--n", "50", "--k", "4", "--beta", "0", "--out", p(&dir)])), 0);
    let mut degree = vec![0usize; 50];
    for l in fs::read_to_string(dir.join("ws.csv")).unwrap().lines().skip(1) {
        let f: Vec<usize> = l.split(',').take(2).map(|x| x.parse().unwrap()).collect();
        degree[f[0]] += 1;
        degree[f[1]] += 1;
    }
    assert!(degree.iter().all(|&d| d == 4));

    let dir = tmp.path().join("frac");
    assert_eq!(code(&nmfa(&["generate", "fractal-layered", "--target-d", "2", "--nodes", "32", "--out", p(&dir)])), 0);
    let out = tmp.path().join("frac_out");
    let o = nmfa(&["analyze", p(&dir.join("fractal.toml")), "--nodes-per-layer", "32", "--samples", "1", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("fractal.spectrum.csv").exists());
    assert!(out.join("fractal.spectrum.meta.json").exists());

    let dir = tmp.path().join("wpam");
    assert_eq!(code(&nmfa(&["generate", "wpam-series", "--iterations", "12", "--every", "5", "--out", p(&dir)])), 0);
    for it in [0, 5, 10, 12] {
        assert!(dir.join(format!("wpam_{it:04}.toml")).exists());
    }
}

#[test]
fn selfcheck_passes_and_floor_off_fails() {
    let o = nmfa(&["selfcheck"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("all checks passed"));
    let o = nmfa(&["selfcheck", "--mass-floor", "off"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn heterogeneous_toy_is_wider_in_reports() {
    let tmp = TempDir::new().unwrap();
    let width = |mode: &str, level: &str| {
        let m = toy(&tmp.path().join(mode), mode, level, "0", "0");
        let out = tmp.path().join(format!("{mode}_out"));
        let o = nmfa(&["analyze", m.as_str(), "--horizon", "2", "--nodes-per-layer", "32", "--samples", "1", "--out", p(&out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        metrics(&out.join("toy.metrics.json"))["width"].as_f64().unwrap()
    };
    assert!(width("homogeneous", "0") < width("heterogeneous", "0.2"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let m = toy(&tmp.path().join("in"), "random", "0", "4", "0");
    let run = |name: &str, threads: &str| {
        let out = tmp.path().join(name);
        let o = nmfa(&["--threads", threads, "analyze", m.as_str(), "--nodes-per-layer", "16", "--samples", "3", "--seed", "9", "--out", p(&out)]);
        assert_eq!(code(&o), 0);
        ["toy.spectrum.csv", "toy.spectrum.meta.json", "toy.metrics.json"]
            .map(|f| fs::read(out.join(f)).unwrap())
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "1"));
    assert_eq!(a, run("c", "3"));
}
