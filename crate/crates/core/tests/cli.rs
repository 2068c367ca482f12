use std::path::Path;
use std::process::{Command, Output};

fn radgas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radgas"))
        .args(args)
        .env("RADGAS_THREADS", "2")
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn radgas")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = "\
u_minus = -1
u_plus = -0.2
grid.nx = 96
grid.ny = 8
grid.lx = 60
grid.ly = 8
t_end = 2
record_every = 4
perturbation.kind = gaussian
perturbation.amp = 0.01
perturbation.x0 = 5
perturbation.sx = 1
perturbation.sy = 1
";

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn verify_rates_on_exact_power_law() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = radgas::diagnostics::COLUMNS.join(",");
    csv.push('\n');
    for k in 0..50 {
        let t = k as f64;
        let mut row = [0.0f64; 23];
        row[0] = t;
        row[1] = (1.0 + t).powf(-0.25);
        csv.push_str(&row.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        csv.push('\n');
    }
    let s = write(dir.path(), "s.csv", &csv);
    let ok = radgas(&["verify-rates", "--series", &s, "--column", "sup_v", "--expect", "-0.25", "--tol", "0.15"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(stdout(&ok).contains("sup_v,") && stdout(&ok).contains("pass"));
    let bad = radgas(&["verify-rates", "--series", &s, "--column", "sup_v", "--expect", "-1.0"]);
    assert_eq!(bad.status.code(), Some(4));
    let unknown = radgas(&["verify-rates", "--series", &s, "--column", "nope"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn check_inequalities_passes() {
    let o = radgas(&["check-inequalities", "--seed", "42", "--trials", "100"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.ends_with(",0")).count(), 5);
}

#[test]
fn elliptic_mms_ratios() {
    let o = radgas(&["elliptic-mms"]);
    assert!(o.status.success());
    let ratios: Vec<f64> = stdout(&o)
        .lines()
        .skip(2)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(ratios.len(), 3);
    assert!(ratios.iter().all(|r| (3.5..=4.5).contains(r)));
}

#[test]
fn stationary_writes_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let o = radgas(&[
        "stationary", "--u-minus", "-1", "--u-plus", "-0.2", "--lx", "80", "--n", "512", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,ubar,qbar,d1ubar,d2ubar,d3ubar,d4ubar"));
    assert_eq!(lines.count(), 513);
    let bad = radgas(&["stationary", "--u-minus", "-0.2", "--u-plus", "-0.5"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn evolve_restore_matches_straight_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", SMALL);
    let a = dir.path().join("a");
    let o = radgas(&["evolve", "--config", &cfg, "--out-dir", a.to_str().unwrap(), "--checkpoint-every", "8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["series.csv", "final.bin", "manifest.json", "checkpoint_00000008.bin"] {
        assert!(a.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenario"], "evolve");

    let b = dir.path().join("b");
    let ck = a.join("checkpoint_00000008.bin");
    let o = radgas(&[
        "evolve", "--config", &cfg, "--out-dir", b.to_str().unwrap(), "--restore", ck.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let full = std::fs::read_to_string(a.join("series.csv")).unwrap();
    let tail = std::fs::read_to_string(b.join("series.csv")).unwrap();
    // the restored run starts with the record at the checkpoint step
    let tail_rows: Vec<&str> = tail.lines().skip(1).collect();
    let full_rows: Vec<&str> = full.lines().skip(1).collect();
    assert!(tail_rows.len() >= 2);
    assert_eq!(&full_rows[full_rows.len() - tail_rows.len()..], &tail_rows[..]);
    assert_eq!(std::fs::read(a.join("final.bin")).unwrap(), std::fs::read(b.join("final.bin")).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.cfg");
    let o = radgas(&["evolve", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let bad = write(dir.path(), "bad.cfg", "u_minus = -0.2\nu_plus = -0.5\n");
    let o = radgas(&["evolve", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write(dir.path(), "c.cfg", SMALL);
    let o = radgas(&["evolve", "--config", &cfg, "--checkpoint-every", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let junk = write(dir.path(), "junk.bin", "not a checkpoint");
    let out = dir.path().join("o");
    let o = radgas(&["evolve", "--config", &cfg, "--out-dir", out.to_str().unwrap(), "--restore", &junk]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn identical_config_gives_identical_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", SMALL);
    let mut series = Vec::new();
    for name in ["x", "y"] {
        let out = dir.path().join(name);
        let o = radgas(&["evolve", "--config", &cfg, "--out-dir", out.to_str().unwrap()]);
        assert!(o.status.success());
        series.push(std::fs::read(out.join("series.csv")).unwrap());
    }
    assert_eq!(series[0], series[1]);
}

#[test]
fn manifest_echo_reproduces_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", SMALL);
    let out = dir.path().join("m");
    assert!(radgas(&["evolve", "--config", &cfg, "--out-dir", out.to_str().unwrap()]).status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let echo: String = manifest["config"]
        .as_array()
        .unwrap()
        .iter()
        .map(|kv| format!("{} = {}\n", kv[0].as_str().unwrap(), kv[1].as_str().unwrap()))
        .collect();
    assert_eq!(
        radgas::io::parse_config_str(&echo).unwrap(),
        radgas::io::parse_config_str(SMALL).unwrap()
    );
    for p in manifest["outputs"].as_array().unwrap() {
        assert!(Path::new(p.as_str().unwrap()).exists());
    }
}
