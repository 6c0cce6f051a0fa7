use std::path::Path;
use std::process::{Command, Output};

fn pauli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pauli")).args(args).output().expect("spawn pauli")
}

fn read_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("#schema=pauli-lab."));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
#[allow(clippy::approx_constant)]
fn spectrum_gap_at_log_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spec.csv");
    let o = pauli(&["spectrum", "--beta", "0.6931", "--rho", "1", "--n", "200", "--k", "10", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_rows(&out);
    assert_eq!(rows.len(), 10);
    let s = column(&header, "spacing");
    let spacing: f64 = rows[1][s].parse().unwrap();
    assert!((spacing - (1.0 - (-0.6931f64).exp())).abs() < 1e-12);
    assert!((spacing - 0.5).abs() < 1e-4);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("spec.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["schema"], "pauli-lab.spectrum.v1");
    assert!(meta["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn evolve_stays_under_bound() {
    for method in ["spectral", "ode"] {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("ev.csv");
        let o = pauli(&[
            "evolve", "--n", "60", "--t", "0:0.5:6", "--init", "delta:3", "--method", method,
            "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{method}: {}", String::from_utf8_lossy(&o.stderr));
        let (header, rows) = read_rows(&out);
        let (d, b, s) = (column(&header, "dist_gibbs"), column(&header, "bound"), column(&header, "sum"));
        assert_eq!(rows.len(), 13);
        for row in &rows {
            let dist: f64 = row[d].parse().unwrap();
            let bound: f64 = row[b].parse().unwrap();
            let sum: f64 = row[s].parse().unwrap();
            assert!(dist <= bound * (1.0 + 1e-9) + 1e-12, "{method}: {dist} > {bound}");
            assert!((sum - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn balance_passes() {
    let o = pauli(&["balance", "--beta", "1", "--rho", "2", "--n", "100"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("#schema=pauli-lab.balance.v1\ncheck,value,relation,threshold,passed\n"));
    assert!(!text.contains("false"));
}

#[test]
fn sidecar_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    let o = pauli(&["sample", "--n", "40", "--paths", "20000", "--t", "0,1,3", "--seed", "7", "--out", first.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta = dir.path().join("a.csv.meta.json");
    let o = pauli(&["sample", "--config", meta.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    assert_eq!(
        std::fs::read(&meta).unwrap(),
        std::fs::read(dir.path().join("b.csv.meta.json")).unwrap()
    );
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"beta": 2.0, "n": 50, "k": 3}"#).unwrap();
    let o = pauli(&["spectrum", "--config", cfg.to_str().unwrap(), "--k", "2"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 2 + 2);
}

#[test]
fn bad_config_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"beta": 1.0, "temperature": 3}"#).unwrap();
    let o = pauli(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("temperature"));

    let o = pauli(&["spectrum", "--beta", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("beta"));

    let o = pauli(&["evolve", "--n", "30", "--t", "0:1:3", "--init", "delta:31"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn heavy_tail_is_refused_unless_allowed() {
    let o = pauli(&["spectrum", "--beta", "0.05", "--n", "20"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("allow-truncation-tail"));
    let o = pauli(&["spectrum", "--beta", "0.05", "--n", "20", "--allow-truncation-tail"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn failed_check_exits_three() {
    // A drift threshold of 1e-8 cannot hold when the smallest sizes are
    // the largest pair compared.
    let o = pauli(&["convergence", "--beta", "1", "--n", "40", "--sizes", "6,8", "--k", "3"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("drift"));
}
