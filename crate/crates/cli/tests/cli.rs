use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn phosdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phosdyn")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let o = phosdyn(args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
}

fn out(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

fn read(dir: &str, file: &str) -> String {
    fs::read_to_string(Path::new(dir).join(file)).unwrap()
}

/// Header and numeric-or-text rows of a CSV file.
fn table(dir: &str, file: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let text = read(dir, file);
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn col(h: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let k = h.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn meta(dir: &str) -> Value {
    serde_json::from_str(&read(dir, "metadata.json")).unwrap()
}

fn files(dir: &str) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

#[test]
fn full_system_conserves_cytoplasm_and_volume_ratio() {
    let d = TempDir::new().unwrap();
    let o = out(&d, "full");
    ok(&["simulate", "--system", "full", "--out", &o, "--set", "solver.t_end=200", "--sample", "0.5"]);
    let (h, rows) = table(&o, "trajectory.csv");
    assert_eq!(h, ["t", "c_no", "c_nop", "c_ni", "c_cy", "Phi", "V_n", "V_cyto", "c_sum"]);
    assert_eq!(rows.len(), 401);
    let sum = col(&h, &rows, "c_sum");
    assert!(sum.iter().all(|s| (s / sum[0] - 1.0).abs() <= 1e-6));
    let (phi, vn, vc) = (col(&h, &rows, "Phi"), col(&h, &rows, "V_n"), col(&h, &rows, "V_cyto"));
    for i in 0..rows.len() {
        assert!((phi[i] - vn[i] / vc[i]).abs() <= 1e-6 * phi[i].abs(), "row {i}");
    }
}

#[test]
fn reruns_are_identical() {
    let d = TempDir::new().unwrap();
    for sigma in ["0", "0.01"] {
        let (a, b) = (out(&d, &format!("a{sigma}")), out(&d, &format!("b{sigma}")));
        for o in [&a, &b] {
            ok(&["simulate", "--out", o, "--set", &format!("sigma={sigma}"), "--set", "solver.t_end=20", "--seed", "7"]);
        }
        assert_eq!(read(&a, "trajectory.csv"), read(&b, "trajectory.csv"));
        assert_eq!(read(&a, "metadata.json"), read(&b, "metadata.json"));
    }
    let c = out(&d, "c");
    ok(&["simulate", "--out", &c, "--set", "sigma=0.01", "--set", "solver.t_end=20", "--seed", "8"]);
    assert_ne!(read(&c, "trajectory.csv"), read(&out(&d, "a0.01"), "trajectory.csv"));
}

#[test]
fn metadata_reproduces_the_run() {
    let d = TempDir::new().unwrap();
    let (a, b) = (out(&d, "a"), out(&d, "b"));
    ok(&[
        "sr", "--out", &a, "--set", "tau=0.5", "--set", "K_c=2.9", "--sigmas", "1e-3,1e-2", "--seeds", "2", "--t-end", "300",
        "--seed", "11",
    ]);
    let m = meta(&a);
    assert_eq!(m["command"], "sr");
    assert_eq!(m["model"]["K_c"], 2.9);
    assert!(m["config"].as_str().unwrap().contains("[sr]\nsigmas = 0.001,0.01\n"));
    let cfg = Path::new(&a).join("metadata.json").display().to_string();
    ok(&["sr", "--config", &cfg, "--out", &b]);
    for f in ["sr.csv", "sr_per_seed.csv", "metadata.json"] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let d = TempDir::new().unwrap();
    let (a, b) = (out(&d, "a"), out(&d, "b"));
    let base = ["sr", "--set", "tau=0.5", "--set", "K_c=2.9", "--sigmas", "log:1e-3:1e-1:3", "--seeds", "3", "--t-end", "300"];
    ok(&[&base[..], &["--out", &a, "--jobs", "1"]].concat());
    ok(&[&base[..], &["--out", &b, "--jobs", "4"]].concat());
    assert_eq!(read(&a, "sr.csv"), read(&b, "sr.csv"));
    assert_eq!(read(&a, "sr_per_seed.csv"), read(&b, "sr_per_seed.csv"));
}

#[test]
fn config_errors_exit_nonzero_with_line_numbers() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("bad.cfg");
    let o = out(&d, "o");
    fs::write(&cfg, "# comment\nK_c = 2.5\ntau = zero\n").unwrap();
    let r = phosdyn(&["simulate", "--config", cfg.to_str().unwrap(), "--out", &o]);
    assert!(!r.status.success());
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("bad.cfg:3:"), "{err}");

    fs::write(&cfg, "K_c = 2.5\n\n\nA_n = -1\n").unwrap();
    let err = String::from_utf8_lossy(&phosdyn(&["simulate", "--config", cfg.to_str().unwrap(), "--out", &o]).stderr).to_string();
    assert!(err.contains("bad.cfg:4:") && err.contains("A_n"), "{err}");

    fs::write(&cfg, "[sr]\nseeds = 3\nsede = 4\n").unwrap();
    let r = phosdyn(&["sr", "--config", cfg.to_str().unwrap(), "--out", &o]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("bad.cfg:3: unknown key `sede`"));
    assert!(!Path::new(&o).join("metadata.json").exists());

    let r = phosdyn(&["simulate", "--set", "K_c", "--out", &o]);
    assert!(!r.status.success());
    let r = phosdyn(&["simulate", "--sample", "abc", "--out", &o]);
    assert!(!r.status.success());
}

#[test]
fn flags_beat_file_beats_defaults() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("run.cfg");
    fs::write(&cfg, "K_c = 3.5\ntau = 0.2\n[solver]\nt_end = 5\n[simulate]\nsample = 1\n").unwrap();
    let o = out(&d, "o");
    ok(&["simulate", "--config", cfg.to_str().unwrap(), "--set", "tau=0.3", "--sample", "0.5", "--out", &o]);
    let m = meta(&o);
    assert_eq!(m["model"]["K_c"], 3.5);
    assert_eq!(m["model"]["tau"], 0.3);
    assert_eq!(m["model"]["k_nt"], 0.1);
    assert_eq!(table(&o, "trajectory.csv").1.len(), 11);
}

#[test]
fn nullclines_and_equilibria() {
    let d = TempDir::new().unwrap();
    // bistable pair with a saddle between
    let o = out(&d, "bi");
    ok(&["nullclines", "--out", &o, "--set", "tau=5", "--set", "k_nt=0.00397", "--set", "K_c=7.5"]);
    let (h, rows) = table(&o, "equilibria.csv");
    assert_eq!(h, ["c_no", "c_nop", "kind", "re_lambda1", "im_lambda1", "re_lambda2", "im_lambda2"]);
    let kinds: Vec<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(kinds.len(), 3, "{kinds:?}");
    assert_eq!(kinds.iter().filter(|k| k.starts_with("stable")).count(), 2);
    assert_eq!(kinds.iter().filter(|k| **k == "saddle").count(), 1);
    // oscillating reference point: one unstable equilibrium
    let o2 = out(&d, "osc");
    ok(&["nullclines", "--out", &o2]);
    let (h, rows) = table(&o2, "equilibria.csv");
    assert_eq!(rows.len(), 1);
    assert!(col(&h, &rows, "re_lambda1")[0] > 0.0);
    let (h, rows) = table(&o2, "nullcline_c_nop.csv");
    assert_eq!(h, ["total", "frac", "which", "component"]);
    assert!(rows.iter().all(|r| r[2] == "c_nop"));
    // a box without equilibria gives a header-only file
    let o3 = out(&d, "empty");
    ok(&["nullclines", "--out", &o3, "--eq-total", "50,60"]);
    assert_eq!(read(&o3, "equilibria.csv").lines().count(), 1);
    let o4 = out(&d, "osc2");
    ok(&["nullclines", "--out", &o4]);
    for f in ["nullcline_c_no.csv", "nullcline_c_nop.csv", "equilibria.csv"] {
        assert_eq!(read(&o2, f), read(&o4, f));
    }
}

#[test]
fn supercritical_slice_diagram() {
    let d = TempDir::new().unwrap();
    let o = out(&d, "d");
    ok(&["diagram", "--out", &o, "--set", "tau=60", "--free", "K_c", "--range", "0.5,4.5"]);
    let j: Value = serde_json::from_str(&read(&o, "diagram.json")).unwrap();
    let hopf: Vec<&Value> = j["equilibria"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|b| b["events"].as_array().unwrap())
        .filter(|e| e["kind"] == "hopf")
        .collect();
    assert_eq!(hopf.len(), 2);
    assert!(hopf.iter().all(|e| e["l1"].as_f64().unwrap() < 0.0));
    let cycles = j["cycles"].as_array().unwrap();
    assert_eq!(cycles.len(), 1);
    assert!(cycles[0]["points"].as_array().unwrap().iter().all(|p| p["stable"] == true));
    let ends = cycles[0]["events"].as_array().unwrap().iter().filter(|e| e["kind"] == "hopf-endpoint").count();
    assert_eq!(ends, 2);
    let names = files(&o);
    for f in ["cycle_0.csv", "diagram.json", "eq_0.csv", "metadata.json"] {
        assert!(names.iter().any(|n| n == f), "{names:?}");
    }
    assert!(!names.iter().any(|n| n == "cycle_1.csv"));
    let (h, _) = table(&o, "cycle_0.csv");
    assert_eq!(&h[..4], ["c_no", "c_nop", "T", "K_c"]);
}

fn hopf_curve(d: &TempDir, k_nt: &str) -> (Value, String) {
    let o = out(d, &format!("h{k_nt}"));
    ok(&[
        "diagram", "--kind", "hopf2d", "--out", &o, "--set", &format!("k_nt={k_nt}"), "--free", "K_c", "--range", "0.05,20",
        "--free2", "tau", "--range2", "0.005,500", "--max-points", "5000",
    ]);
    (meta(&o), o)
}

#[test]
fn hopf_curves_bound_nested_regions() {
    let d = TempDir::new().unwrap();
    let (m1, o1) = hopf_curve(&d, "0.1");
    let s = &m1["stats"];
    assert_eq!(s["bounds_region"], true);
    assert_eq!(s["bautin"].as_array().unwrap().len(), 2);
    let (m2, _) = hopf_curve(&d, "0.2");
    assert!(m2["stats"]["area"].as_f64().unwrap() < s["area"].as_f64().unwrap());
    let j: Value = serde_json::from_str(&read(&o1, "hopf_curve.json")).unwrap();
    assert_eq!(j["branch"]["labels"], serde_json::json!(["c_no", "c_nop", "tau", "K_c"]));
    assert!(read(&o1, "hopf_curve.csv").starts_with("c_no,c_nop,tau,K_c,"));
}

#[test]
fn missing_hopf_point_is_an_error_without_metadata() {
    let d = TempDir::new().unwrap();
    let o = out(&d, "none");
    let r = phosdyn(&["diagram", "--kind", "hopf2d", "--out", &o, "--set", "tau=0.5", "--range", "3.5,4.5"]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("no Hopf point"));
    assert!(!Path::new(&o).join("metadata.json").exists());
}

#[test]
fn regime_grid_layout() {
    let d = TempDir::new().unwrap();
    let o = out(&d, "g");
    ok(&["regime-grid", "--out", &o, "--p1", "tau", "--p1-values", "0.5", "--p2", "K_c", "--p2-values", "1,2,4"]);
    let (h, rows) = table(&o, "regimes.csv");
    assert_eq!(h, ["p1", "p2", "label"]);
    let labels: Vec<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(labels, ["unique-stable-eq", "unique-stable-cycle", "unique-stable-eq"]);
    // far beyond the locus nothing oscillates
    let o2 = out(&d, "far");
    ok(&["regime-grid", "--out", &o2, "--p1-values", "300", "--p2-values", "1,2.75"]);
    assert!(table(&o2, "regimes.csv").1.iter().all(|r| r[2] == "unique-stable-eq"));
    // a single cell
    let o3 = out(&d, "one");
    ok(&["regime-grid", "--out", &o3, "--p1-values", "0.01", "--p2-values", "2.75"]);
    assert_eq!(read(&o3, "regimes.csv"), "p1,p2,label\n0.01,2.75,unique-stable-cycle\n");
}

#[test]
fn single_noise_level_and_period_table() {
    let d = TempDir::new().unwrap();
    let o = out(&d, "sr");
    ok(&["sr", "--out", &o, "--set", "tau=0.5", "--set", "K_c=2.9", "--sigmas", "0.003", "--seeds", "2", "--t-end", "300"]);
    let (h, rows) = table(&o, "sr.csv");
    assert_eq!(h, ["sigma", "mean_amplitude", "stderr"]);
    assert_eq!(rows.len(), 1);

    let p = out(&d, "per");
    let args = [
        "periods", "--set", "tau=0.5", "--set", "sigma=0.003", "--values", "2.0,2.5", "--n-traj", "3", "--t-end", "800", "--band",
        "cycle",
    ];
    ok(&[&args[..], &["--out", &p]].concat());
    let (h, rows) = table(&p, "periods.csv");
    assert_eq!(h, ["param", "mean_period", "cv", "n_periods", "up", "down"]);
    let per = col(&h, &rows, "mean_period");
    let cv = col(&h, &rows, "cv");
    assert!(per.iter().all(|&t| t > 20.0 && t < 150.0), "{per:?}");
    assert!(cv.iter().all(|&c| c > 0.0 && c < 0.5), "{cv:?}");
    let p2 = out(&d, "per2");
    ok(&[&args[..], &["--out", &p2]].concat());
    assert_eq!(read(&p, "periods.csv"), read(&p2, "periods.csv"));
}

#[test]
fn calibration_matches_shipped_defaults() {
    let d = TempDir::new().unwrap();
    let o = out(&d, "cal");
    ok(&["calibrate", "--out", &o]);
    let shipped: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", "default.cfg"].iter().collect();
    assert_eq!(read(&o, "calibrated.cfg"), fs::read_to_string(shipped).unwrap());
    let c: Value = serde_json::from_str(&read(&o, "calibration.json")).unwrap();
    assert_eq!(c["chosen"]["m"], 4.0);
    // a scan that cannot succeed writes its log and fails
    let o2 = out(&d, "none");
    let r = phosdyn(&["calibrate", "--out", &o2, "--m", "1,2"]);
    assert!(!r.status.success());
    assert!(Path::new(&o2).join("calibration.json").exists());
    assert!(!Path::new(&o2).join("calibrated.cfg").exists());
}

#[test]
fn no_temporary_files_remain() {
    let d = TempDir::new().unwrap();
    let o = out(&d, "t");
    ok(&["nullclines", "--out", &o]);
    assert!(files(&o).iter().all(|f| !f.starts_with('.')));
}
