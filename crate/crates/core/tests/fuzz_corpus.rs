//! Replays the fuzz corpus seeds through the properties the fuzz targets
//! check, so the seeds stay meaningful without a fuzzing toolchain.

use std::fs;
use std::path::PathBuf;

use phosdyn::config::parse_kv;
use phosdyn::continuation::BifurcationDiagram;
use phosdyn::io::{parse_trajectory_csv, trajectory_csv};
use phosdyn::ModelParams;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fuzz", "corpus", target].iter().collect();
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn config_seeds() {
    let mut accepted = 0;
    for (name, text) in seeds("config") {
        let Ok(file) = parse_kv(&text, &name) else { continue };
        if let Ok(p) = ModelParams::from_kv(&file) {
            assert_eq!(ModelParams::parse_config(&p.to_config_string(), "rt").unwrap(), p, "{name}");
            accepted += 1;
        }
    }
    assert!(accepted >= 3);
}

#[test]
fn default_config_seed_is_the_default() {
    let text = fs::read_to_string(
        [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", "default.cfg"].iter().collect::<PathBuf>(),
    )
    .unwrap();
    assert_eq!(ModelParams::parse_config(&text, "default.cfg").unwrap(), ModelParams::default());
}

#[test]
fn trajectory_seeds() {
    let mut accepted = 0;
    for (name, text) in seeds("trajectory_csv") {
        let Ok(f) = parse_trajectory_csv(&text, &name) else { continue };
        let cols: Vec<&str> = f.columns.iter().map(String::as_str).collect();
        let back = parse_trajectory_csv(&trajectory_csv(&f.traj, &cols, &[]).unwrap(), "rt").unwrap();
        assert_eq!(back.columns, f.columns);
        assert_eq!(back.traj.times, f.traj.times);
        let same = back.traj.data.iter().zip(&f.traj.data).all(|(a, b)| a == b || (a.is_nan() && b.is_nan()));
        assert!(same, "{name}");
        accepted += 1;
    }
    assert!(accepted >= 3);
}

#[test]
fn diagram_seeds() {
    let mut accepted = 0;
    for (name, text) in seeds("diagram_json") {
        if let Ok(d) = BifurcationDiagram::from_json(&text) {
            let again = BifurcationDiagram::from_json(&d.to_json()).unwrap();
            assert_eq!(again.branches().count(), d.branches().count(), "{name}");
            accepted += 1;
        }
    }
    assert_eq!(accepted, 1);
}
