#![no_main]

use libfuzzer_sys::fuzz_target;
use phosdyn::io::{parse_trajectory_csv, trajectory_csv};

fn same(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x == y || (x.is_nan() && y.is_nan()))
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(f) = parse_trajectory_csv(text, "fuzz") else { return };
    let cols: Vec<&str> = f.columns.iter().map(String::as_str).collect();
    let written = trajectory_csv(&f.traj, &cols, &[]).expect("parsed file writes back");
    let back = parse_trajectory_csv(&written, "rt").expect("written file parses");
    assert_eq!(back.columns, f.columns);
    assert!(same(&back.traj.times, &f.traj.times));
    assert!(same(&back.traj.data, &f.traj.data));
});
