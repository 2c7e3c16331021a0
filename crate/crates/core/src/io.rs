//! Trajectory CSV: a `t` column followed by one column per state component.
//!
//! Values are written in shortest round-trip form, so reading a written file
//! gives back the same bits.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::integrate::{Trajectory, TrajectoryMeta};

pub const REDUCED_COLUMNS: [&str; 2] = ["c_no", "c_nop"];
pub const FULL_COLUMNS: [&str; 7] = ["c_no", "c_nop", "c_ni", "c_cy", "Phi", "V_n", "V_cyto"];

/// Extra column appended after the state columns.
pub struct Derived<'a> {
    pub name: &'a str,
    pub f: &'a dyn Fn(&[f64]) -> f64,
}

pub fn trajectory_csv(traj: &Trajectory, columns: &[&str], derived: &[Derived]) -> Result<String> {
    if columns.len() != traj.dim {
        return Err(Error::Precondition(format!(
            "{} column names for a {}-dimensional trajectory",
            columns.len(),
            traj.dim
        )));
    }
    let mut s = String::with_capacity(24 * (traj.dim + 1) * traj.len());
    s.push('t');
    for c in columns.iter().copied().chain(derived.iter().map(|d| d.name)) {
        s.push(',');
        s.push_str(c);
    }
    s.push('\n');
    for (t, x) in traj.times.iter().zip(traj.states()) {
        let _ = write!(s, "{t}");
        for v in x {
            let _ = write!(s, ",{v}");
        }
        for d in derived {
            let _ = write!(s, ",{}", (d.f)(x));
        }
        s.push('\n');
    }
    Ok(s)
}

/// A parsed trajectory file. Every column after `t` becomes a state
/// component, derived ones included.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFile {
    pub columns: Vec<String>,
    pub traj: Trajectory,
}

impl TrajectoryFile {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.traj.component(k))
    }
}

pub fn parse_trajectory_csv(text: &str, name: &str) -> Result<TrajectoryFile> {
    let err = |line: usize, msg: String| Error::Parse { file: name.to_string(), line, msg };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(err(1, "empty file".into()));
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"t") {
        return Err(err(1, "first column must be `t`".into()));
    }
    if cols.len() < 2 {
        return Err(err(1, "no state columns".into()));
    }
    if let Some(c) = cols.iter().find(|c| c.is_empty()) {
        return Err(err(1, format!("empty column name `{c}`")));
    }
    let dim = cols.len() - 1;
    let mut traj = Trajectory {
        dim,
        times: Vec::new(),
        data: Vec::new(),
        meta: TrajectoryMeta {
            solver: "csv".into(),
            rel_tol: None,
            abs_tol: None,
            dt: None,
            seed: None,
            negative_excursions: 0,
            steps: 0,
            rejected: 0,
        },
    };
    for (i, l) in lines {
        let n = i + 1;
        let fields: Vec<&str> = l.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(err(n, format!("expected {} fields, got {}", cols.len(), fields.len())));
        }
        let mut row = Vec::with_capacity(fields.len());
        for f in fields {
            let v: f64 = f.parse().map_err(|_| err(n, format!("not a number: `{f}`")))?;
            row.push(v);
        }
        let t = row[0];
        if !t.is_finite() {
            return Err(err(n, format!("non-finite time {t}")));
        }
        if traj.times.last().is_some_and(|&last| !(t > last)) {
            return Err(err(n, format!("time {t} does not increase")));
        }
        traj.times.push(t);
        traj.data.extend_from_slice(&row[1..]);
    }
    Ok(TrajectoryFile { columns: cols[1..].iter().map(|c| c.to_string()).collect(), traj })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{integrate_ode, SolverConfig};
    use proptest::prelude::*;

    #[test]
    fn round_trip_is_exact() {
        let cfg = SolverConfig::default().with_t_end(3.0);
        let tr = integrate_ode(|_, x: &[f64; 2]| Ok([x[1], -x[0]]), [1.0, 0.0], &cfg).unwrap();
        let sum = |x: &[f64]| x[0] + x[1];
        let text = trajectory_csv(&tr, &REDUCED_COLUMNS, &[Derived { name: "sum", f: &sum }]).unwrap();
        let back = parse_trajectory_csv(&text, "rt.csv").unwrap();
        assert_eq!(back.columns, ["c_no", "c_nop", "sum"]);
        assert_eq!(back.traj.times, tr.times);
        assert_eq!(back.column("c_nop").unwrap(), tr.component(1));
    }

    #[test]
    fn rejects_bad_files() {
        let e = parse_trajectory_csv("x,a\n0,1\n", "f").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = parse_trajectory_csv("t,a\n0,1\n0,2\n", "f").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
        let e = parse_trajectory_csv("t,a\n0,1,2\n", "f").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_trajectory_csv("t,a\n0,zz\n", "f").unwrap_err();
        assert!(e.to_string().contains("zz"));
        assert!(parse_trajectory_csv("", "f").is_err());
        assert!(trajectory_csv(&parse_trajectory_csv("t,a\n0,1\n", "f").unwrap().traj, &["a", "b"], &[]).is_err());
    }

    proptest! {
        #[test]
        fn parser_never_panics(s in "\\PC*") {
            let _ = parse_trajectory_csv(&s, "fuzz");
        }

        #[test]
        fn written_values_read_back(vals in proptest::collection::vec(-1e300f64..1e300, 1..40)) {
            let n = vals.len();
            let traj = Trajectory {
                dim: 1,
                times: (0..n).map(|i| i as f64 * 0.5).collect(),
                data: vals.clone(),
                meta: parse_trajectory_csv("t,a\n", "x").unwrap().traj.meta,
            };
            let back = parse_trajectory_csv(&trajectory_csv(&traj, &["a"], &[]).unwrap(), "x").unwrap();
            prop_assert_eq!(back.traj.data, vals);
        }
    }
}
