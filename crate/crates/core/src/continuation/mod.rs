//! Pseudo-arclength continuation of equilibria, Hopf curves, limit cycles
//! and folds of limit cycles, with bifurcation detection and one-parameter
//! diagram assembly.

pub mod cycle;
pub mod diagram;
pub mod engine;
pub mod equilibrium;
pub mod hopf;
pub mod lyapunov;

use serde::{Deserialize, Serialize};

use crate::model::Param;

pub use cycle::{continue_cycle, continue_cycle_fold_curve, cycle_from_simulation, CycleSolution};
pub use diagram::{diagram_1d, BifurcationDiagram};
pub use engine::StepConfig;
pub use equilibrium::continue_equilibrium;
pub use hopf::{continue_hopf_curve, CodimTwoPoint, HopfCurve};
pub use lyapunov::{first_lyapunov, first_lyapunov_field, CubicNormalForm, PlanarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchKind {
    Equilibrium,
    HopfCurve,
    Cycle,
    CycleFoldCurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Hopf,
    Fold,
    Bautin,
    CycleFold,
    HopfEndpoint,
    HopfFoldInteraction,
    ClosedCurve,
    Truncated,
}

/// Cycle data attached to points of cycle branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleInfo {
    pub period: f64,
    pub multiplier: f64,
    pub c_no_min: f64,
    pub c_no_max: f64,
}

impl CycleInfo {
    pub fn amplitude(&self) -> f64 {
        self.c_no_max - self.c_no_min
    }

    pub fn stable(&self) -> bool {
        self.multiplier.abs() < 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    /// Augmented solution vector; layout given by `Branch::labels`.
    pub u: Vec<f64>,
    pub stable: Option<bool>,
    /// Test-function values; names in `Branch::test_labels`.
    pub tests: Vec<f64>,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cycle: Option<CycleInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    /// Index of the branch point after which the event lies.
    pub index: usize,
    pub u: Vec<f64>,
    pub tests: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cycle: Option<CycleInfo>,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub kind: BranchKind,
    pub free: Vec<Param>,
    pub labels: Vec<String>,
    pub test_labels: Vec<String>,
    pub points: Vec<BranchPoint>,
    pub events: Vec<Event>,
    pub diagnostics: Vec<String>,
}

impl Branch {
    /// Index of a named component of `u`.
    pub fn column(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn values(&self, label: &str) -> Vec<f64> {
        match self.column(label) {
            Some(i) => self.points.iter().map(|p| p.u[i]).collect(),
            None => Vec::new(),
        }
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Flat CSV: one row per point with `u`, tests, stability and cycle data.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        let mut header: Vec<String> = self.labels.clone();
        header.extend(self.test_labels.iter().cloned());
        header.extend(["stable", "residual", "period", "multiplier", "c_no_min", "c_no_max"].map(String::from));
        let _ = writeln!(s, "{}", header.join(","));
        for p in &self.points {
            let mut row: Vec<String> = p.u.iter().map(|v| format!("{v:?}")).collect();
            row.extend(p.tests.iter().map(|v| format!("{v:?}")));
            row.push(match p.stable {
                Some(true) => "1".into(),
                Some(false) => "0".into(),
                None => String::new(),
            });
            row.push(format!("{:?}", p.residual));
            match p.cycle {
                Some(c) => row.extend([c.period, c.multiplier, c.c_no_min, c.c_no_max].map(|v| format!("{v:?}"))),
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }
}
