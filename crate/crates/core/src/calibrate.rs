//! Search for the constants the model leaves open (`m`, `m_sca`, `k_vn`,
//! `k_vcy`, `A_cyto`, `A_n`).
//!
//! A candidate is accepted when, at the reference point `K_c = 2.75`,
//! `tau = 0.01`, `k_nt = 0.1`, the quasi-steady fraction relation has three
//! roots on an interval of totals at least `min_ratio` wide (as `hi / lo`)
//! and a simulation settles on a limit cycle. Exponents are tried in
//! increasing order (`m_sca = m`), then the rate constants in grid order;
//! the first hit wins.
//!
//! The default grid holds only the shipped rate constants, which were fixed
//! by comparing bifurcation structure at other parameter points; pass a
//! wider grid to explore.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::integrate::{integrate_ode, reduced_field, SolverConfig};
use crate::model::{quasi_steady_fractions, ModelParams};
use crate::phase::{default_probes, oscillation_of, RegimeOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationGrid {
    pub m: Vec<f64>,
    pub k_vn: Vec<f64>,
    pub k_vcy: Vec<f64>,
    pub a_cyto: Vec<f64>,
    pub a_n: Vec<f64>,
    pub min_ratio: f64,
}

impl Default for CalibrationGrid {
    fn default() -> Self {
        Self {
            m: (1..=8).map(f64::from).collect(),
            k_vn: vec![0.04],
            k_vcy: vec![0.9],
            a_cyto: vec![0.01],
            a_n: vec![0.01],
            min_ratio: 2.0,
        }
    }
}

/// Reference point of the scan.
pub fn reference(base: &ModelParams) -> ModelParams {
    ModelParams { k_c: 2.75, tau: 0.01, k_nt: 0.1, sigma: 0.0, ..*base }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub params: ModelParams,
    /// Totals with three quasi-steady roots, if any.
    pub bistable: Option<(f64, f64)>,
    /// `(amplitude, period)` of the settled oscillation, if any.
    pub cycle: Option<(f64, f64)>,
}

impl Candidate {
    pub fn accepted(&self, min_ratio: f64) -> bool {
        self.bistable.is_some_and(|(lo, hi)| hi >= min_ratio * lo) && self.cycle.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub chosen: Option<ModelParams>,
    pub tried: Vec<Candidate>,
}

impl Calibration {
    /// Config file for the chosen constants, marked as derived.
    pub fn config(&self) -> Option<String> {
        let p = self.chosen?;
        let c = self.tried.iter().find(|c| c.params == p)?;
        let (lo, hi) = c.bistable?;
        let (amp, per) = c.cycle?;
        Some(format!(
            "# Calibrated defaults: derived by `phosdyn calibrate`, not published values.\n\
             # Reference point K_c = 2.75, tau = 0.01, k_nt = 0.1.\n\
             # Three quasi-steady roots for totals in [{lo:.6}, {hi:.6}];\n\
             # limit cycle with c_no amplitude {amp:.4} and period {per:.3}.\n{}",
            p.to_config_string()
        ))
    }
}

/// Smallest and largest total (on a log grid up to `1/A_cyto`) at which the
/// quasi-steady relation has three roots.
pub fn bistable_totals(p: &ModelParams, n: usize) -> Option<(f64, f64)> {
    let (lo, hi) = (1e-3_f64, 1.0 / p.a_cyto);
    let mut hit: Option<(f64, f64)> = None;
    for i in 0..=n {
        let t = lo * (hi / lo).powf(i as f64 / n as f64);
        if quasi_steady_fractions(t, p).map(|r| r.len() >= 3).unwrap_or(false) {
            hit = Some(hit.map_or((t, t), |(a, _)| (a, t)));
        }
    }
    hit
}

/// Oscillation reached from a fixed probe after a long transient.
pub fn settled_cycle(p: &ModelParams) -> Result<Option<(f64, f64)>> {
    let (t_tr, t_obs, n) = (1000.0, 700.0, 4000usize);
    let times: Vec<f64> = (0..=n).map(|i| t_tr + t_obs * i as f64 / n as f64).collect();
    let cfg = SolverConfig { t_end: t_tr + t_obs, output_times: Some(times), ..Default::default() };
    let tr = match integrate_ode(reduced_field(p), default_probes(p)[4].to_array(), &cfg) {
        Ok(tr) => tr,
        Err(_) => return Ok(None),
    };
    Ok(oscillation_of(&tr.times, &tr.component(0), &RegimeOptions::default()))
}

pub fn calibrate(base: &ModelParams, grid: &CalibrationGrid) -> Result<Calibration> {
    let mut tried = Vec::new();
    for &m in &grid.m {
        for &k_vn in &grid.k_vn {
            for &k_vcy in &grid.k_vcy {
                for &a_cyto in &grid.a_cyto {
                    for &a_n in &grid.a_n {
                        let p = ModelParams { m, m_sca: m, k_vn, k_vcy, a_cyto, a_n, ..reference(base) };
                        if p.validate().is_err() {
                            continue;
                        }
                        let bistable = bistable_totals(&p, 400);
                        let cycle = if bistable.is_some() { settled_cycle(&p)? } else { None };
                        let c = Candidate { params: p, bistable, cycle };
                        let done = c.accepted(grid.min_ratio);
                        tried.push(c);
                        if done {
                            return Ok(Calibration { chosen: Some(p), tried });
                        }
                    }
                }
            }
        }
    }
    Ok(Calibration { chosen: None, tried })
}
