//! One-parameter bifurcation diagrams: equilibrium branches plus the cycle
//! branches born at their Hopf points.

use serde::{Deserialize, Serialize};

use super::cycle::{continue_cycle, cycle_from_hopf};
use super::engine::StepConfig;
use super::equilibrium::continue_equilibrium;
use super::{Branch, EventKind};
use crate::error::Result;
use crate::model::{ModelParams, Param};
use crate::phase::equilibria;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDiagram {
    pub params: ModelParams,
    pub free: Param,
    pub range: (f64, f64),
    pub equilibria: Vec<Branch>,
    pub cycles: Vec<Branch>,
    pub diagnostics: Vec<String>,
}

impl BifurcationDiagram {
    pub fn branches(&self) -> impl Iterator<Item = &Branch> {
        self.equilibria.iter().chain(&self.cycles)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diagram serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| crate::Error::Config(format!("diagram JSON: {e}")))
    }
}

/// Parameter value where the squared amplitude, extrapolated linearly from
/// the last two points of a cycle branch, reaches zero.
pub fn extrapolated_onset(b: &Branch) -> Option<f64> {
    let n = b.points.len();
    let [a, c] = [b.points.get(n.checked_sub(2)?)?, b.points.get(n - 1)?];
    let (s0, s1) = (a.cycle?.amplitude().powi(2), c.cycle?.amplitude().powi(2));
    if !(s1 < s0) {
        return None;
    }
    let (p0, p1) = (a.u[3], c.u[3]);
    Some(p1 - s1 * (p1 - p0) / (s1 - s0))
}

/// A run that broke down on small cycles next to a Hopf point ends there:
/// relabel its truncated end when the amplitude extrapolates to zero within
/// 1% of the range from a known Hopf value.
fn close_at_hopf(c: &mut Branch, hopf: &[f64], range: (f64, f64)) {
    let last = c.points.len().saturating_sub(1);
    let tol = 1e-2 * (range.1 - range.0).abs();
    let Some(onset) = extrapolated_onset(c) else { return };
    let Some(&h) = hopf.iter().find(|&&h| (onset - h).abs() <= tol && (c.points[last].u[3] - h).abs() <= 5.0 * tol) else {
        return;
    };
    for e in c.events.iter_mut().filter(|e| e.kind == EventKind::Truncated && e.index == last) {
        e.kind = EventKind::HopfEndpoint;
        e.note = format!("hopf-endpoint: amplitude extrapolates to zero at {onset}, Hopf at {h}; {}", e.note);
    }
}

/// Relative offset of the cycle predictor from a Hopf point.
pub const HOPF_SEED_EPS: f64 = 1e-3;

pub fn diagram_1d(params: &ModelParams, free: Param, range: (f64, f64), cfg: &StepConfig) -> Result<BifurcationDiagram> {
    let p0 = params.with(free, range.0);
    let mut eq_branches: Vec<Branch> = Vec::new();
    let mut diagnostics = Vec::new();
    for eq in equilibria(&p0) {
        let x = eq.state.to_array();
        let known = eq_branches.iter().any(|b| {
            b.points.iter().any(|q| {
                (q.u[2] - range.0).abs() <= 1e-9 * range.0.abs().max(1.0)
                    && (q.u[0] - x[0]).hypot(q.u[1] - x[1]) <= 1e-6 * (x[0] + x[1]).max(1.0)
            })
        });
        if known {
            continue;
        }
        eq_branches.push(continue_equilibrium(&p0, free, range, eq.state, cfg)?);
    }

    let hopf: Vec<f64> = eq_branches
        .iter()
        .flat_map(|b| b.events_of(EventKind::Hopf).map(|e| e.u[2]))
        .collect();
    let mut cycles: Vec<Branch> = Vec::new();
    for br in &eq_branches {
        for ev in br.events_of(EventKind::Hopf) {
            let lam = ev.u[2];
            let tol = 1e-2 * lam.abs().max(1e-3);
            let done = cycles.iter().any(|c| {
                c.events_of(EventKind::HopfEndpoint)
                    .any(|e| (e.u[3] - lam).abs() <= tol)
            });
            if done {
                continue;
            }
            let ph = params.with(free, lam);
            match cycle_from_hopf(&ph, free, [ev.u[0], ev.u[1]], HOPF_SEED_EPS)
                .and_then(|(pc, seed)| continue_cycle(&pc, free, range, &seed, cfg))
            {
                Ok(mut c) => {
                    close_at_hopf(&mut c, &hopf, range);
                    cycles.push(c)
                }
                Err(e) => diagnostics.push(format!("cycle from Hopf at {} = {lam}: {e}", free.name())),
            }
        }
    }
    Ok(BifurcationDiagram {
        params: *params,
        free,
        range,
        equilibria: eq_branches,
        cycles,
        diagnostics,
    })
}
