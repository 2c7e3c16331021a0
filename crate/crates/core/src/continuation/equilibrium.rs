//! One-parameter continuation of equilibria of the reduced system.

use nalgebra::DMatrix;

use super::engine::{continue_from, correct, refine, RawBranch, RawPoint, StepConfig, Stop};
use super::engine::Problem;
use super::lyapunov::{first_lyapunov_field, HOPF_TRACE_TOL};
use super::{Branch, BranchKind, BranchPoint, Event, EventKind};
use crate::error::{Error, Result};
use crate::model::{jacobian_reduced_arr, rhs_reduced_arr, ModelParams, Param, ReducedState};

/// Test-function tolerance for refined Hopf and fold points.
pub const EVENT_TOL: f64 = 1e-10;

pub(crate) struct EquilibriumProblem {
    pub p: ModelParams,
    pub free: Param,
    pub scale: [f64; 3],
}

impl EquilibriumProblem {
    fn at(&self, u: &[f64]) -> ModelParams {
        self.p.with(self.free, u[2])
    }
}

pub(crate) fn trace_det(j: [[f64; 2]; 2]) -> (f64, f64) {
    (j[0][0] + j[1][1], j[0][0] * j[1][1] - j[0][1] * j[1][0])
}

impl Problem for EquilibriumProblem {
    fn dim(&self) -> usize {
        3
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let f = rhs_reduced_arr([u[0], u[1]], &self.at(u));
        Ok(f.to_vec())
    }

    fn jacobian(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        let j = jacobian_reduced_arr([u[0], u[1]], &self.at(u));
        let h = 1e-7 * u[2].abs().max(1e-3);
        let fp = rhs_reduced_arr([u[0], u[1]], &self.p.with(self.free, u[2] + h));
        let fm = rhs_reduced_arr([u[0], u[1]], &self.p.with(self.free, u[2] - h));
        Ok(DMatrix::from_row_slice(
            2,
            3,
            &[
                j[0][0],
                j[0][1],
                (fp[0] - fm[0]) / (2.0 * h),
                j[1][0],
                j[1][1],
                (fp[1] - fm[1]) / (2.0 * h),
            ],
        ))
    }

    fn tests(&self, u: &[f64]) -> Result<Vec<f64>> {
        let (tr, det) = trace_det(jacobian_reduced_arr([u[0], u[1]], &self.at(u)));
        Ok(vec![tr, det])
    }

    fn scale(&self) -> Vec<f64> {
        self.scale.to_vec()
    }

    fn admissible(&self, u: &[f64]) -> bool {
        u.iter().all(|v| v.is_finite()) && u[0] + u[1] > 0.0 && (self.free != Param::Tau || u[2] > 0.0)
    }
}

fn branch_point(raw: &RawPoint) -> BranchPoint {
    let (tr, det) = (raw.tests[0], raw.tests[1]);
    BranchPoint {
        u: raw.u.clone(),
        stable: Some(tr < 0.0 && det > 0.0),
        tests: raw.tests.clone(),
        residual: raw.residual,
        cycle: None,
    }
}

/// Join a backward and a forward run from the same start point.
pub(crate) fn join(back: RawBranch, fwd: RawBranch) -> (Vec<RawPoint>, Vec<String>) {
    let mut diag = Vec::new();
    for (name, b) in [("backward", &back), ("forward", &fwd)] {
        if let Stop::Truncated(msg) = &b.stop {
            diag.push(format!("{name} run truncated: {msg}"));
        }
        if b.stop == Stop::MaxPoints {
            diag.push(format!("{name} run hit the point limit"));
        }
    }
    let mut pts: Vec<RawPoint> = back.points.into_iter().rev().collect();
    pts.extend(fwd.points.into_iter().skip(1));
    (pts, diag)
}

/// Continue the equilibrium `start` of `params` (at the current value of
/// `free`) across `range` in both directions.
pub fn continue_equilibrium(
    params: &ModelParams,
    free: Param,
    range: (f64, f64),
    start: ReducedState,
    cfg: &StepConfig,
) -> Result<Branch> {
    let (lo, hi) = range;
    if !(lo < hi) {
        return Err(Error::Precondition(format!("empty range [{lo}, {hi}]")));
    }
    let lam0 = params.get(free);
    if !(lo..=hi).contains(&lam0) {
        return Err(Error::Precondition(format!("{} = {lam0} outside [{lo}, {hi}]", free.name())));
    }
    let pb = EquilibriumProblem {
        p: *params,
        free,
        scale: [start.total().max(1.0), start.total().max(1.0), ((hi - lo) / 10.0).max(1e-12)],
    };
    let u0 = [start.c_no, start.c_nop, lam0];
    // polish at fixed parameter
    let (u0, _) = correct(&pb, &u0, &[0.0, 0.0, 1.0], cfg)?;
    let out = move |u: &[f64]| u[2] < lo || u[2] > hi;
    let fwd = continue_from(&pb, &u0, &[0.0, 0.0, 1.0], cfg, &out)?;
    let back = continue_from(&pb, &u0, &[0.0, 0.0, -1.0], cfg, &out)?;
    let (mut raw, diagnostics) = join(back, fwd);
    clip_ends(&pb, &mut raw, lo, hi, cfg);

    let mut branch = Branch {
        kind: BranchKind::Equilibrium,
        free: vec![free],
        labels: vec!["c_no".into(), "c_nop".into(), free.name().into()],
        test_labels: vec!["trace".into(), "det".into()],
        points: raw.iter().map(branch_point).collect(),
        events: Vec::new(),
        diagnostics,
    };
    branch.events = detect_events(&pb, &raw, cfg);
    Ok(branch)
}

/// Replace end points beyond the range by the solution on the boundary.
fn clip_ends(pb: &EquilibriumProblem, raw: &mut Vec<RawPoint>, lo: f64, hi: f64, cfg: &StepConfig) {
    let fix = |a: &RawPoint, b: &RawPoint| -> Option<RawPoint> {
        let bound = if b.u[2] > hi { hi } else if b.u[2] < lo { lo } else { return None };
        let s = (bound - a.u[2]) / (b.u[2] - a.u[2]);
        let pred: Vec<f64> = a.u.iter().zip(&b.u).map(|(x, y)| x + s * (y - x)).collect();
        let (u, res) = correct(pb, &pred, &[0.0, 0.0, 1.0], cfg).ok()?;
        let tests = pb.tests(&u).ok()?;
        Some(RawPoint { u, tests, residual: res })
    };
    let n = raw.len();
    if n >= 2 {
        if let Some(p) = fix(&raw[n - 2], &raw[n - 1]) {
            raw[n - 1] = p;
        }
        if let Some(p) = fix(&raw[1], &raw[0]) {
            raw[0] = p;
        }
    }
}

fn detect_events(pb: &EquilibriumProblem, raw: &[RawPoint], cfg: &StepConfig) -> Vec<Event> {
    let mut events = Vec::new();
    for (i, w) in raw.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        if (a.tests[1] < 0.0) != (b.tests[1] < 0.0) {
            events.push(refined_event(pb, a, b, i, 1, EventKind::Fold, cfg));
        }
        if (a.tests[0] < 0.0) != (b.tests[0] < 0.0) && a.tests[1] > 0.0 && b.tests[1] > 0.0 {
            events.push(refined_event(pb, a, b, i, 0, EventKind::Hopf, cfg));
        }
    }
    events
}

fn refined_event(
    pb: &EquilibriumProblem,
    a: &RawPoint,
    b: &RawPoint,
    index: usize,
    k: usize,
    kind: EventKind,
    cfg: &StepConfig,
) -> Event {
    let (pt, ok, note) = match refine(pb, a, b, k, EVENT_TOL, cfg) {
        Ok((pt, true)) => (pt, true, String::new()),
        Ok((pt, false)) => {
            let note = format!("refinement stalled at |test| = {:e}", pt.tests[k].abs());
            (pt, false, note)
        }
        Err(e) => (a.clone(), false, format!("refinement failed: {e}")),
    };
    let l1 = if kind == EventKind::Hopf && ok && pt.tests[0].abs() <= HOPF_TRACE_TOL {
        first_lyapunov_field(&pb.at(&pt.u), [pt.u[0], pt.u[1]]).ok()
    } else {
        None
    };
    Event {
        kind,
        index,
        u: pt.u,
        tests: pt.tests,
        l1,
        cycle: None,
        note,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::equilibria;

    fn start(p: &ModelParams) -> ReducedState {
        equilibria(p)[0].state
    }

    #[test]
    fn window_at_small_tau_has_two_hopf_points() {
        let p = ModelParams::default().with(Param::Kc, 0.5);
        let br = continue_equilibrium(&p, Param::Kc, (0.5, 6.0), start(&p), &StepConfig::default()).unwrap();
        let hopf: Vec<&Event> = br.events_of(EventKind::Hopf).collect();
        assert_eq!(hopf.len(), 2, "{:?}", br.events);
        for e in hopf {
            assert!(e.tests[0].abs() <= 1e-8 && e.tests[1] > 0.0);
            assert!(e.l1.is_some());
        }
        for pt in &br.points {
            assert!(pt.residual <= 1e-9);
        }
        let kc = br.values("K_c");
        assert!((kc[0] - 0.5).abs() < 1e-12 && (kc[kc.len() - 1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn no_sign_change_no_hopf() {
        let p = ModelParams::default().with(Param::Kc, 8.0);
        let br = continue_equilibrium(&p, Param::Kc, (8.0, 10.0), start(&p), &StepConfig::default()).unwrap();
        assert_eq!(br.events_of(EventKind::Hopf).count(), 0);
        assert!(br.points.iter().all(|q| q.stable == Some(true)));
    }
}
