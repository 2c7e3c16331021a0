//! Two-parameter continuation of Hopf points: `F(x; p1, p2) = 0`,
//! `tr J(x; p1, p2) = 0`, monitoring `det J` and `l1`.

use serde::{Deserialize, Serialize};

use super::engine::{continue_from, correct, refine, tangent, Problem, RawPoint, StepConfig, Stop};
use super::equilibrium::{join, trace_det};
use super::lyapunov::first_lyapunov_unchecked;
use super::{Branch, BranchKind, BranchPoint, Event, EventKind};
use crate::error::{Error, Result};
use crate::model::{jacobian_reduced_arr, rhs_reduced_arr, ModelParams, Param};

/// Refinement target for Bautin points.
pub const BAUTIN_TOL: f64 = 1e-6;

struct HopfProblem {
    p: ModelParams,
    free: [Param; 2],
    scale: [f64; 4],
}

impl HopfProblem {
    fn at(&self, u: &[f64]) -> ModelParams {
        self.p.with(self.free[0], u[2]).with(self.free[1], u[3])
    }
}

impl Problem for HopfProblem {
    fn dim(&self) -> usize {
        4
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let p = self.at(u);
        let x = [u[0], u[1]];
        let f = rhs_reduced_arr(x, &p);
        let (tr, _) = trace_det(jacobian_reduced_arr(x, &p));
        Ok(vec![f[0], f[1], tr])
    }

    fn tests(&self, u: &[f64]) -> Result<Vec<f64>> {
        let p = self.at(u);
        let x = [u[0], u[1]];
        let (_, det) = trace_det(jacobian_reduced_arr(x, &p));
        let l1 = if det > 0.0 { first_lyapunov_unchecked(&p, x).unwrap_or(f64::NAN) } else { f64::NAN };
        Ok(vec![det, l1])
    }

    fn scale(&self) -> Vec<f64> {
        self.scale.to_vec()
    }

    fn admissible(&self, u: &[f64]) -> bool {
        u.iter().all(|v| v.is_finite())
            && u[0] + u[1] > 0.0
            && self.free.iter().zip(&u[2..]).all(|(f, v)| !matches!(f, Param::Tau | Param::Kc) || *v > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodimTwoKind {
    Bautin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodimTwoPoint {
    pub kind: CodimTwoKind,
    pub params: [f64; 2],
    pub state: [f64; 2],
    pub l1: f64,
    pub trace: f64,
    pub det: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfCurve {
    pub branch: Branch,
    pub bautin: Vec<CodimTwoPoint>,
    /// True if the curve returned to its start point.
    pub closed: bool,
    /// How each end terminated: `closed`, `boundary`, `hopf-fold`,
    /// `truncated` or `max-points`.
    pub ends: [String; 2],
}

impl HopfCurve {
    /// Whether the locus bounds a region of the parameter box: it closes on
    /// itself or both ends leave through the box boundary.
    pub fn bounds_region(&self) -> bool {
        self.closed || self.ends.iter().all(|e| e == "boundary")
    }

    /// Area enclosed in the `(p1, p2)` plane; an open curve is closed by the
    /// straight segment between its end points.
    pub fn enclosed_area(&self) -> f64 {
        let a = self.branch.values(self.branch.free[0].name());
        let b = self.branch.values(self.branch.free[1].name());
        let n = a.len();
        let mut s = 0.0;
        for i in 0..n {
            let j = (i + 1) % n;
            s += a[i] * b[j] - a[j] * b[i];
        }
        0.5 * s.abs()
    }

    /// Values of `p2` where the curve crosses `p1 = v`, sorted.
    pub fn crossings(&self, v: f64) -> Vec<f64> {
        let a = self.branch.values(self.branch.free[0].name());
        let b = self.branch.values(self.branch.free[1].name());
        let mut out = Vec::new();
        for i in 0..a.len().saturating_sub(1) {
            if (a[i] - v) * (a[i + 1] - v) <= 0.0 && a[i] != a[i + 1] {
                let s = (v - a[i]) / (a[i + 1] - a[i]);
                out.push(b[i] + s * (b[i + 1] - b[i]));
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

fn stop_name(s: &Stop, hopf_fold: bool) -> String {
    match s {
        _ if hopf_fold => "hopf-fold".into(),
        Stop::Closed => "closed".into(),
        Stop::Boundary => "boundary".into(),
        Stop::MaxPoints => "max-points".into(),
        Stop::Truncated(_) => "truncated".into(),
    }
}

/// Continue the Hopf point `seed` of `params` in the plane of `free`,
/// within `bounds` (one interval per parameter).
pub fn continue_hopf_curve(
    params: &ModelParams,
    free: (Param, Param),
    seed: [f64; 2],
    bounds: [(f64, f64); 2],
    cfg: &StepConfig,
) -> Result<HopfCurve> {
    let (p1, p2) = free;
    let total = (seed[0] + seed[1]).max(1.0);
    let pb = HopfProblem {
        p: *params,
        free: [p1, p2],
        scale: [
            total,
            total,
            ((bounds[0].1 - bounds[0].0) / 10.0).max(1e-12),
            ((bounds[1].1 - bounds[1].0) / 10.0).max(1e-12),
        ],
    };
    let u0 = [seed[0], seed[1], params.get(p1), params.get(p2)];
    let (u0, _) = correct(&pb, &u0, &[0.0, 0.0, 1.0, 0.0], cfg)?;
    let (_, det0) = trace_det(jacobian_reduced_arr([u0[0], u0[1]], &pb.at(&u0)));
    if det0 <= 0.0 {
        return Err(Error::Precondition(format!("seed is not a Hopf point: det J = {det0:e}")));
    }
    let outside = |u: &[f64]| {
        let (_, det) = trace_det(jacobian_reduced_arr([u[0], u[1]], &pb.at(u)));
        u[2] < bounds[0].0 || u[2] > bounds[0].1 || u[3] < bounds[1].0 || u[3] > bounds[1].1 || det <= 0.0
    };
    let t0 = tangent(&pb, &u0, &[0.0, 0.0, 1.0, 0.0])?;
    let fwd = continue_from(&pb, &u0, &t0, cfg, &outside)?;
    let fwd_end = end_kind(&fwd.points, &fwd.stop);
    let (raw, diagnostics, closed, ends) = if fwd.stop == Stop::Closed {
        let mut pts = fwd.points;
        pts.pop();
        (pts, Vec::new(), true, ["closed".to_string(), "closed".to_string()])
    } else {
        let neg: Vec<f64> = t0.iter().map(|v| -v).collect();
        let back = continue_from(&pb, &u0, &neg, cfg, &outside)?;
        let back_end = end_kind(&back.points, &back.stop);
        let (pts, diag) = join(back, fwd);
        (pts, diag, false, [back_end, fwd_end])
    };

    let mut events = Vec::new();
    let mut bautin = Vec::new();
    for (i, w) in raw.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        let (la, lb) = (a.tests[1], b.tests[1]);
        if la.is_finite() && lb.is_finite() && (la < 0.0) != (lb < 0.0) {
            let (pt, ok) = match refine(&pb, a, b, 1, BAUTIN_TOL, cfg) {
                Ok(r) => r,
                Err(_) => (if la.abs() < lb.abs() { a.clone() } else { b.clone() }, false),
            };
            let x = [pt.u[0], pt.u[1]];
            let (tr, det) = trace_det(jacobian_reduced_arr(x, &pb.at(&pt.u)));
            bautin.push(CodimTwoPoint {
                kind: CodimTwoKind::Bautin,
                params: [pt.u[2], pt.u[3]],
                state: x,
                l1: pt.tests[1],
                trace: tr,
                det,
            });
            events.push(Event {
                kind: EventKind::Bautin,
                index: i,
                u: pt.u.clone(),
                tests: pt.tests.clone(),
                l1: Some(pt.tests[1]),
                cycle: None,
                note: if ok { String::new() } else { format!("refinement stalled at |l1| = {:e}", pt.tests[1].abs()) },
            });
        }
    }
    for (k, end) in ends.iter().enumerate() {
        let pt = if k == 0 { &raw[0] } else { &raw[raw.len() - 1] };
        let kind = match end.as_str() {
            "hopf-fold" => EventKind::HopfFoldInteraction,
            "truncated" | "max-points" => EventKind::Truncated,
            _ => continue,
        };
        events.push(Event {
            kind,
            index: if k == 0 { 0 } else { raw.len() - 1 },
            u: pt.u.clone(),
            tests: pt.tests.clone(),
            l1: None,
            cycle: None,
            note: String::new(),
        });
    }
    if closed {
        events.push(Event {
            kind: EventKind::ClosedCurve,
            index: raw.len() - 1,
            u: raw[raw.len() - 1].u.clone(),
            tests: raw[raw.len() - 1].tests.clone(),
            l1: None,
            cycle: None,
            note: String::new(),
        });
    }

    let branch = Branch {
        kind: BranchKind::HopfCurve,
        free: vec![p1, p2],
        labels: vec!["c_no".into(), "c_nop".into(), p1.name().into(), p2.name().into()],
        test_labels: vec!["det".into(), "l1".into()],
        points: raw
            .iter()
            .map(|r| BranchPoint {
                u: r.u.clone(),
                stable: None,
                tests: r.tests.clone(),
                residual: r.residual,
                cycle: None,
            })
            .collect(),
        events,
        diagnostics,
    };
    Ok(HopfCurve { branch, bautin, closed, ends })
}

fn end_kind(pts: &[RawPoint], stop: &Stop) -> String {
    let hopf_fold = *stop == Stop::Boundary && pts.last().is_some_and(|p| p.tests[0] <= 0.0);
    stop_name(stop, hopf_fold)
}

/// First Hopf point met when continuing the equilibrium `start` of `params`
/// along `free` over `range`.
pub fn find_hopf_seed(
    params: &ModelParams,
    free: Param,
    range: (f64, f64),
    cfg: &StepConfig,
) -> Result<Option<(ModelParams, [f64; 2])>> {
    let mut p = *params;
    p.set(free, range.0);
    for eq in crate::phase::equilibria(&p) {
        let br = super::continue_equilibrium(&p, free, range, eq.state, cfg)?;
        let hit = br.events_of(EventKind::Hopf).find(|e| e.tests[0].abs() <= 1e-8).map(|e| e.u.clone());
        if let Some(u) = hit {
            return Ok(Some((p.with(free, u[2]), [u[0], u[1]])));
        }
    }
    Ok(None)
}
