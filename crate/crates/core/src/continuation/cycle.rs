//! Limit cycles by single shooting: unknowns `(x, T, lambda)` with
//! `phi_T(x) - x = 0` and a Poincaré phase condition `<f_ref, x - x_ref> = 0`.
//!
//! For a planar field the monodromy matrix has eigenvalues `1` and `mu`, so
//! `mu = det M`.

use std::cell::{Cell, RefCell};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::engine::{continue_from, correct, refine, tangent, Problem, RawPoint, StepConfig, Stop};
use super::equilibrium::join;
use super::{Branch, BranchKind, BranchPoint, CycleInfo, Event, EventKind};
use crate::error::{Error, Result};
use crate::integrate::{flow, integrate_ode, reduced_field, SolverConfig};
use crate::model::{jacobian_reduced_arr, rhs_reduced_arr, ModelParams, Param};
use crate::phase::{oscillation_of, peaks, RegimeOptions};

/// Tolerances of the shooting integrations.
pub const SHOOT_RTOL: f64 = 1e-11;
pub const SHOOT_ATOL: f64 = 1e-13;
/// Cycles below this amplitude (relative to the state scale) are treated as
/// having merged into a Hopf point.
pub const MIN_AMPLITUDE: f64 = 1e-6;
/// The section is moved to the newest point whenever the flow there makes
/// an angle with the section normal whose cosine is below this. Small
/// cycles near a Hopf point can slip past a fixed section, so the bound is
/// set high enough that re-anchoring happens at almost every step.
pub const REANCHOR_BELOW: f64 = 0.999;
/// Near a Hopf point the period direction is almost free and the branch
/// tangent swings quickly, so the turn guard is relaxed for cycles.
pub const CYCLE_TURN_COS: f64 = -1.0;
/// Refinement target for folds of cycles.
pub const CYCLE_FOLD_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleSolution {
    pub anchor: [f64; 2],
    pub period: f64,
    /// Nontrivial Floquet multiplier.
    pub multiplier: f64,
    pub c_no_min: f64,
    pub c_no_max: f64,
    pub residual: f64,
}

impl CycleSolution {
    pub fn amplitude(&self) -> f64 {
        self.c_no_max - self.c_no_min
    }

    pub fn stable(&self) -> bool {
        self.multiplier.abs() < 1.0
    }

    pub fn info(&self) -> CycleInfo {
        CycleInfo {
            period: self.period,
            multiplier: self.multiplier,
            c_no_min: self.c_no_min,
            c_no_max: self.c_no_max,
        }
    }
}

/// Flow over time `t` with monodromy and up to two parameter sensitivities.
pub(crate) struct Shot {
    pub end: [f64; 2],
    pub m: [[f64; 2]; 2],
    pub dp: [[f64; 2]; 2],
}

pub(crate) fn shoot(p: &ModelParams, free: &[Param], x: [f64; 2], t: f64) -> Result<Shot> {
    let dfp = |x: [f64; 2], k: usize| -> [f64; 2] {
        let Some(&q) = free.get(k) else { return [0.0; 2] };
        let v = p.get(q);
        let h = 1e-7 * v.abs().max(1e-3);
        let a = rhs_reduced_arr(x, &p.with(q, v + h));
        let b = rhs_reduced_arr(x, &p.with(q, v - h));
        [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)]
    };
    let field = |_: f64, s: &[f64; 10]| -> Result<[f64; 10]> {
        let x = [s[0], s[1]];
        let f = rhs_reduced_arr(x, p);
        let j = jacobian_reduced_arr(x, p);
        let mut o = [0.0; 10];
        o[0] = f[0];
        o[1] = f[1];
        // M row-major in s[2..6]
        for r in 0..2 {
            for c in 0..2 {
                o[2 + 2 * r + c] = j[r][0] * s[2 + c] + j[r][1] * s[4 + c];
            }
        }
        for k in 0..2 {
            let g = dfp(x, k);
            let z = [s[6 + 2 * k], s[7 + 2 * k]];
            o[6 + 2 * k] = j[0][0] * z[0] + j[0][1] * z[1] + g[0];
            o[7 + 2 * k] = j[1][0] * z[0] + j[1][1] * z[1] + g[1];
        }
        Ok(o)
    };
    let s0 = [x[0], x[1], 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
    let s = flow(field, s0, t, SHOOT_RTOL, SHOOT_ATOL)?;
    Ok(Shot {
        end: [s[0], s[1]],
        m: [[s[2], s[3]], [s[4], s[5]]],
        dp: [[s[6], s[7]], [s[8], s[9]]],
    })
}

fn det2(m: [[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Section through `x_ref` orthogonal to `f_ref`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Section {
    pub x_ref: [f64; 2],
    pub f_ref: [f64; 2],
}

impl Section {
    pub fn through(x: [f64; 2], p: &ModelParams) -> Self {
        let f = rhs_reduced_arr(x, p);
        let n = f[0].hypot(f[1]);
        Self {
            x_ref: x,
            f_ref: [f[0] / n, f[1] / n],
        }
    }

    fn eval(&self, x: [f64; 2]) -> f64 {
        self.f_ref[0] * (x[0] - self.x_ref[0]) + self.f_ref[1] * (x[1] - self.x_ref[1])
    }

    /// Cosine between the flow at `x` and the section normal.
    pub fn transversality(&self, x: [f64; 2], p: &ModelParams) -> f64 {
        let f = rhs_reduced_arr(x, p);
        (f[0] * self.f_ref[0] + f[1] * self.f_ref[1]) / f[0].hypot(f[1])
    }
}

/// Shooting system for one or two free parameters. With two free
/// parameters the extra equation is `mu - 1 = 0`.
pub(crate) struct CycleProblem {
    pub p: ModelParams,
    pub free: Vec<Param>,
    pub section: Cell<Section>,
    pub scale: Vec<f64>,
}

impl CycleProblem {
    fn at(&self, u: &[f64]) -> ModelParams {
        let mut p = self.p;
        for (k, q) in self.free.iter().enumerate() {
            p.set(*q, u[3 + k]);
        }
        p
    }

    fn fold_curve(&self) -> bool {
        self.free.len() == 2
    }

    pub fn solution(&self, u: &[f64]) -> Result<CycleSolution> {
        cycle_solution(&self.at(u), [u[0], u[1]], u[2])
    }
}

impl Problem for CycleProblem {
    fn dim(&self) -> usize {
        3 + self.free.len()
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let p = self.at(u);
        let x = [u[0], u[1]];
        let sh = shoot(&p, &[], x, u[2])?;
        let mut r = vec![sh.end[0] - x[0], sh.end[1] - x[1], self.section.get().eval(x)];
        if self.fold_curve() {
            r.push(det2(sh.m) - 1.0);
        }
        Ok(r)
    }

    fn jacobian(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        if self.fold_curve() {
            return super::engine::fd_jacobian(|v| self.residual(v), u, 4);
        }
        let p = self.at(u);
        let x = [u[0], u[1]];
        let sh = shoot(&p, &self.free, x, u[2])?;
        let fe = rhs_reduced_arr(sh.end, &p);
        let s = self.section.get();
        Ok(DMatrix::from_row_slice(
            3,
            4,
            &[
                sh.m[0][0] - 1.0,
                sh.m[0][1],
                fe[0],
                sh.dp[0][0],
                sh.m[1][0],
                sh.m[1][1] - 1.0,
                fe[1],
                sh.dp[0][1],
                s.f_ref[0],
                s.f_ref[1],
                0.0,
                0.0,
            ],
        ))
    }

    fn tests(&self, u: &[f64]) -> Result<Vec<f64>> {
        let sh = shoot(&self.at(u), &[], [u[0], u[1]], u[2])?;
        Ok(vec![det2(sh.m) - 1.0])
    }

    fn scale(&self) -> Vec<f64> {
        self.scale.clone()
    }

    fn admissible(&self, u: &[f64]) -> bool {
        u.iter().all(|v| v.is_finite())
            && u[2] > 0.0
            && u[0] + u[1] > 0.0
            && self.free.iter().zip(&u[3..]).all(|(f, v)| !matches!(f, Param::Tau | Param::Kc) || *v > 0.0)
    }
}

/// Period, multiplier and `c_no` extremes of the cycle through `x`.
pub fn cycle_solution(p: &ModelParams, x: [f64; 2], period: f64) -> Result<CycleSolution> {
    let sh = shoot(p, &[], x, period)?;
    let n = 2000;
    let cfg = SolverConfig {
        rel_tol: SHOOT_RTOL,
        abs_tol: SHOOT_ATOL,
        t_end: period,
        output_times: Some((0..=n).map(|i| (period * i as f64 / n as f64).min(period)).collect()),
        ..Default::default()
    };
    let tr = integrate_ode(reduced_field(p), x, &cfg)?;
    let c = tr.component(0);
    let (lo, hi) = extremes(&c);
    Ok(CycleSolution {
        anchor: x,
        period,
        multiplier: det2(sh.m),
        c_no_min: lo,
        c_no_max: hi,
        residual: (sh.end[0] - x[0]).hypot(sh.end[1] - x[1]),
    })
}

/// Min and max of a periodic sample with parabolic refinement.
fn extremes(c: &[f64]) -> (f64, f64) {
    let n = c.len() - 1; // last sample repeats the first
    let refine = |i: usize| {
        let (a, b, d) = (c[(i + n - 1) % n], c[i], c[(i + 1) % n]);
        let den = a - 2.0 * b + d;
        if den == 0.0 {
            b
        } else {
            b - 0.125 * (d - a) * (d - a) / den
        }
    };
    let imax = (0..n).max_by(|&i, &j| c[i].total_cmp(&c[j])).unwrap_or(0);
    let imin = (0..n).min_by(|&i, &j| c[i].total_cmp(&c[j])).unwrap_or(0);
    (refine(imin), refine(imax))
}

/// Seed a cycle from a simulated orbit: integrate past the transient,
/// anchor at a `c_no` peak and polish by Newton at fixed parameters.
/// With `reverse`, time runs backwards so that repelling cycles attract.
pub fn cycle_from_simulation(
    params: &ModelParams,
    x0: [f64; 2],
    t_transient: f64,
    t_observe: f64,
    reverse: bool,
) -> Result<CycleSolution> {
    let sign = if reverse { -1.0 } else { 1.0 };
    let field = |_: f64, x: &[f64; 2]| {
        let f = rhs_reduced_arr(*x, params);
        Ok([sign * f[0], sign * f[1]])
    };
    let x1 = flow(field, x0, t_transient, 1e-10, 1e-12)?;
    let cfg = SolverConfig::default()
        .with_tol(1e-10, 1e-12)
        .with_t_end(t_observe)
        .with_uniform_output(t_observe / 8000.0);
    let tr = integrate_ode(field, x1, &cfg)?;
    let c = tr.component(0);
    let Some((amp, period)) = oscillation_of(&tr.times, &c, &RegimeOptions::default()) else {
        return Err(Error::NoConvergence("simulation did not settle on a cycle".into()));
    };
    let top = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let last = *peaks(&c)
        .iter()
        .rev()
        .find(|&&i| c[i] > top - 0.5 * amp)
        .ok_or_else(|| Error::NoConvergence("no peaks".into()))?;
    let anchor = [tr.state(last)[0], tr.state(last)[1]];
    polish(params, anchor, period)
}

/// Newton on the shooting system at fixed parameters.
pub fn polish(params: &ModelParams, anchor: [f64; 2], period: f64) -> Result<CycleSolution> {
    let pb = CycleProblem {
        p: *params,
        free: vec![Param::Kc],
        section: Cell::new(Section::through(anchor, params)),
        scale: vec![1.0, 1.0, period, 1.0],
    };
    let u0 = [anchor[0], anchor[1], period, params.k_c];
    let cfg = StepConfig { newton_max_iter: 30, ..Default::default() };
    let (u, _) = correct(&pb, &u0, &[0.0, 0.0, 0.0, 1.0], &cfg)?;
    cycle_solution(params, [u[0], u[1]], u[2])
}

/// Cycle predicted from a Hopf point `(x*, lambda*)` of `params`: anchor
/// `x* + eps Re(v)`, period `2 pi / omega`, corrected with the anchor offset
/// along `Re(v)` held fixed.
pub fn cycle_from_hopf(params: &ModelParams, free: Param, x: [f64; 2], eps: f64) -> Result<(ModelParams, CycleSolution)> {
    let j = jacobian_reduced_arr(x, params);
    let det = det2(j);
    if det <= 0.0 {
        return Err(Error::Precondition("not a Hopf point: det J <= 0".into()));
    }
    let omega = det.sqrt();
    // eigenvector for i*omega: (b, i*omega - a)
    let (a, b) = (j[0][0], j[0][1]);
    let re = [b, -a];
    let nr = re[0].hypot(re[1]);
    let dir = [re[0] / nr, re[1] / nr];
    let total = (x[0] + x[1]).max(1.0);
    let anchor = [x[0] + eps * total * dir[0], x[1] + eps * total * dir[1]];
    let period = 2.0 * std::f64::consts::PI / omega;
    let section = Section {
        x_ref: anchor,
        f_ref: {
            // flow of the linearization at the anchor
            let w = [j[0][0] * dir[0] + j[0][1] * dir[1], j[1][0] * dir[0] + j[1][1] * dir[1]];
            let n = w[0].hypot(w[1]);
            [w[0] / n, w[1] / n]
        },
    };
    let pb = CycleProblem {
        p: *params,
        free: vec![free],
        section: Cell::new(section),
        scale: vec![total, total, period, params.get(free).abs().max(1e-3)],
    };
    let u0 = [anchor[0], anchor[1], period, params.get(free)];
    let cfg = StepConfig { newton_max_iter: 40, ..Default::default() };
    let (u, _) = correct(&pb, &u0, &[dir[0] * total * total, dir[1] * total * total, 0.0, 0.0], &cfg)?;
    let p = params.with(free, u[3]);
    Ok((p, cycle_solution(&p, [u[0], u[1]], u[2])?))
}

fn cycle_point(pb: &CycleProblem, r: &RawPoint) -> BranchPoint {
    let sol = pb.solution(&r.u).ok();
    BranchPoint {
        u: r.u.clone(),
        stable: sol.map(|s| s.stable()),
        tests: r.tests.clone(),
        residual: r.residual,
        cycle: sol.map(|s| s.info()),
    }
}

/// Per-run state of the cycle stop rule.
#[derive(Default)]
struct Watch {
    why: Option<String>,
    amps: Vec<f64>,
    /// The last accepted point passed through the Hopf point and lies on the
    /// mirrored part of the family; it is dropped.
    reflected: bool,
}

/// Stop rule shared by cycle and cycle-fold continuation; re-anchors the
/// section when the flow becomes nearly tangent to it.
///
/// Shooting cannot tell a cycle shrinking into a Hopf point from one
/// growing out of it again, so a run that reaches a small-amplitude minimum
/// and turns back up is stopped there as well.
fn cycle_stop<'a>(
    pb: &'a CycleProblem,
    bounds: &'a [(f64, f64)],
    amp_floor: f64,
    small: f64,
    t_max: f64,
    watch: &'a RefCell<Watch>,
) -> impl Fn(&[f64]) -> bool + 'a {
    move |u: &[f64]| {
        let p = pb.at(u);
        let x = [u[0], u[1]];
        if pb.section.get().transversality(x, &p).abs() < REANCHOR_BELOW {
            pb.section.set(Section::through(x, &p));
        }
        let mut w = watch.borrow_mut();
        if pb.free.iter().zip(&u[3..]).zip(bounds).any(|((_, v), b)| *v < b.0 || *v > b.1) {
            w.why = Some("boundary".into());
            return true;
        }
        if u[2] > t_max {
            w.why = Some("period-blowup".into());
            return true;
        }
        let amp = match cycle_solution(&p, x, u[2]) {
            Ok(s) => s.amplitude(),
            Err(e) => {
                w.why = Some(format!("failed: {e}"));
                return true;
            }
        };
        if amp < amp_floor {
            w.why = Some("hopf-endpoint".into());
            return true;
        }
        w.amps.push(amp);
        let n = w.amps.len();
        if n >= 3 {
            let (a2, a1) = (w.amps[n - 3], w.amps[n - 2]);
            let top = w.amps.iter().copied().fold(0.0, f64::max);
            if a1 < a2 && amp > a1 && a1 < small.max(0.05 * top) {
                w.why = Some("hopf-endpoint".into());
                w.reflected = true;
                return true;
            }
        }
        false
    }
}

/// Shooting loses conditioning on small cycles, so a run that breaks down
/// while the amplitude shrinks steadily towards zero and the multiplier
/// approaches one is taken to have reached its Hopf point.
fn approaching_hopf(amps: &[f64], points: &[RawPoint]) -> bool {
    let n = amps.len();
    if n < 3 {
        return false;
    }
    let top = amps.iter().copied().fold(0.0, f64::max);
    let shrinking = amps[n - 1] < amps[n - 2] && amps[n - 2] < amps[n - 3];
    let mu_minus_1 = points.last().map_or(f64::INFINITY, |p| p.tests[0].abs());
    shrinking && amps[n - 1] < 0.25 * top && mu_minus_1 < 0.1
}

fn one_point(run: &super::engine::RawBranch) -> super::engine::RawBranch {
    super::engine::RawBranch {
        points: run.points[..1].to_vec(),
        stop: Stop::Boundary,
    }
}

fn run_cycle(pb: &CycleProblem, u0: &[f64], dir: &[f64], cfg: &StepConfig, bounds: &[(f64, f64)], t_max: f64) -> Result<(super::engine::RawBranch, Option<String>)> {
    let total = (u0[0] + u0[1]).max(1.0);
    let watch = RefCell::new(Watch::default());
    let stop = cycle_stop(pb, bounds, MIN_AMPLITUDE * total, 1e-2 * total, t_max, &watch);
    let mut run = continue_from(pb, u0, dir, cfg, &stop)?;
    drop(stop);
    let mut w = watch.into_inner();
    if w.reflected && run.points.len() > 1 {
        run.points.pop();
    }
    if let Stop::Truncated(msg) = &run.stop {
        if approaching_hopf(&w.amps, &run.points) {
            w.why = Some("hopf-endpoint".into());
            run.stop = Stop::Boundary;
        } else if w.why.is_none() {
            w.why = Some(format!("truncated: {msg}"));
        }
    }
    Ok((run, w.why))
}

/// Continue `seed` (a cycle of `params`) in `free` over `range`, both
/// directions. Folds of cycles are located where `mu - 1` changes sign.
pub fn continue_cycle(
    params: &ModelParams,
    free: Param,
    range: (f64, f64),
    seed: &CycleSolution,
    cfg: &StepConfig,
) -> Result<Branch> {
    let total = (seed.anchor[0] + seed.anchor[1]).max(1.0);
    let pb = CycleProblem {
        p: *params,
        free: vec![free],
        section: Cell::new(Section::through(seed.anchor, params)),
        scale: vec![total, total, seed.period, ((range.1 - range.0) / 10.0).max(1e-12)],
    };
    let u0 = [seed.anchor[0], seed.anchor[1], seed.period, params.get(free)];
    let (u0, _) = correct(&pb, &u0, &[0.0, 0.0, 0.0, 1.0], cfg)?;
    let cfg = &StepConfig { min_turn_cos: CYCLE_TURN_COS, ..*cfg };
    let bounds = [range];
    let t_max = 50.0 * seed.period;
    let t0 = tangent(&pb, &u0, &[0.0, 0.0, 0.0, 1.0])?;
    let (fwd, why_f) = run_cycle(&pb, &u0, &t0, cfg, &bounds, t_max)?;
    // a seed next to a Hopf point is continued away from it only: the other
    // direction passes through the Hopf point onto the same cycles
    let near_hopf = seed.amplitude() < 1e-2 * total;
    let (raw, diagnostics, ends) = if near_hopf {
        let (raw, diag) = join(one_point(&fwd), fwd);
        (raw, diag, [Some("hopf-endpoint".to_string()), why_f])
    } else {
        pb.section.set(Section::through([u0[0], u0[1]], params));
        let neg: Vec<f64> = t0.iter().map(|v| -v).collect();
        let (back, why_b) = run_cycle(&pb, &u0, &neg, cfg, &bounds, t_max)?;
        let (raw, diag) = join(back, fwd);
        (raw, diag, [why_b, why_f])
    };
    let labels = vec!["c_no".into(), "c_nop".into(), "T".into(), free.name().into()];
    Ok(cycle_branch(&pb, BranchKind::Cycle, labels, raw, diagnostics, ends, cfg))
}

fn cycle_branch(
    pb: &CycleProblem,
    kind: BranchKind,
    labels: Vec<String>,
    raw: Vec<RawPoint>,
    diagnostics: Vec<String>,
    ends: [Option<String>; 2],
    cfg: &StepConfig,
) -> Branch {
    let mut events = Vec::new();
    if kind == BranchKind::Cycle {
        for (i, w) in raw.windows(2).enumerate() {
            let (a, b) = (&w[0], &w[1]);
            if (a.tests[0] < 0.0) != (b.tests[0] < 0.0) {
                pb.section.set(Section::through([a.u[0], a.u[1]], &pb.at(&a.u)));
                let (pt, ok) = refine(pb, a, b, 0, CYCLE_FOLD_TOL, cfg).unwrap_or_else(|_| (a.clone(), false));
                let sol = pb.solution(&pt.u).ok();
                events.push(Event {
                    kind: EventKind::CycleFold,
                    index: i,
                    u: pt.u.clone(),
                    tests: pt.tests.clone(),
                    l1: None,
                    cycle: sol.map(|s| s.info()),
                    note: if ok { String::new() } else { format!("refinement stalled at |mu - 1| = {:e}", pt.tests[0].abs()) },
                });
            }
        }
    }
    for (k, why) in ends.iter().enumerate() {
        let Some(why) = why else { continue };
        let kind = match why.as_str() {
            "hopf-endpoint" => EventKind::HopfEndpoint,
            "boundary" => continue,
            _ => EventKind::Truncated,
        };
        let pt = if k == 0 { &raw[0] } else { &raw[raw.len() - 1] };
        events.push(Event {
            kind,
            index: if k == 0 { 0 } else { raw.len() - 1 },
            u: pt.u.clone(),
            tests: pt.tests.clone(),
            l1: None,
            cycle: pb.solution(&pt.u).ok().map(|s| s.info()),
            note: why.clone(),
        });
    }
    Branch {
        kind,
        free: pb.free.clone(),
        labels,
        test_labels: vec!["mu_minus_1".into()],
        points: raw.iter().map(|r| cycle_point(pb, r)).collect(),
        events,
        diagnostics,
    }
}

/// Two-parameter continuation of a fold of cycles (`mu = 1`), seeded with a
/// fold cycle of `params`.
pub fn continue_cycle_fold_curve(
    params: &ModelParams,
    free: (Param, Param),
    seed: &CycleSolution,
    bounds: [(f64, f64); 2],
    cfg: &StepConfig,
) -> Result<Branch> {
    if (seed.multiplier - 1.0).abs() > 1e-4 {
        return Err(Error::Precondition(format!("seed is not a fold of cycles: mu = {}", seed.multiplier)));
    }
    let total = (seed.anchor[0] + seed.anchor[1]).max(1.0);
    let pb = CycleProblem {
        p: *params,
        free: vec![free.0, free.1],
        section: Cell::new(Section::through(seed.anchor, params)),
        scale: vec![
            total,
            total,
            seed.period,
            ((bounds[0].1 - bounds[0].0) / 10.0).max(1e-12),
            ((bounds[1].1 - bounds[1].0) / 10.0).max(1e-12),
        ],
    };
    let u0 = [seed.anchor[0], seed.anchor[1], seed.period, params.get(free.0), params.get(free.1)];
    let cfg = StepConfig { newton_tol: cfg.newton_tol.max(1e-9), min_turn_cos: CYCLE_TURN_COS, ..*cfg };
    let (u0, _) = correct(&pb, &u0, &[0.0, 0.0, 0.0, 1.0, 0.0], &cfg)?;
    let t_max = 50.0 * seed.period;
    let t0 = tangent(&pb, &u0, &[0.0, 0.0, 0.0, 1.0, 0.0])?;
    let (fwd, why_f) = run_cycle(&pb, &u0, &t0, &cfg, &bounds, t_max)?;
    if fwd.stop == Stop::Closed {
        let labels = fold_labels(free);
        return Ok(cycle_branch(&pb, BranchKind::CycleFoldCurve, labels, fwd.points, Vec::new(), [None, None], &cfg));
    }
    pb.section.set(Section::through([u0[0], u0[1]], params));
    let neg: Vec<f64> = t0.iter().map(|v| -v).collect();
    let (back, why_b) = run_cycle(&pb, &u0, &neg, &cfg, &bounds, t_max)?;
    let ends = [why_b, why_f];
    let (raw, diagnostics) = join(back, fwd);
    Ok(cycle_branch(&pb, BranchKind::CycleFoldCurve, fold_labels(free), raw, diagnostics, ends, &cfg))
}

fn fold_labels(free: (Param, Param)) -> Vec<String> {
    vec!["c_no".into(), "c_nop".into(), "T".into(), free.0.name().into(), free.1.name().into()]
}
