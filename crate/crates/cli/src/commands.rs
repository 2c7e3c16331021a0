use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{anyhow, bail, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use phosdyn::calibrate::{calibrate, CalibrationGrid};
use phosdyn::continuation::cycle::cycle_solution;
use phosdyn::continuation::hopf::find_hopf_seed;
use phosdyn::continuation::{continue_cycle_fold_curve, continue_hopf_curve, diagram_1d, EventKind, StepConfig};
use phosdyn::integrate::{derive_seed, full_field, integrate_ode, integrate_sde, reduced_field, SolverConfig};
use phosdyn::io::{trajectory_csv, Derived, FULL_COLUMNS, REDUCED_COLUMNS};
use phosdyn::phase::{classify_regime, default_probes, find_equilibria, trace_nullclines, RegimeOptions, SearchBox, DEFAULT_GRID};
use phosdyn::stochastic::{period_statistics, sr_sweep, NoiseRun, Thresholds};
use phosdyn::{FullState, ModelParams, Param, ReducedState};

use crate::keyword;
use crate::output::OutDir;
use crate::settings::{ensure, Grid, Interval, Numbers, Section, Start};

/// Everything a command needs besides its own section.
pub struct Ctx {
    pub model: ModelParams,
    pub solver: SolverConfig,
    pub seed: u64,
}

/// What a command hands back for the metadata file.
pub type Stats = Value;

keyword!(System { Reduced => "reduced", Full => "full" });
keyword!(DiagramKind { Eq1d => "eq1d", Hopf2d => "hopf2d", CycleFold2d => "cyclefold2d" });
keyword!(Band { Fixed => "fixed", Cycle => "cycle" });

/// Nucleus and volumes used when a full-system start is derived from a
/// reduced one.
const NUCLEUS_START: (f64, f64, f64) = (20.0, 0.5, 2.0);

fn warn_coarse_step(p: &ModelParams, dt: f64) {
    if p.tau < 10.0 * dt {
        eprintln!(
            "warning: tau = {} is below 10 dt (dt = {dt}); consider dt <= {:e}",
            p.tau,
            p.tau / 10.0
        );
    }
}

// ------------------------------------------------------------ simulate

pub struct SimulateArgs {
    pub system: Option<System>,
    pub x0: Option<Start>,
    pub sample: Option<f64>,
}

pub fn simulate(ctx: &Ctx, sec: &mut Section, a: SimulateArgs, out: &mut OutDir) -> Result<Stats> {
    let system = sec.get("system", a.system, System::Reduced)?;
    let x0 = sec.get("x0", a.x0, Start::Auto)?;
    let sample = sec.get("sample", a.sample, 0.0)?;
    ensure(sample >= 0.0 && sample.is_finite(), || format!("sample must be >= 0, got {sample}"))?;
    let p = &ctx.model;
    let mut cfg = ctx.solver.clone();
    if sample > 0.0 {
        cfg = cfg.with_uniform_output(sample);
    }
    let probe = default_probes(p)[4];
    let reduced_start = |v: &[f64]| ReducedState::new(v[0], v[1]);
    let (traj, csv) = match system {
        System::Reduced => {
            let x = match &x0 {
                Start::Auto => probe,
                Start::At(v) if v.len() == 2 => reduced_start(v),
                Start::At(v) => bail!("x0: the reduced system needs 2 values, got {}", v.len()),
            };
            let traj = if p.sigma > 0.0 {
                warn_coarse_step(p, cfg.dt);
                integrate_sde(x.to_array(), &cfg, p, ctx.seed)?
            } else {
                integrate_ode(reduced_field(p), x.to_array(), &cfg)?
            };
            let csv = trajectory_csv(&traj, &REDUCED_COLUMNS, &[])?;
            (traj, csv)
        }
        System::Full => {
            ensure(p.sigma == 0.0, || "noise is defined for the reduced system only; set sigma = 0".into())?;
            let (c_ni, v_n, v_cyto) = NUCLEUS_START;
            let x = match &x0 {
                Start::Auto => FullState::on_manifold(probe, c_ni, v_n, v_cyto, p),
                Start::At(v) if v.len() == 2 => FullState::on_manifold(reduced_start(v), c_ni, v_n, v_cyto, p),
                Start::At(v) if v.len() == 7 => FullState::from_array(v.as_slice().try_into()?),
                Start::At(v) => bail!("x0: the full system needs 2 or 7 values, got {}", v.len()),
            };
            let traj = integrate_ode(full_field(p), x.to_array(), &cfg)?;
            let c_sum = |s: &[f64]| s[0] + s[1] + s[3];
            let csv = trajectory_csv(&traj, &FULL_COLUMNS, &[Derived { name: "c_sum", f: &c_sum }])?;
            (traj, csv)
        }
    };
    out.write("trajectory.csv", &csv)?;
    Ok(json!({
        "samples": traj.len(),
        "t_final": traj.times.last(),
        "solver": traj.meta,
        "final_state": traj.last_state(),
    }))
}

// ---------------------------------------------------------- nullclines

pub struct NullclineArgs {
    pub total: Option<Interval>,
    pub n_total: Option<usize>,
    pub eq_total: Option<Interval>,
}

pub fn nullclines(ctx: &Ctx, sec: &mut Section, a: NullclineArgs, out: &mut OutDir) -> Result<Stats> {
    let p = &ctx.model;
    let total = sec.get("total", a.total, Interval(1e-3, 4.0 * p.k_c))?;
    let n_total = sec.get("n_total", a.n_total, 400)?;
    let eq_total = sec.get("eq_total", a.eq_total, Interval(0.0, 1.0 / p.a_cyto))?;
    ensure(total.0 >= 0.0, || "total range must be non-negative".into())?;
    ensure(eq_total.0 >= 0.0, || "eq_total range must be non-negative".into())?;
    let (no, nop) = trace_nullclines(p, (total.0, total.1), n_total);
    let mut counts = Vec::new();
    for (name, lines) in [("c_no", &no), ("c_nop", &nop)] {
        let mut s = String::from("total,frac,which,component\n");
        for (k, line) in lines.iter().enumerate() {
            for q in &line.points {
                let _ = writeln!(s, "{:?},{:?},{name},{k}", q.total, q.frac);
            }
        }
        out.write(&format!("nullcline_{name}.csv"), &s)?;
        counts.push(lines.len());
    }
    let eqs = find_equilibria(p, SearchBox { total: (eq_total.0, eq_total.1), frac: (0.0, 1.0) }, DEFAULT_GRID);
    let mut s = String::from("c_no,c_nop,kind,re_lambda1,im_lambda1,re_lambda2,im_lambda2\n");
    for e in &eqs {
        let [l1, l2] = e.eigenvalues;
        let _ = writeln!(
            s,
            "{:?},{:?},{},{:?},{:?},{:?},{:?}",
            e.state.c_no,
            e.state.c_nop,
            e.kind.as_str(),
            l1.re,
            l1.im,
            l2.re,
            l2.im
        );
    }
    out.write("equilibria.csv", &s)?;
    Ok(json!({
        "c_no_components": counts[0],
        "c_nop_components": counts[1],
        "equilibria": eqs.iter().map(|e| e.kind.as_str()).collect::<Vec<_>>(),
    }))
}

// ------------------------------------------------------------- diagram

pub struct DiagramArgs {
    pub kind: Option<DiagramKind>,
    pub free: Option<Param>,
    pub range: Option<Interval>,
    pub free2: Option<Param>,
    pub range2: Option<Interval>,
    pub max_points: Option<usize>,
    pub h_max: Option<f64>,
}

pub fn diagram(ctx: &Ctx, sec: &mut Section, a: DiagramArgs, out: &mut OutDir) -> Result<Stats> {
    let p = &ctx.model;
    let kind = sec.get("kind", a.kind, DiagramKind::Eq1d)?;
    let free = sec.get("free", a.free, Param::Kc)?;
    let range = sec.get("range", a.range, Interval(0.5, 4.5))?;
    let two = kind != DiagramKind::Eq1d;
    let (free2, range2) = if two {
        (Some(sec.get("free2", a.free2, Param::Tau)?), Some(sec.get("range2", a.range2, Interval(0.005, 500.0))?))
    } else {
        (None, None)
    };
    let default_points = if kind == DiagramKind::CycleFold2d { 300 } else { 2000 };
    let cfg = StepConfig {
        max_points: sec.get("max_points", a.max_points, default_points)?,
        h_max: sec.get("h_max", a.h_max, StepConfig::default().h_max)?,
        ..Default::default()
    };
    ensure(cfg.max_points >= 2, || "max_points must be >= 2".into())?;
    ensure(cfg.h_max > cfg.h_min, || format!("h_max must exceed {}", cfg.h_min))?;
    if let Some(f2) = free2 {
        ensure(f2 != free, || "free2 must differ from free".into())?;
    }
    let bounds = |r2: Interval| [(range.0, range.1), (r2.0, r2.1)];
    match kind {
        DiagramKind::Eq1d => {
            let d = diagram_1d(p, free, (range.0, range.1), &cfg)?;
            let mut text = d.to_json();
            text.push('\n');
            out.write("diagram.json", &text)?;
            for (i, b) in d.equilibria.iter().enumerate() {
                out.write(&format!("eq_{i}.csv"), &b.to_csv())?;
            }
            for (i, b) in d.cycles.iter().enumerate() {
                out.write(&format!("cycle_{i}.csv"), &b.to_csv())?;
            }
            let mut events: BTreeMap<String, usize> = BTreeMap::new();
            for b in d.branches() {
                for e in &b.events {
                    *events.entry(format!("{:?}", e.kind)).or_default() += 1;
                }
            }
            Ok(json!({
                "equilibrium_branches": d.equilibria.len(),
                "cycle_branches": d.cycles.len(),
                "events": events,
            }))
        }
        DiagramKind::Hopf2d => {
            let (free2, range2) = (free2.expect("set"), range2.expect("set"));
            let Some((ps, x)) = find_hopf_seed(p, free, (range.0, range.1), &cfg)? else {
                bail!("no Hopf point along {free} in [{}, {}]", range.0, range.1);
            };
            let c = continue_hopf_curve(&ps, (free2, free), x, [(range2.0, range2.1), (range.0, range.1)], &cfg)?;
            out.write_json("hopf_curve.json", &c)?;
            out.write("hopf_curve.csv", &c.branch.to_csv())?;
            Ok(json!({
                "seed": { free.name(): ps.get(free), "state": x },
                "points": c.branch.points.len(),
                "closed": c.closed,
                "bounds_region": c.bounds_region(),
                "ends": c.ends,
                "bautin": c.bautin.iter().map(|b| b.params).collect::<Vec<_>>(),
                "area": c.enclosed_area(),
            }))
        }
        DiagramKind::CycleFold2d => {
            let (free2, range2) = (free2.expect("set"), range2.expect("set"));
            let d = diagram_1d(p, free, (range.0, range.1), &cfg)?;
            let Some(e) = d
                .cycles
                .iter()
                .flat_map(|b| b.events_of(EventKind::CycleFold))
                .find(|e| e.tests[0].abs() <= 1e-6)
            else {
                bail!("no fold of cycles along {free} in [{}, {}]", range.0, range.1);
            };
            let pf = p.with(free, e.u[3]);
            let seed = cycle_solution(&pf, [e.u[0], e.u[1]], e.u[2])?;
            let b = continue_cycle_fold_curve(&pf, (free, free2), &seed, bounds(range2), &cfg)?;
            out.write_json("cycle_fold_curve.json", &b)?;
            out.write("cycle_fold_curve.csv", &b.to_csv())?;
            Ok(json!({
                "seed": { free.name(): e.u[3], "period": seed.period, "multiplier": seed.multiplier },
                "points": b.points.len(),
                "events": b.events.iter().map(|e| (e.kind, e.note.clone())).collect::<Vec<_>>(),
                "diagnostics": b.diagnostics,
            }))
        }
    }
}

// --------------------------------------------------------- regime-grid

pub struct RegimeArgs {
    pub p1: Option<Param>,
    pub p1_values: Option<Grid>,
    pub p2: Option<Param>,
    pub p2_values: Option<Grid>,
    pub t_transient: Option<f64>,
    pub t_observe: Option<f64>,
}

pub fn regime_grid(ctx: &Ctx, sec: &mut Section, a: RegimeArgs, out: &mut OutDir) -> Result<Stats> {
    let p1 = sec.get("p1", a.p1, Param::Tau)?;
    let v1 = sec.get("p1_values", a.p1_values, Grid::Log(0.01, 100.0, 9))?.values();
    let p2 = sec.get("p2", a.p2, Param::Kc)?;
    let v2 = sec.get("p2_values", a.p2_values, Grid::Lin(0.5, 4.5, 9))?.values();
    let t_tr = sec.get("t_transient", a.t_transient, 1000.0)?;
    let t_obs = sec.get("t_observe", a.t_observe, 700.0)?;
    ensure(p1 != p2, || "p1 and p2 must differ".into())?;
    ensure(t_tr >= 0.0 && t_obs > 0.0, || "need t_transient >= 0 and t_observe > 0".into())?;
    let cells: Vec<(f64, f64)> = v1.iter().flat_map(|&a| v2.iter().map(move |&b| (a, b))).collect();
    let opts = RegimeOptions { rel_tol: ctx.solver.rel_tol.max(1e-10), abs_tol: ctx.solver.abs_tol, ..Default::default() };
    let labels = cells
        .par_iter()
        .map(|&(a, b)| {
            let q = ctx.model.with(p1, a).with(p2, b);
            q.validate()?;
            Ok(classify_regime(&q, &default_probes(&q), t_tr, t_obs, &opts)?.label)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = String::from("p1,p2,label\n");
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (&(a, b), l) in cells.iter().zip(&labels) {
        let _ = writeln!(s, "{a:?},{b:?},{}", l.as_str());
        *counts.entry(l.as_str()).or_default() += 1;
    }
    out.write("regimes.csv", &s)?;
    Ok(json!({ "p1": p1, "p2": p2, "cells": cells.len(), "labels": counts }))
}

// ------------------------------------------------------------ noise runs

pub struct NoiseArgs {
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub stride: Option<usize>,
    pub transient: Option<f64>,
    pub x0: Option<Start>,
}

fn noise_run(sec: &mut Section, a: NoiseArgs) -> Result<NoiseRun> {
    let d = NoiseRun::default();
    let x0 = match sec.get("x0", a.x0, Start::Auto)? {
        Start::Auto => None,
        Start::At(v) if v.len() == 2 => Some([v[0], v[1]]),
        Start::At(v) => bail!("x0: needs 2 values, got {}", v.len()),
    };
    Ok(NoiseRun {
        t_end: sec.get("t_end", a.t_end, d.t_end)?,
        dt: sec.get("dt", a.dt, d.dt)?,
        stride: sec.get("stride", a.stride, d.stride)?,
        transient: sec.get("transient", a.transient, d.transient)?,
        x0,
    })
}

pub struct SrArgs {
    pub sigmas: Option<Grid>,
    pub seeds: Option<usize>,
    pub run: NoiseArgs,
}

pub fn sr(ctx: &Ctx, sec: &mut Section, a: SrArgs, out: &mut OutDir) -> Result<Stats> {
    let sigmas = sec.get("sigmas", a.sigmas, Grid::Log(1e-4, 1e-1, 13))?.values();
    let seeds = sec.get("seeds", a.seeds, 10)?;
    let run = noise_run(sec, a.run)?;
    warn_coarse_step(&ctx.model, run.dt);
    let curve = sr_sweep(&ctx.model, &sigmas, &run, seeds, ctx.seed)?;
    out.write("sr.csv", &curve.to_csv())?;
    let mut s = String::from("sigma,seed_index,amplitude\n");
    for (sig, row) in curve.sigmas.iter().zip(&curve.per_seed) {
        for (k, v) in row.iter().enumerate() {
            let _ = writeln!(s, "{sig:?},{k},{v:?}");
        }
    }
    out.write("sr_per_seed.csv", &s)?;
    let i = curve.peak();
    Ok(json!({
        "peak_sigma": curve.sigmas[i],
        "peak_amplitude": curve.amplitudes[i],
        "unimodal": curve.is_unimodal(2.0),
    }))
}

pub struct PeriodArgs {
    pub free: Option<Param>,
    pub values: Option<Grid>,
    pub n_traj: Option<usize>,
    pub band: Option<Band>,
    pub up: Option<f64>,
    pub down: Option<f64>,
    pub width: Option<f64>,
    pub run: NoiseArgs,
}

pub fn periods(ctx: &Ctx, sec: &mut Section, a: PeriodArgs, out: &mut OutDir) -> Result<Stats> {
    let free = sec.get("free", a.free, Param::Kc)?;
    let values = sec.get("values", a.values, Grid::Lin(1.5, 2.7, 5))?.values();
    let n_traj = sec.get("n_traj", a.n_traj, 50)?;
    let band = sec.get("band", a.band, Band::Fixed)?;
    let fixed = Thresholds {
        up: sec.get("up", a.up, Thresholds::default().up)?,
        down: sec.get("down", a.down, Thresholds::default().down)?,
    };
    let width = sec.get("width", a.width, 0.8)?;
    let run = noise_run(sec, a.run)?;
    ensure(n_traj > 0, || "n_traj must be > 0".into())?;
    ensure(width > 0.0 && width < 1.0, || format!("width must lie in (0, 1), got {width}"))?;
    ensure(free != Param::Sigma, || "free must not be sigma; the noise level is the model's sigma".into())?;
    warn_coarse_step(&ctx.model, run.dt);
    let rows = values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let p = ctx.model.with(free, v);
            p.validate()?;
            let th = match band {
                Band::Fixed => fixed,
                Band::Cycle => Thresholds::for_cycle(&p, &run, width)?
                    .ok_or_else(|| anyhow!("{free} = {v}: no noise-free oscillation to place the band on"))?,
            };
            let s = period_statistics(&p, p.sigma, n_traj, &run, derive_seed(ctx.seed, i as u64), th)?;
            Ok((v, s, th))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = String::from("param,mean_period,cv,n_periods,up,down\n");
    for (v, st, th) in &rows {
        let _ = writeln!(s, "{v:?},{:?},{:?},{},{:?},{:?}", st.mean_period, st.cv, st.n_periods, th.up, th.down);
    }
    out.write("periods.csv", &s)?;
    Ok(json!({
        "free": free,
        "sigma": ctx.model.sigma,
        "oscillating": rows.iter().filter(|r| r.1.oscillating()).count(),
    }))
}

// ----------------------------------------------------------- calibrate

pub struct CalibrateArgs {
    pub m: Option<Grid>,
    pub k_vn: Option<Numbers>,
    pub k_vcy: Option<Numbers>,
    pub a_cyto: Option<Numbers>,
    pub a_n: Option<Numbers>,
    pub min_ratio: Option<f64>,
}

pub fn calibrate_cmd(ctx: &Ctx, sec: &mut Section, a: CalibrateArgs, out: &mut OutDir) -> Result<Stats> {
    let d = CalibrationGrid::default();
    let grid = CalibrationGrid {
        m: sec.get("m", a.m, Grid::List(d.m))?.values(),
        k_vn: sec.get("k_vn", a.k_vn, Numbers(d.k_vn))?.0,
        k_vcy: sec.get("k_vcy", a.k_vcy, Numbers(d.k_vcy))?.0,
        a_cyto: sec.get("A_cyto", a.a_cyto, Numbers(d.a_cyto))?.0,
        a_n: sec.get("A_n", a.a_n, Numbers(d.a_n))?.0,
        min_ratio: sec.get("min_ratio", a.min_ratio, d.min_ratio)?,
    };
    let c = calibrate(&ctx.model, &grid)?;
    out.write_json("calibration.json", &c)?;
    let Some(text) = c.config() else {
        bail!("no candidate among {} passed; see calibration.json", c.tried.len());
    };
    out.write("calibrated.cfg", &text)?;
    Ok(json!({ "tried": c.tried.len(), "chosen": c.chosen }))
}
