//! Acceptance checks. Each test prints one `criterion N [PASS|FAIL]` line
//! before asserting; the line bypasses output capture, so it shows in a
//! plain `cargo test` run.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rand_core::{RngCore, SeedableRng};

use phosdyn::continuation::cycle::{cycle_from_hopf, cycle_from_simulation};
use phosdyn::continuation::hopf::{continue_hopf_curve, find_hopf_seed};
use phosdyn::continuation::{
    continue_cycle, continue_equilibrium, first_lyapunov_field, Branch, CubicNormalForm, EventKind, StepConfig,
};
use phosdyn::integrate::{full_field, integrate_ode, reduced_field, SolverConfig};
use phosdyn::model::{jacobian_reduced_arr, rhs_reduced_arr};
use phosdyn::phase::{
    classify_regime, default_probes, eigenvalues_2x2, equilibria, find_equilibria, newton_equilibrium,
    Regime, RegimeOptions, SearchBox, DEFAULT_GRID,
};
use phosdyn::stochastic::{period_statistics, sr_sweep, NoiseRun, PeriodStats, ResonanceCurve, Thresholds};
use phosdyn::{FullState, ModelParams, Param, ReducedState};

fn report(n: u32, name: &str, ok: bool, detail: String) {
    let line = format!("criterion {n:>2} [{}] {name}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::Write::write_all(&mut std::io::stdout().lock(), line.as_bytes());
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn hopf_at(tau: f64, range: (f64, f64)) -> Branch {
    let p = ModelParams { tau, k_c: range.0, ..Default::default() };
    continue_equilibrium(&p, Param::Kc, range, equilibria(&p)[0].state, &StepConfig::default()).unwrap()
}

fn hopf_values(tau: f64, range: (f64, f64)) -> Vec<(f64, [f64; 2])> {
    hopf_at(tau, range).events_of(EventKind::Hopf).map(|e| (e.u[2], [e.u[0], e.u[1]])).collect()
}

// ---------------------------------------------------------------- 1, 2

struct FullRun {
    drift: f64,
    quotient: f64,
    elapsed: Duration,
}

fn full_runs() -> &'static FullRun {
    static RUN: OnceLock<FullRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let t0 = Instant::now();
        let (mut drift, mut quotient) = (0.0f64, 0.0f64);
        for (kc, start) in [(2.75, [1.0, 2.0]), (1.0, [0.3, 0.1]), (4.0, [5.0, 0.5])] {
            let p = ModelParams { k_c: kc, ..Default::default() };
            let x0 = FullState::on_manifold(ReducedState::new(start[0], start[1]), 20.0, 0.5, 2.0, &p);
            let cfg = SolverConfig::default().with_t_end(100.0).with_tol(1e-9, 1e-12);
            let tr = integrate_ode(full_field(&p), x0.to_array(), &cfg).unwrap();
            for s in tr.states() {
                drift = drift.max(((s[0] + s[1] + s[3]) * p.a_cyto - 1.0).abs());
                quotient = quotient.max((s[4] - s[5] / s[6]).abs() / s[4]);
            }
        }
        FullRun { drift, quotient, elapsed: t0.elapsed() }
    })
}

#[test]
fn c01_conserved_sum() {
    let r = full_runs();
    let ok = r.drift <= 1e-6 && r.elapsed < Duration::from_secs(1);
    report(1, "conserved sum", ok, format!("max drift {:.2e}, {}", r.drift, secs(r.elapsed)));
}

#[test]
fn c02_quotient_rule() {
    let r = full_runs();
    report(2, "N/C ratio consistency", r.quotient <= 1e-6, format!("max relative gap {:.2e}", r.quotient));
}

// ---------------------------------------------------------------- 3

#[test]
fn c03_jacobian_vs_differences() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut uniform = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = ModelParams {
            k_c: 0.5 + 5.0 * uniform(),
            tau: 10f64.powf(-2.0 + 4.0 * uniform()),
            ..Default::default()
        };
        let total = 0.1 + 10.0 * uniform();
        let frac = 0.01 + 0.98 * uniform();
        let x = [(1.0 - frac) * total, frac * total];
        let j = jacobian_reduced_arr(x, &p);
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for k in 0..2 {
            let h = 1e-6 * x[k].abs().max(1e-3);
            let (mut xp, mut xm) = (x, x);
            xp[k] += h;
            xm[k] -= h;
            let (fp, fm) = (rhs_reduced_arr(xp, &p), rhs_reduced_arr(xm, &p));
            for i in 0..2 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                num = num.max((fd - j[i][k]).abs());
                den = den.max(j[i][k].abs());
            }
        }
        worst = worst.max(num / den.max(1e-300));
    }
    let el = t0.elapsed();
    let ok = worst <= 1e-5 && el < Duration::from_secs(1);
    report(3, "Jacobian vs central differences", ok, format!("worst relative error {worst:.2e}, {}", secs(el)));
}

// ---------------------------------------------------------------- 4

/// Growth factor of a small perturbation of the equilibrium near `x`.
fn perturbation_growth(p: &ModelParams, x: [f64; 2]) -> f64 {
    let xe = newton_equilibrium(x, p).expect("equilibrium persists");
    let ev = eigenvalues_2x2(jacobian_reduced_arr(xe, p));
    let (re, im) = (ev[0].re, ev[0].im.abs());
    // ten e-folds of the linear rate, and a few turns for a focus
    let turn = if im > 0.0 { 2.0 * std::f64::consts::PI / im } else { 0.0 };
    let t_end = (10.0 / re.abs()).max(5.0 * turn).min(2e4);
    let d0 = 1e-4 * (xe[0] + xe[1]);
    let x0 = [xe[0] + d0, xe[1]];
    let cfg = SolverConfig::default().with_t_end(t_end).with_tol(1e-10, 1e-13);
    let tr = integrate_ode(reduced_field(p), x0, &cfg).unwrap_or_else(|e| panic!("{e} at {p:?}, t_end {t_end}"));
    let tail = tr.after(t_end - turn.max(0.1 * t_end));
    let d1 = tail.states().map(|s| (s[0] - xe[0]).hypot(s[1] - xe[1])).fold(0.0, f64::max);
    d1 / d0
}

#[test]
fn c04_hopf_certificate() {
    let mut checked = 0;
    let mut failures = Vec::new();
    for (tau, range) in [(0.01, (0.5, 6.0)), (0.5, (1.0, 4.0)), (50.0, (1.0, 3.0))] {
        let br = hopf_at(tau, range);
        for ev in br.events_of(EventKind::Hopf) {
            checked += 1;
            let (tr, det) = (ev.tests[0], ev.tests[1]);
            if !(tr.abs() <= 1e-8 && det > 0.0) {
                failures.push(format!("tau={tau} K_c={}: tr={tr:e} det={det:e}", ev.u[2]));
                continue;
            }
            let lam = ev.u[2];
            let below = br.points[ev.index].u[2] < lam;
            let (stable_lo, stable_hi) = if below {
                (br.points[ev.index].stable, br.points[ev.index + 1].stable)
            } else {
                (br.points[ev.index + 1].stable, br.points[ev.index].stable)
            };
            for (side, stable) in [(0.99, stable_lo), (1.01, stable_hi)] {
                let p = ModelParams { tau, k_c: lam * side, ..Default::default() };
                let g = perturbation_growth(&p, [ev.u[0], ev.u[1]]);
                let decays = g < 1.0;
                if Some(decays) != stable {
                    failures.push(format!("tau={tau} K_c={lam}*{side}: growth {g:.3} vs stable={stable:?}"));
                }
            }
        }
    }
    let ok = checked >= 6 && failures.is_empty();
    report(4, "Hopf certificate", ok, format!("{checked} Hopf points checked; failures: {failures:?}"));
}

// ---------------------------------------------------------------- 5

#[test]
fn c05_lyapunov_oracle() {
    let t0 = Instant::now();
    let mut bad = Vec::new();
    for a in [-1.0, -0.1, 0.1, 1.0] {
        let l1 = first_lyapunov_field(&CubicNormalForm { a }, [0.0, 0.0]).unwrap();
        if l1.signum() != a.signum() || l1 == 0.0 {
            bad.push(format!("a={a}: l1={l1:e}"));
        }
    }
    let l0 = first_lyapunov_field(&CubicNormalForm { a: 0.0 }, [0.0, 0.0]).unwrap();
    if l0.abs() > 1e-6 {
        bad.push(format!("a=0: l1={l0:e}"));
    }
    let el = t0.elapsed();
    let ok = bad.is_empty() && el < Duration::from_secs(1);
    report(5, "l1 normal-form oracle", ok, format!("l1(a=0)={l0:e}, {}, mismatches {bad:?}", secs(el)));
}

// ---------------------------------------------------------------- 6, 7

fn hopf_curve(k_nt: f64) -> phosdyn::continuation::HopfCurve {
    let cfg = StepConfig { max_points: 5000, ..Default::default() };
    let p = ModelParams { k_nt, tau: 0.01, ..Default::default() };
    let (ps, x) = find_hopf_seed(&p, Param::Kc, (0.05, 20.0), &cfg).unwrap().expect("Hopf point at small tau");
    continue_hopf_curve(&ps, (Param::Tau, Param::Kc), x, [(0.005, 500.0), (0.01, 100.0)], &cfg).unwrap()
}

#[test]
fn c06_bell_shaped_hopf_locus() {
    let t0 = Instant::now();
    let c = hopf_curve(0.1);
    let el = t0.elapsed();
    let taus: Vec<f64> = c.bautin.iter().map(|b| b.params[0]).collect();
    let ok = c.bounds_region()
        && c.bautin.len() == 2
        && taus.iter().all(|t| (20.0..=60.0).contains(t))
        && c.bautin.iter().all(|b| b.l1.abs() <= 1e-6)
        && el < Duration::from_secs(120);
    report(
        6,
        "bell-shaped Hopf locus",
        ok,
        format!("ends {:?}, Bautin at tau {taus:?}, {}", c.ends, secs(el)),
    );
}

#[test]
fn c07_monotone_shrinkage() {
    let t0 = Instant::now();
    let areas: Vec<f64> = [0.05, 0.1, 0.2, 0.4].iter().map(|&k| hopf_curve(k).enclosed_area()).collect();
    let el = t0.elapsed();
    let ok = areas.windows(2).all(|w| w[1] < w[0]) && el < Duration::from_secs(600);
    report(7, "Hopf region shrinks with k_nt", ok, format!("areas {areas:.3?}, {}", secs(el)));
}

// ---------------------------------------------------------------- 8

#[test]
fn c08_three_regimes() {
    let t0 = Instant::now();
    let rows: Vec<(Regime, Option<f64>, f64)> = (0..=16)
        .into_par_iter()
        .map(|i| {
            let kc = 0.5 + 0.25 * i as f64;
            let p = ModelParams { k_c: kc, ..Default::default() };
            // ten periods of observation at the longest period in the window
            let r = classify_regime(&p, &default_probes(&p), 1000.0, 700.0, &RegimeOptions::default()).unwrap();
            (r.label, r.stable_frac(), kc)
        })
        .collect();
    let mut seq: Vec<(Regime, Option<f64>, f64)> = Vec::new();
    for r in rows {
        if seq.last().map(|s| s.0) != Some(r.0) {
            seq.push(r);
        }
    }
    let el = t0.elapsed();
    let labels: Vec<Regime> = seq.iter().map(|s| s.0).collect();
    let ok = labels == [Regime::UniqueStableEq, Regime::UniqueStableCycle, Regime::UniqueStableEq]
        && seq[0].1.unwrap_or(0.0) > 0.5
        && seq[2].1.unwrap_or(1.0) < 0.5
        && el < Duration::from_secs(60);
    report(8, "three-regime ordering", ok, format!("{seq:?}, {}", secs(el)));
}

// ---------------------------------------------------------------- 9

/// Below and above the Bautin points of the k_nt = 0.1 Hopf curve.
const TAU_SUB: f64 = 30.0;
const TAU_SUPER: f64 = 50.0;

#[test]
fn c09_sub_super_dichotomy() {
    let t0 = Instant::now();
    let (kc_h, x_h) = hopf_values(TAU_SUPER, (1.0, 3.0))[0];
    let ph = ModelParams { tau: TAU_SUPER, k_c: kc_h, ..Default::default() };
    let mut pts = Vec::new();
    for eps in [1e-3, 2e-3, 5e-3] {
        let (pc, c) = cycle_from_hopf(&ph, Param::Kc, x_h, eps).unwrap();
        assert!(c.stable(), "supercritical cycle should be stable");
        pts.push(((pc.k_c - kc_h).ln(), c.amplitude().ln()));
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let delta = pts[2].0.exp();
    let a_super = pts[2].1.exp();

    let (kc_s, _) = hopf_values(TAU_SUB, (1.0, 3.0))[0];
    let ps = ModelParams { tau: TAU_SUB, k_c: kc_s + delta, ..Default::default() };
    let probe = default_probes(&ps)[4].to_array();
    let big = cycle_from_simulation(&ps, probe, 3000.0, 1000.0, false).unwrap();
    let ratio = big.amplitude() / a_super;
    let el = t0.elapsed();
    let ok = (slope - 0.5).abs() <= 0.1 && ratio >= 10.0 && el < Duration::from_secs(300);
    report(
        9,
        "sub/supercritical dichotomy",
        ok,
        format!("slope {slope:.4}, jump {:.4} vs {a_super:.4} at offset {delta:.2e} (x{ratio:.1}), {}", big.amplitude(), secs(el)),
    );
}

// ---------------------------------------------------------------- 10

#[test]
fn c10_region_three_coexistence() {
    let t0 = Instant::now();
    let (kc_h, x_h) = hopf_values(TAU_SUB, (1.0, 3.0))[0];
    let ph = ModelParams { tau: TAU_SUB, k_c: kc_h, ..Default::default() };
    let (pc, seed) = cycle_from_hopf(&ph, Param::Kc, x_h, 1e-3).unwrap();
    let br = continue_cycle(&pc, Param::Kc, (1.0, 3.0), &seed, &StepConfig::default()).unwrap();
    let el = t0.elapsed();
    let folds: Vec<_> = br.events_of(EventKind::CycleFold).collect();
    let kc = br.values("K_c");
    let mu: Vec<f64> = br.points.iter().map(|q| q.tests[0] + 1.0).collect();
    let mut detail = format!("{} folds, {}", folds.len(), secs(el));
    let ok = folds.iter().any(|f| {
        if f.tests[0].abs() > 1e-6 {
            return false;
        }
        let at = f.u[3];
        // unstable and stable points on both sides of the fold, over the same K_c
        let i = f.index;
        let before: Vec<usize> = (0..=i).collect();
        let after: Vec<usize> = (i + 1..kc.len()).collect();
        let unstable_side = if mu[i] > 1.0 { &before } else { &after };
        let stable_side = if mu[i] > 1.0 { &after } else { &before };
        let lo = at;
        let hi = at + 0.5 * (kc_h - at).abs();
        let has = |side: &Vec<usize>, pred: &dyn Fn(f64) -> bool| {
            side.iter().any(|&k| kc[k] > lo.min(hi) && kc[k] < hi.max(lo) && pred(mu[k].abs()))
        };
        let coexist = has(unstable_side, &|m| m > 1.0) && has(stable_side, &|m| m < 1.0);
        detail = format!("fold at K_c={at:.6} |mu-1|={:.1e}, coexistence={coexist}, {}", f.tests[0].abs(), secs(el));
        coexist
    }) && el < Duration::from_secs(300);
    report(10, "Region III coexistence", ok, detail);
}

// ---------------------------------------------------------------- 11

/// Physical box: the cytoplasm cannot hold more cargo than `1/A_cyto`.
fn physical_box(p: &ModelParams) -> SearchBox {
    SearchBox { total: (1e-6, 1.0 / p.a_cyto), frac: (0.0, 1.0) }
}

fn bistable_triple(p: &ModelParams) -> bool {
    let eqs = find_equilibria(p, physical_box(p), DEFAULT_GRID);
    let stable = eqs.iter().filter(|e| e.kind.is_stable()).count();
    eqs.len() == 3 && stable == 2
}

/// Where the calibrated defaults put the bistable window at tau = 5,
/// k_nt = 0.00397.
const BISTABLE_SEGMENT: (f64, f64) = (6.5, 8.5);

#[test]
fn c11_bistable_equilibria() {
    let t0 = Instant::now();
    let base = ModelParams { tau: 5.0, k_nt: 0.00397, ..Default::default() };
    let at_nominal = bistable_triple(&base.with(Param::Kc, 14.2));
    let hits: Vec<f64> = (0..=8)
        .map(|i| BISTABLE_SEGMENT.0 + (BISTABLE_SEGMENT.1 - BISTABLE_SEGMENT.0) * i as f64 / 8.0)
        .filter(|&kc| bistable_triple(&base.with(Param::Kc, kc)))
        .collect();
    let el = t0.elapsed();
    let ok = (at_nominal || !hits.is_empty()) && el < Duration::from_secs(30);
    report(
        11,
        "bistable equilibria",
        ok,
        format!("triple at K_c=14.2: {at_nominal}; on segment K_c {BISTABLE_SEGMENT:?} at {hits:?}, {}", secs(el)),
    );
}

// ---------------------------------------------------------------- 12, 13, 14

const SR_SEED: u64 = 20240101;
const PERIOD_SEED: u64 = 4242;

/// Just past the upper end of the tau = 0.5 oscillation window.
fn sr_params() -> ModelParams {
    ModelParams { tau: 0.5, k_c: 2.9, ..Default::default() }
}

fn sr_sigmas() -> Vec<f64> {
    (0..=12).map(|i| 10f64.powf(-4.0 + 0.25 * i as f64)).collect()
}

fn sr_once() -> ResonanceCurve {
    let run = NoiseRun { t_end: 2500.0, ..Default::default() };
    sr_sweep(&sr_params(), &sr_sigmas(), &run, 10, SR_SEED).unwrap()
}

fn sr_cached() -> &'static (ResonanceCurve, Duration) {
    static SR: OnceLock<(ResonanceCurve, Duration)> = OnceLock::new();
    SR.get_or_init(|| {
        let t0 = Instant::now();
        let c = sr_once();
        (c, t0.elapsed())
    })
}

#[test]
fn c12_stochastic_resonance() {
    let (c, el) = sr_cached();
    let k = c.peak();
    let baseline = c.amplitudes[0];
    let peak = c.amplitudes[k];
    let sigma = c.sigmas[k];
    // deterministic period near the window end bounds the observed cycle count
    let cycles = (1.0 - c.run.transient) * c.run.t_end / 100.0;
    let ok = k > 0
        && k + 1 < c.sigmas.len()
        && c.is_unimodal(2.0)
        && peak >= 3.0 * baseline
        && (sigma.log10() + 2.0).abs() <= 1.0
        && cycles >= 20.0
        && *el < Duration::from_secs(300);
    report(
        12,
        "stochastic resonance",
        ok,
        format!("peak {peak:.4e} at sigma {sigma:.2e}, baseline {baseline:.2e} (x{:.0}), >= {cycles:.0} cycles, {}", peak / baseline, secs(*el)),
    );
}

struct Slice {
    tau: f64,
    t_end: f64,
}

const SUB_SLICE: Slice = Slice { tau: 0.5, t_end: 2500.0 };
const SUPER_SLICE: Slice = Slice { tau: 60.0, t_end: 10000.0 };
/// Positions inside the Hopf window, as a share of its width.
const WINDOW_POSITIONS: [f64; 2] = [0.3, 0.5];

fn periods_once(s: &Slice) -> Vec<(f64, PeriodStats)> {
    let h = hopf_values(s.tau, (1.0, 4.0));
    let (a, b) = (h[0].0, h[1].0);
    let run = NoiseRun { t_end: s.t_end, ..Default::default() };
    WINDOW_POSITIONS
        .iter()
        .map(|w| {
            let p = ModelParams { tau: s.tau, k_c: a + w * (b - a), ..Default::default() };
            let th = Thresholds::for_cycle(&p, &run, 0.8).unwrap().expect("deterministic oscillation");
            (p.k_c, period_statistics(&p, 0.01, 50, &run, PERIOD_SEED, th).unwrap())
        })
        .collect()
}

fn periods_cached() -> &'static (Vec<(f64, PeriodStats)>, Vec<(f64, PeriodStats)>, Duration) {
    static P: OnceLock<(Vec<(f64, PeriodStats)>, Vec<(f64, PeriodStats)>, Duration)> = OnceLock::new();
    P.get_or_init(|| {
        let t0 = Instant::now();
        let sub = periods_once(&SUB_SLICE);
        let sup = periods_once(&SUPER_SLICE);
        (sub, sup, t0.elapsed())
    })
}

#[test]
fn c13_period_robustness() {
    let (sub, sup, el) = periods_cached();
    let cv = |v: &Vec<(f64, PeriodStats)>| v.iter().map(|r| r.1.cv).collect::<Vec<f64>>();
    let (cs, cp) = (cv(sub), cv(sup));
    let ok = cs.iter().all(|&c| c < 0.1)
        && cp.iter().all(|&c| (0.1..=0.5).contains(&c))
        && cs.iter().zip(&cp).all(|(a, b)| a < b)
        && sub.iter().chain(sup.iter()).all(|r| r.1.n_traj == 50 && r.1.oscillating())
        && *el < Duration::from_secs(600);
    report(
        13,
        "period robustness dichotomy",
        ok,
        format!("tau=0.5 CV {cs:.3?}, tau=60 CV {cp:.3?}, {}", secs(*el)),
    );
}

#[test]
fn c14_reproducibility() {
    let first = sr_cached().0.to_csv();
    let again = sr_once().to_csv();
    let (sub, sup, _) = periods_cached();
    let table = |v: &[(f64, PeriodStats)]| phosdyn::stochastic::period_table_csv(v);
    let same_periods = table(sub) == table(&periods_once(&SUB_SLICE)) && table(sup) == table(&periods_once(&SUPER_SLICE));
    let ok = first == again && same_periods;
    report(
        14,
        "reproducibility",
        ok,
        format!("resonance CSV identical: {}, period CSVs identical: {same_periods}", first == again),
    );
}
