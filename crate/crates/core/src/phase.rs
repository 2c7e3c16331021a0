//! Phase-plane tools in `(total, frac)` coordinates: nullclines,
//! equilibria with linear stability, and regime classification by
//! combining equilibria with simulation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::integrate::{integrate_ode, reduced_field, SolverConfig};
use crate::model::{jacobian_reduced_arr, rhs_reduced_arr, roots_on_unit_interval, ModelParams, PhasePoint, ReducedState, FRAC_GRID};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumKind {
    StableNode,
    StableFocus,
    UnstableNode,
    UnstableFocus,
    Saddle,
}

impl EquilibriumKind {
    pub fn is_stable(self) -> bool {
        matches!(self, EquilibriumKind::StableNode | EquilibriumKind::StableFocus)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EquilibriumKind::StableNode => "stable-node",
            EquilibriumKind::StableFocus => "stable-focus",
            EquilibriumKind::UnstableNode => "unstable-node",
            EquilibriumKind::UnstableFocus => "unstable-focus",
            EquilibriumKind::Saddle => "saddle",
        }
    }

    /// Classification from trace and determinant of a 2x2 Jacobian.
    pub fn classify(trace: f64, det: f64) -> Self {
        if det <= 0.0 {
            return EquilibriumKind::Saddle;
        }
        let focus = trace * trace - 4.0 * det < 0.0;
        match (trace < 0.0, focus) {
            (true, false) => EquilibriumKind::StableNode,
            (true, true) => EquilibriumKind::StableFocus,
            (false, false) => EquilibriumKind::UnstableNode,
            (false, true) => EquilibriumKind::UnstableFocus,
        }
    }
}

/// Eigenvalues of a real 2x2 matrix, larger real part first.
pub fn eigenvalues_2x2(m: [[f64; 2]; 2]) -> [Complex64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        [Complex64::new(tr / 2.0 + s, 0.0), Complex64::new(tr / 2.0 - s, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [Complex64::new(tr / 2.0, s), Complex64::new(tr / 2.0, -s)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub state: ReducedState,
    pub eigenvalues: [Complex64; 2],
    pub kind: EquilibriumKind,
    pub residual: f64,
}

impl Equilibrium {
    pub fn at(state: ReducedState, p: &ModelParams) -> Self {
        let x = state.to_array();
        let j = jacobian_reduced_arr(x, p);
        let f = rhs_reduced_arr(x, p);
        let tr = j[0][0] + j[1][1];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        Self {
            state,
            eigenvalues: eigenvalues_2x2(j),
            kind: EquilibriumKind::classify(tr, det),
            residual: f[0].hypot(f[1]),
        }
    }

    pub fn frac(&self) -> f64 {
        self.state.c_nop / self.state.total()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullclineKind {
    /// `dc_no/dt = 0`
    CNo,
    /// `dc_nop/dt = 0`
    CNop,
}

impl NullclineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NullclineKind::CNo => "c_no",
            NullclineKind::CNop => "c_nop",
        }
    }

    fn index(self) -> usize {
        match self {
            NullclineKind::CNo => 0,
            NullclineKind::CNop => 1,
        }
    }
}

/// One connected component of a nullcline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullclinePolyline {
    pub which: NullclineKind,
    pub points: Vec<PhasePoint>,
}

/// Residual bound for traced nullcline points.
pub const NULLCLINE_TOL: f64 = 1e-8;

/// Roots in `frac` of one right-hand-side component at fixed total.
pub fn nullcline_roots(total: f64, which: NullclineKind, p: &ModelParams) -> Vec<f64> {
    let k = which.index();
    let g = |f: f64| rhs_reduced_arr([(1.0 - f) * total, f * total], p)[k];
    roots_on_unit_interval(g, FRAC_GRID, NULLCLINE_TOL)
}

/// Link per-column roots into polylines by nearest-neighbour matching in
/// `frac`. Unmatched roots start new components; unmatched polylines end.
fn link_columns(which: NullclineKind, columns: &[(f64, Vec<f64>)]) -> Vec<NullclinePolyline> {
    let mut done = Vec::new();
    let mut active: Vec<NullclinePolyline> = Vec::new();
    for (total, roots) in columns {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ai, line) in active.iter().enumerate() {
            let last = line.points.last().expect("non-empty polyline").frac;
            for (ri, &r) in roots.iter().enumerate() {
                pairs.push(((last - r).abs(), ai, ri));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut line_used = vec![false; active.len()];
        let mut root_used = vec![false; roots.len()];
        for (_, ai, ri) in pairs {
            if line_used[ai] || root_used[ri] {
                continue;
            }
            line_used[ai] = true;
            root_used[ri] = true;
            active[ai].points.push(PhasePoint { total: *total, frac: roots[ri] });
        }
        let mut next = Vec::new();
        for (line, used) in active.into_iter().zip(line_used) {
            if used {
                next.push(line);
            } else {
                done.push(line);
            }
        }
        for (ri, &r) in roots.iter().enumerate() {
            if !root_used[ri] {
                next.push(NullclinePolyline {
                    which,
                    points: vec![PhasePoint { total: *total, frac: r }],
                });
            }
        }
        active = next;
    }
    done.extend(active);
    done
}

/// Nullclines on `n_total` uniformly spaced totals in `total_range`.
/// Returns `(c_no-nullcline components, c_nop-nullcline components)`.
pub fn trace_nullclines(
    p: &ModelParams,
    total_range: (f64, f64),
    n_total: usize,
) -> (Vec<NullclinePolyline>, Vec<NullclinePolyline>) {
    let (lo, hi) = total_range;
    let totals: Vec<f64> = match n_total {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    };
    let trace = |which| {
        let cols: Vec<(f64, Vec<f64>)> = totals
            .iter()
            .filter(|&&t| t > 0.0)
            .map(|&t| (t, nullcline_roots(t, which, p)))
            .collect();
        link_columns(which, &cols)
    };
    (trace(NullclineKind::CNo), trace(NullclineKind::CNop))
}

/// Rectangle in `(total, frac)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub total: (f64, f64),
    pub frac: (f64, f64),
}

impl SearchBox {
    /// `total in (0, 4/A_cyto]`, `frac in [0, 1]`.
    pub fn default_for(p: &ModelParams) -> Self {
        Self {
            total: (0.0, 4.0 / p.a_cyto),
            frac: (0.0, 1.0),
        }
    }
}

pub const EQUILIBRIUM_TOL: f64 = 1e-10;

/// Newton iteration on the reduced right-hand side.
pub fn newton_equilibrium(x0: [f64; 2], p: &ModelParams) -> Option<[f64; 2]> {
    let mut x = x0;
    for _ in 0..60 {
        let f = rhs_reduced_arr(x, p);
        let r = f[0].hypot(f[1]);
        if !r.is_finite() {
            return None;
        }
        let j = jacobian_reduced_arr(x, p);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx0 = (j[1][1] * f[0] - j[0][1] * f[1]) / det;
        let dx1 = (-j[1][0] * f[0] + j[0][0] * f[1]) / det;
        // damp steps that would leave the nonnegative quadrant
        let mut lam = 1.0;
        while lam > 1e-4 && (x[0] - lam * dx0 < 0.0 || x[1] - lam * dx1 < 0.0) {
            lam *= 0.5;
        }
        x = [x[0] - lam * dx0, x[1] - lam * dx1];
        let f = rhs_reduced_arr(x, p);
        let step = (lam * dx0).hypot(lam * dx1);
        if f[0].hypot(f[1]) <= EQUILIBRIUM_TOL && step <= 1e-9 * (1.0 + x[0].hypot(x[1])) {
            return Some(x);
        }
    }
    let f = rhs_reduced_arr(x, p);
    (f[0].hypot(f[1]) <= EQUILIBRIUM_TOL).then_some(x)
}

/// Equilibria inside `search_box`: Newton seeded from every grid cell in
/// which both right-hand-side components change sign, duplicates merged
/// within `1e-6`, sorted by `(total, frac)`.
pub fn find_equilibria(p: &ModelParams, search_box: SearchBox, grid: (usize, usize)) -> Vec<Equilibrium> {
    let (nx, ny) = (grid.0.max(1), grid.1.max(1));
    let (t0, t1) = (search_box.total.0.max(0.0), search_box.total.1);
    let (f0, f1) = (search_box.frac.0.max(0.0), search_box.frac.1.min(1.0));
    let tx = |i: usize| t0 + (t1 - t0) * i as f64 / nx as f64;
    let fy = |j: usize| f0 + (f1 - f0) * j as f64 / ny as f64;
    let node = |i: usize, j: usize| {
        let (t, f) = (tx(i).max(1e-12), fy(j));
        rhs_reduced_arr([(1.0 - f) * t, f * t], p)
    };
    let mut values = vec![[0.0; 2]; (nx + 1) * (ny + 1)];
    for i in 0..=nx {
        for j in 0..=ny {
            values[i * (ny + 1) + j] = node(i, j);
        }
    }
    let changes = |k: usize, c: [[f64; 2]; 4]| {
        let pos = c.iter().any(|v| v[k] >= 0.0);
        let neg = c.iter().any(|v| v[k] <= 0.0);
        pos && neg
    };
    let mut found: Vec<[f64; 2]> = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let c = [
                values[i * (ny + 1) + j],
                values[(i + 1) * (ny + 1) + j],
                values[i * (ny + 1) + j + 1],
                values[(i + 1) * (ny + 1) + j + 1],
            ];
            if !(changes(0, c) && changes(1, c)) {
                continue;
            }
            let t = 0.5 * (tx(i) + tx(i + 1));
            let f = 0.5 * (fy(j) + fy(j + 1));
            if let Some(x) = newton_equilibrium([(1.0 - f) * t, f * t], p) {
                let total = x[0] + x[1];
                let frac = if total > 0.0 { x[1] / total } else { 0.0 };
                let inside = total >= t0 && total <= t1 && frac >= f0 - 1e-12 && frac <= f1 + 1e-12;
                if inside && !found.iter().any(|y| (y[0] - x[0]).hypot(y[1] - x[1]) <= 1e-6) {
                    found.push(x);
                }
            }
        }
    }
    let mut eqs: Vec<Equilibrium> = found
        .into_iter()
        .map(|x| Equilibrium::at(ReducedState::from_array(x), p))
        .collect();
    eqs.sort_by(|a, b| {
        a.state
            .total()
            .total_cmp(&b.state.total())
            .then(a.frac().total_cmp(&b.frac()))
    });
    eqs
}

/// Default resolution for [`find_equilibria`].
pub const DEFAULT_GRID: (usize, usize) = (400, 200);

pub fn equilibria(p: &ModelParams) -> Vec<Equilibrium> {
    find_equilibria(p, SearchBox::default_for(p), DEFAULT_GRID)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    UniqueStableEq,
    UniqueStableCycle,
    CycleEqCoexistence,
    BistableEquilibria,
    Indeterminate,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::UniqueStableEq => "unique-stable-eq",
            Regime::UniqueStableCycle => "unique-stable-cycle",
            Regime::CycleEqCoexistence => "cycle-eq-coexistence",
            Regime::BistableEquilibria => "bistable-equilibria",
            Regime::Indeterminate => "indeterminate",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeOptions {
    /// Minimal post-transient peak-to-trough amplitude of `c_no`.
    pub amplitude_floor: f64,
    /// Allowed relative spread of successive inter-peak intervals.
    pub period_tol: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for RegimeOptions {
    fn default() -> Self {
        Self {
            amplitude_floor: 1e-3,
            period_tol: 0.05,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
        }
    }
}

/// Outcome of one probe simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProbeOutcome {
    Oscillation { amplitude: f64, period: f64 },
    /// Converged to the stable equilibrium with this index.
    Equilibrium(usize),
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub label: Regime,
    pub equilibria: Vec<Equilibrium>,
    pub probes: Vec<ProbeOutcome>,
}

impl RegimeReport {
    /// Fraction of the unique stable equilibrium, if there is one.
    pub fn stable_frac(&self) -> Option<f64> {
        let stable: Vec<&Equilibrium> = self.equilibria.iter().filter(|e| e.kind.is_stable()).collect();
        (stable.len() == 1).then(|| stable[0].frac())
    }
}

/// Local maxima (index) of a sampled series.
pub(crate) fn peaks(v: &[f64]) -> Vec<usize> {
    (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1])
        .collect()
}

/// Peak-based oscillation test on a uniformly sampled, post-transient
/// series. Returns `(amplitude, mean period)` when the series is a
/// sustained, regular oscillation.
pub fn oscillation_of(times: &[f64], v: &[f64], opts: &RegimeOptions) -> Option<(f64, f64)> {
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let amplitude = hi - lo;
    if !(amplitude > opts.amplitude_floor) {
        return None;
    }
    // peaks of significant prominence only
    let mid = 0.5 * (lo + hi);
    let pk: Vec<usize> = peaks(v).into_iter().filter(|&i| v[i] > mid).collect();
    if pk.len() < 3 {
        return None;
    }
    let intervals: Vec<f64> = pk.windows(2).map(|w| times[w[1]] - times[w[0]]).collect();
    let (imin, imax) = intervals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if imax > imin * (1.0 + opts.period_tol) {
        return None;
    }
    // sustained: first and last peak heights agree
    let (h0, h1) = (v[pk[0]] - lo, v[*pk.last().unwrap()] - lo);
    if (h0 - h1).abs() > opts.period_tol * h0.max(h1) {
        return None;
    }
    Some((amplitude, intervals.iter().sum::<f64>() / intervals.len() as f64))
}

/// Regime label from equilibria and post-transient probe simulations.
pub fn classify_regime(
    p: &ModelParams,
    probes: &[ReducedState],
    t_transient: f64,
    t_observe: f64,
    opts: &RegimeOptions,
) -> Result<RegimeReport> {
    let eqs = equilibria(p);
    let stable: Vec<usize> = (0..eqs.len()).filter(|&i| eqs[i].kind.is_stable()).collect();
    let t_end = t_transient + t_observe;
    let n_out = 4000usize;
    let mut outcomes = Vec::with_capacity(probes.len());
    for probe in probes {
        let times: Vec<f64> = (0..=n_out).map(|i| t_transient + t_observe * i as f64 / n_out as f64).collect();
        let cfg = SolverConfig {
            rel_tol: opts.rel_tol,
            abs_tol: opts.abs_tol,
            t_end,
            output_times: Some(times),
            ..Default::default()
        };
        let tr = match integrate_ode(reduced_field(p), probe.to_array(), &cfg) {
            Ok(tr) => tr,
            Err(_) => {
                outcomes.push(ProbeOutcome::Unresolved);
                continue;
            }
        };
        let c_no = tr.component(0);
        if let Some((amplitude, period)) = oscillation_of(&tr.times, &c_no, opts) {
            outcomes.push(ProbeOutcome::Oscillation { amplitude, period });
            continue;
        }
        let last = tr.last_state().expect("non-empty");
        let scale = 1e-3 * (1.0 + last[0].hypot(last[1]));
        let hit = stable.iter().copied().find(|&i| {
            let s = eqs[i].state;
            (s.c_no - last[0]).hypot(s.c_nop - last[1]) <= scale
        });
        outcomes.push(hit.map_or(ProbeOutcome::Unresolved, ProbeOutcome::Equilibrium));
    }
    let oscillates = outcomes.iter().any(|o| matches!(o, ProbeOutcome::Oscillation { .. }));
    let unresolved = outcomes.iter().any(|o| matches!(o, ProbeOutcome::Unresolved));
    let label = if unresolved {
        Regime::Indeterminate
    } else if oscillates {
        if stable.is_empty() {
            Regime::UniqueStableCycle
        } else {
            Regime::CycleEqCoexistence
        }
    } else {
        match stable.len() {
            0 => Regime::Indeterminate,
            1 => Regime::UniqueStableEq,
            _ => Regime::BistableEquilibria,
        }
    };
    Ok(RegimeReport {
        label,
        equilibria: eqs,
        probes: outcomes,
    })
}

/// Probe set spread over the physically relevant part of the plane.
pub fn default_probes(p: &ModelParams) -> Vec<ReducedState> {
    let mut out = Vec::new();
    for &t in &[0.25 * p.k_c, p.k_c, 2.0 * p.k_c] {
        for &f in &[0.05, 0.5, 0.95] {
            out.push(PhasePoint { total: t, frac: f }.to_state());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_by_trace_det() {
        assert_eq!(EquilibriumKind::classify(-3.0, 1.0), EquilibriumKind::StableNode);
        assert_eq!(EquilibriumKind::classify(-1.0, 1.0), EquilibriumKind::StableFocus);
        assert_eq!(EquilibriumKind::classify(3.0, 1.0), EquilibriumKind::UnstableNode);
        assert_eq!(EquilibriumKind::classify(1.0, 1.0), EquilibriumKind::UnstableFocus);
        assert_eq!(EquilibriumKind::classify(1.0, -1.0), EquilibriumKind::Saddle);
        assert_eq!(EquilibriumKind::classify(-1.0, -1.0), EquilibriumKind::Saddle);
    }

    #[test]
    fn eigenvalues_match_trace_and_det() {
        let m = [[1.0, -2.0], [3.0, -0.5]];
        let ev = eigenvalues_2x2(m);
        let sum = ev[0] + ev[1];
        let prod = ev[0] * ev[1];
        assert!((sum.re - 0.5).abs() < 1e-14 && sum.im.abs() < 1e-14);
        assert!((prod.re - 5.5).abs() < 1e-13 && prod.im.abs() < 1e-13);
    }

    #[test]
    fn linking_splits_at_folds() {
        let cols = vec![
            (1.0, vec![0.1]),
            (2.0, vec![0.12, 0.5, 0.9]),
            (3.0, vec![0.13, 0.6, 0.92]),
            (4.0, vec![0.95]),
        ];
        let lines = link_columns(NullclineKind::CNo, &cols);
        assert_eq!(lines.len(), 3);
        let lens: Vec<usize> = lines.iter().map(|l| l.points.len()).collect();
        assert!(lens.contains(&3) && lens.contains(&2));
        for l in &lines {
            assert!(l.points.windows(2).all(|w| w[1].total > w[0].total));
        }
    }

    #[test]
    fn empty_box_gives_no_equilibria() {
        let p = ModelParams::default();
        let b = SearchBox { total: (1e3, 2e3), frac: (0.0, 1.0) };
        assert!(find_equilibria(&p, b, (20, 20)).is_empty());
    }

    #[test]
    fn oscillation_detector() {
        let t: Vec<f64> = (0..4000).map(|i| i as f64 * 0.01).collect();
        let opts = RegimeOptions::default();
        let s: Vec<f64> = t.iter().map(|t| (t * 2.0).sin()).collect();
        let (a, per) = oscillation_of(&t, &s, &opts).unwrap();
        assert!((a - 2.0).abs() < 1e-3);
        assert!((per - std::f64::consts::PI).abs() < 0.02);
        let decay: Vec<f64> = t.iter().map(|t| (-0.2 * t).exp() * (t * 2.0).sin()).collect();
        assert!(oscillation_of(&t, &decay, &opts).is_none());
        let flat = vec![1.0; t.len()];
        assert!(oscillation_of(&t, &flat, &opts).is_none());
    }
}
