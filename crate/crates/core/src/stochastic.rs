//! Noise-driven behaviour: stochastic resonance measured by the largest
//! Fourier amplitude of `c_no`, and the spread of oscillation periods.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{derive_seed, detect_crossings, integrate_sde, SolverConfig, Trajectory};
use crate::model::{ModelParams, Param};
use crate::phase::{default_probes, equilibria};

/// Shortest series accepted by [`fourier_peak_amplitude`].
pub const MIN_SERIES: usize = 16;

/// Largest modulus over strictly positive frequencies of the DFT of the
/// mean-free series, divided by the transform length.
///
/// The transform uses the leading `2^k <= len` samples without a window, so
/// `A sin(2 pi f t)` over a whole number of periods gives `A / 2`.
pub fn fourier_peak_amplitude_series(v: &[f64]) -> Result<f64> {
    if v.len() < MIN_SERIES {
        return Err(Error::TooShort { len: v.len(), min: MIN_SERIES });
    }
    let n = 1usize << (usize::BITS - 1 - v.len().leading_zeros());
    let v = &v[..n];
    let mean = v.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let peak = buf[1..=n / 2].iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(peak / n as f64)
}

/// [`fourier_peak_amplitude_series`] of an observable along a uniformly
/// sampled trajectory.
pub fn fourier_peak_amplitude(traj: &Trajectory, observable: impl Fn(&[f64]) -> f64) -> Result<f64> {
    let t = &traj.times;
    if t.len() >= 3 {
        let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
        if t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
            return Err(Error::Precondition("trajectory is not uniformly sampled".into()));
        }
    }
    fourier_peak_amplitude_series(&traj.observe(observable))
}

/// Settings shared by every stochastic ensemble run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRun {
    pub t_end: f64,
    pub dt: f64,
    /// Record every `stride`-th step.
    pub stride: usize,
    /// Share of `t_end` discarded before analysis.
    pub transient: f64,
    /// Start state; by default the only stable equilibrium if there is
    /// exactly one, otherwise a fixed probe point.
    pub x0: Option<[f64; 2]>,
}

impl Default for NoiseRun {
    fn default() -> Self {
        Self {
            t_end: 2500.0,
            dt: 1e-2,
            stride: 10,
            transient: 0.2,
            x0: None,
        }
    }
}

impl NoiseRun {
    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.transient) {
            return Err(Error::Config(format!("transient share must lie in [0, 1), got {}", self.transient)));
        }
        self.solver().validate_sde()
    }

    fn solver(&self) -> SolverConfig {
        SolverConfig {
            dt: self.dt,
            t_end: self.t_end,
            stride: self.stride,
            ..Default::default()
        }
    }

    fn start(&self, p: &ModelParams) -> [f64; 2] {
        self.x0.unwrap_or_else(|| {
            let stable: Vec<_> = equilibria(p).into_iter().filter(|e| e.kind.is_stable()).collect();
            match stable.as_slice() {
                [e] => e.state.to_array(),
                _ => default_probes(p)[4].to_array(),
            }
        })
    }

    /// One post-transient trajectory at noise level `sigma`.
    pub fn trajectory(&self, p: &ModelParams, sigma: f64, seed: u64) -> Result<Trajectory> {
        self.validate()?;
        let p = ModelParams { sigma, ..*p };
        let tr = integrate_sde(self.start(&p), &self.solver(), &p, seed)?;
        Ok(tr.after(self.transient * self.t_end))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceCurve {
    pub sigmas: Vec<f64>,
    /// Seed average of the peak amplitude, per noise level.
    pub amplitudes: Vec<f64>,
    /// Standard error of that average.
    pub stderr: Vec<f64>,
    /// `per_seed[i][k]`: amplitude at `sigmas[i]` for seed `k`.
    pub per_seed: Vec<Vec<f64>>,
    pub run: NoiseRun,
    pub n_seeds: usize,
    pub base_seed: u64,
}

impl ResonanceCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("sigma,mean_amplitude,stderr\n");
        for i in 0..self.sigmas.len() {
            s.push_str(&format!("{},{},{}\n", self.sigmas[i], self.amplitudes[i], self.stderr[i]));
        }
        s
    }

    /// Index of the largest mean amplitude.
    pub fn peak(&self) -> usize {
        (0..self.amplitudes.len())
            .max_by(|&a, &b| self.amplitudes[a].total_cmp(&self.amplitudes[b]))
            .unwrap_or(0)
    }

    /// True if the means rise to a single maximum and then fall, ignoring
    /// wiggles within `slack` standard errors.
    pub fn is_unimodal(&self, slack: f64) -> bool {
        let k = self.peak();
        let a = &self.amplitudes;
        let tol = |i: usize, j: usize| slack * (self.stderr[i] + self.stderr[j]);
        (1..=k).all(|i| a[i] >= a[i - 1] - tol(i, i - 1)) && (k + 1..a.len()).all(|i| a[i] <= a[i - 1] + tol(i, i - 1))
    }
}

fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Peak Fourier amplitude of `c_no` against noise level, averaged over
/// `n_seeds` trajectories per level. Seed `k` is shared by all levels.
pub fn sr_sweep(
    params: &ModelParams,
    sigmas: &[f64],
    run: &NoiseRun,
    n_seeds: usize,
    base_seed: u64,
) -> Result<ResonanceCurve> {
    if sigmas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("noise levels must be strictly increasing".into()));
    }
    if n_seeds == 0 {
        return Err(Error::Precondition("need at least one seed".into()));
    }
    run.validate()?;
    let jobs: Vec<(usize, usize)> = (0..sigmas.len()).flat_map(|i| (0..n_seeds).map(move |k| (i, k))).collect();
    let amps = jobs
        .par_iter()
        .map(|&(i, k)| {
            let tr = run.trajectory(params, sigmas[i], derive_seed(base_seed, k as u64))?;
            fourier_peak_amplitude(&tr, |x| x[0])
        })
        .collect::<Result<Vec<f64>>>()?;
    let per_seed: Vec<Vec<f64>> = amps.chunks(n_seeds).map(<[f64]>::to_vec).collect();
    let (amplitudes, stderr) = per_seed.iter().map(|v| mean_stderr(v)).unzip();
    Ok(ResonanceCurve {
        sigmas: sigmas.to_vec(),
        amplitudes,
        stderr,
        per_seed,
        run: run.clone(),
        n_seeds,
        base_seed,
    })
}

/// Hysteresis band on the phosphorylated fraction `c_nop / (c_no + c_nop)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub up: f64,
    pub down: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { up: 0.6, down: 0.4 }
    }
}

impl Thresholds {
    /// Band covering the central `width` share of `[lo, hi]`.
    pub fn centred(lo: f64, hi: f64, width: f64) -> Self {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * width * (hi - lo);
        Self { up: mid + half, down: mid - half }
    }

    /// Band inside the fraction range of the noise-free post-transient
    /// trajectory; `None` if that range is below `1e-6`.
    pub fn for_cycle(params: &ModelParams, run: &NoiseRun, width: f64) -> Result<Option<Self>> {
        let tr = run.trajectory(params, 0.0, 0)?;
        let f = tr.observe(phosphorylated_fraction);
        let (lo, hi) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        Ok((hi - lo > 1e-6).then(|| Self::centred(lo, hi, width)))
    }
}

pub fn phosphorylated_fraction(x: &[f64]) -> f64 {
    x[1] / (x[0] + x[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodStats {
    /// NaN when fewer than two intervals were found.
    pub mean_period: f64,
    pub cv: f64,
    pub n_periods: usize,
    pub n_traj: usize,
}

impl PeriodStats {
    pub fn oscillating(&self) -> bool {
        self.n_periods >= 2
    }

    /// Statistics of pooled intervals; the sort makes the result
    /// independent of the pooling order.
    pub fn from_intervals(mut intervals: Vec<f64>, n_traj: usize) -> Self {
        intervals.sort_by(f64::total_cmp);
        let n = intervals.len();
        if n < 2 {
            return Self { mean_period: f64::NAN, cv: f64::NAN, n_periods: n, n_traj };
        }
        let mean = intervals.iter().sum::<f64>() / n as f64;
        let var = intervals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        Self { mean_period: mean, cv: var.sqrt() / mean, n_periods: n, n_traj }
    }
}

/// Intervals between successive upward threshold crossings, without the
/// first one.
pub fn intervals_of(traj: &Trajectory, thresholds: Thresholds) -> Result<Vec<f64>> {
    let ev = detect_crossings(traj, phosphorylated_fraction, thresholds.up, thresholds.down)?;
    Ok(ev.windows(2).skip(1).map(|w| w[1] - w[0]).collect())
}

pub fn period_statistics(
    params: &ModelParams,
    sigma: f64,
    n_traj: usize,
    run: &NoiseRun,
    base_seed: u64,
    thresholds: Thresholds,
) -> Result<PeriodStats> {
    if !(thresholds.up > thresholds.down) {
        return Err(Error::Precondition(format!(
            "hysteresis band requires up > down, got up={}, down={}",
            thresholds.up, thresholds.down
        )));
    }
    run.validate()?;
    let per: Vec<Vec<f64>> = (0..n_traj)
        .into_par_iter()
        .map(|j| {
            let tr = run.trajectory(params, sigma, derive_seed(base_seed, j as u64))?;
            intervals_of(&tr, thresholds)
        })
        .collect::<Result<_>>()?;
    Ok(PeriodStats::from_intervals(per.concat(), n_traj))
}

/// [`period_statistics`] at each value of `free`; value `i` uses base seed
/// `derive_seed(base_seed, i)`.
#[allow(clippy::too_many_arguments)]
pub fn cv_vs_parameter(
    params: &ModelParams,
    free: Param,
    values: &[f64],
    sigma: f64,
    n_traj: usize,
    run: &NoiseRun,
    base_seed: u64,
    thresholds: Thresholds,
) -> Result<Vec<(f64, PeriodStats)>> {
    values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let p = params.with(free, v);
            let s = period_statistics(&p, sigma, n_traj, run, derive_seed(base_seed, i as u64), thresholds)?;
            Ok((v, s))
        })
        .collect()
}

pub fn period_table_csv(rows: &[(f64, PeriodStats)]) -> String {
    let mut s = String::from("param,mean_period,cv,n_periods\n");
    for (v, st) in rows {
        s.push_str(&format!("{v},{},{},{}\n", st.mean_period, st.cv, st.n_periods));
    }
    s
}
