//! Adaptive Dormand–Prince 5(4) integration, Euler–Maruyama for the noisy
//! reduced model, and hysteresis crossing detection.
//!
//! # Random numbers
//!
//! Every stochastic trajectory draws from a ChaCha20 stream. The 32-byte key
//! is four little-endian SplitMix64 outputs started from the trajectory seed;
//! a member of an ensemble uses `derive_seed(base_seed, index)`. Standard
//! normals come in pairs from the Box–Muller transform of two uniforms built
//! as `(next_u64 >> 11) * 2^-53`, the first mapped to `(0, 1]` by `1 - u`.
//! One pair is consumed per Euler–Maruyama step (`c_no` takes the cosine
//! branch, `c_nop` the sine branch).

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rhs_reduced_arr, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Fixed step of the stochastic integrator.
    pub dt: f64,
    pub t_end: f64,
    pub max_steps: usize,
    /// Sample grid for dense output. `None` records every accepted step
    /// (deterministic) or every `stride`-th step (stochastic).
    pub output_times: Option<Vec<f64>>,
    /// Record every `stride`-th Euler–Maruyama step.
    pub stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            dt: 1e-3,
            t_end: 100.0,
            max_steps: 10_000_000,
            output_times: None,
            stride: 1,
        }
    }
}

impl SolverConfig {
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_tol(mut self, rel: f64, abs: f64) -> Self {
        self.rel_tol = rel;
        self.abs_tol = abs;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    /// Uniform output grid `0, dt_out, 2 dt_out, ..., <= t_end`.
    pub fn with_uniform_output(mut self, dt_out: f64) -> Self {
        let n = (self.t_end / dt_out + 1e-9).floor() as usize;
        self.output_times = Some((0..=n).map(|i| i as f64 * dt_out).collect());
        self
    }

    pub fn validate_ode(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Config("tolerances must be > 0".into()));
        }
        self.validate_common()
    }

    pub fn validate_sde(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be >= 1".into()));
        }
        self.validate_common()
    }

    fn validate_common(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be > 0, got {}", self.t_end)));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be >= 1".into()));
        }
        if let Some(ts) = &self.output_times {
            if ts.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Config("output_times must be strictly increasing".into()));
            }
            if ts.first().is_some_and(|&t| t < 0.0) || ts.last().is_some_and(|&t| t > self.t_end) {
                return Err(Error::Config("output_times must lie in [0, t_end]".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub solver: String,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub negative_excursions: u64,
    pub steps: u64,
    pub rejected: u64,
}

/// Time-stamped samples stored row-major in a flat buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dim: usize,
    pub times: Vec<f64>,
    pub data: Vec<f64>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    fn new(dim: usize, meta: TrajectoryMeta) -> Self {
        Self {
            dim,
            times: Vec::new(),
            data: Vec::new(),
            meta,
        }
    }

    fn push(&mut self, t: f64, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.times.push(t);
        self.data.extend_from_slice(x);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        (!self.is_empty()).then(|| self.state(self.len() - 1))
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.states().map(|s| s[k]).collect()
    }

    pub fn observe(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.states().map(f).collect()
    }

    /// Samples with `t >= t0`, times kept as is.
    pub fn after(&self, t0: f64) -> Trajectory {
        let start = self.times.partition_point(|&t| t < t0);
        Trajectory {
            dim: self.dim,
            times: self.times[start..].to_vec(),
            data: self.data[start * self.dim..].to_vec(),
            meta: self.meta.clone(),
        }
    }

    /// Checks the structural invariants: strictly increasing times and a
    /// matching data buffer.
    pub fn check(&self) -> Result<()> {
        if self.data.len() != self.times.len() * self.dim {
            return Err(Error::Config("state buffer length does not match times".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("times must be strictly increasing".into()));
        }
        if self.meta.seed.is_some() != self.meta.solver.starts_with("euler-maruyama") {
            return Err(Error::Config("seed must be present iff the run is stochastic".into()));
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b_hat
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(x: &[f64; N], terms: &[(f64, &[f64; N])], h: f64) -> [f64; N] {
    let mut out = *x;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

fn check_finite<const N: usize>(t: f64, v: &[f64; N]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(t))
    }
}

// Continuous extension of order 4 (Hairer, Norsett and Wanner).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Dense-output coefficients of one accepted step.
struct Dense<const N: usize> {
    t0: f64,
    h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> Dense<N> {
    fn new(t0: f64, h: f64, x0: &[f64; N], x1: &[f64; N], k: [&[f64; N]; 6]) -> Self {
        let [k1, k3, k4, k5, k6, k7] = k;
        let mut r = [[0.0; N]; 5];
        for i in 0..N {
            let dx = x1[i] - x0[i];
            let b = h * k1[i] - dx;
            r[0][i] = x0[i];
            r[1][i] = dx;
            r[2][i] = b;
            r[3][i] = dx - h * k7[i] - b;
            r[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        Self { t0, h, r }
    }

    fn at(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let r = &self.r;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])));
        }
        out
    }
}

/// Adaptive integration of `x' = f(t, x)` from `t = 0` to `cfg.t_end`.
///
/// The step is accepted when the RMS of `err_i / (abs_tol + rel_tol
/// max(|x_i|, |x_new_i|))` is at most one. With `output_times` set, samples
/// come from the order-4 continuous extension of the pair.
pub fn integrate_ode<const N: usize, F>(mut f: F, x0: [f64; N], cfg: &SolverConfig) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    cfg.validate_ode()?;
    let mut traj = Trajectory::new(
        N,
        TrajectoryMeta {
            solver: "dopri5".into(),
            rel_tol: Some(cfg.rel_tol),
            abs_tol: Some(cfg.abs_tol),
            dt: None,
            seed: None,
            negative_excursions: 0,
            steps: 0,
            rejected: 0,
        },
    );
    let outputs = cfg.output_times.as_deref();
    let mut next_out = 0usize;
    if let Some(ts) = outputs {
        while next_out < ts.len() && ts[next_out] <= 0.0 {
            traj.push(ts[next_out], &x0);
            next_out += 1;
        }
    } else {
        traj.push(0.0, &x0);
    }

    let mut t = 0.0;
    let mut x = x0;
    let mut k1 = f(t, &x)?;
    check_finite(t, &k1)?;
    let mut h = initial_step(&mut f, &x, &k1, cfg)?;
    let h_min = 1e-14 * cfg.t_end.max(1.0);
    let mut steps = 0usize;

    while t < cfg.t_end {
        if steps >= cfg.max_steps {
            return Err(Error::MaxSteps(cfg.max_steps));
        }
        let last = t + h >= cfg.t_end;
        if last {
            h = cfg.t_end - t;
        }
        let k2 = f(t + C2 * h, &axpy(&x, &[(A21, &k1)], h))?;
        let k3 = f(t + C3 * h, &axpy(&x, &[(A31, &k1), (A32, &k2)], h))?;
        let k4 = f(t + C4 * h, &axpy(&x, &[(A41, &k1), (A42, &k2), (A43, &k3)], h))?;
        let k5 = f(
            t + C5 * h,
            &axpy(&x, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
        )?;
        let k6 = f(
            t + h,
            &axpy(&x, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h),
        )?;
        let xn = axpy(&x, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
        let k7 = f(t + h, &xn)?;
        steps += 1;

        let mut err = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = cfg.abs_tol + cfg.rel_tol * x[i].abs().max(xn[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / N as f64).sqrt();

        if err <= 1.0 && xn.iter().all(|v| v.is_finite()) {
            let t_new = if last { cfg.t_end } else { t + h };
            match outputs {
                Some(ts) => {
                    let dense = Dense::new(t, t_new - t, &x, &xn, [&k1, &k3, &k4, &k5, &k6, &k7]);
                    while next_out < ts.len() && ts[next_out] <= t_new {
                        traj.push(ts[next_out], &dense.at(ts[next_out]));
                        next_out += 1;
                    }
                }
                None => traj.push(t_new, &xn),
            }
            t = t_new;
            x = xn;
            k1 = k7;
            traj.meta.steps += 1;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            traj.meta.rejected += 1;
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h *= fac;
            if h < h_min {
                return Err(Error::StepUnderflow { t, h });
            }
        }
    }
    Ok(traj)
}

fn initial_step<const N: usize, F>(f: &mut F, x: &[f64; N], f0: &[f64; N], cfg: &SolverConfig) -> Result<f64>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let sc: Vec<f64> = x.iter().map(|v| cfg.abs_tol + cfg.rel_tol * v.abs()).collect();
    let norm = |v: &[f64; N]| (v.iter().zip(&sc).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / N as f64).sqrt();
    let d0 = norm(x);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let x1 = axpy(x, &[(1.0, f0)], h0);
    let f1 = f(h0, &x1)?;
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(cfg.t_end))
}

/// Integrate and return only the state at `t_end`.
pub fn flow<const N: usize, F>(f: F, x0: [f64; N], t_end: f64, rel_tol: f64, abs_tol: f64) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let cfg = SolverConfig {
        rel_tol,
        abs_tol,
        t_end,
        output_times: Some(vec![t_end]),
        ..Default::default()
    };
    let tr = integrate_ode(f, x0, &cfg)?;
    let s = tr.last_state().ok_or(Error::NonFinite(t_end))?;
    let mut out = [0.0; N];
    out.copy_from_slice(s);
    Ok(out)
}

/// Reduced-model right-hand side in the form the integrators expect.
pub fn reduced_field(p: &ModelParams) -> impl FnMut(f64, &[f64; 2]) -> Result<[f64; 2]> + '_ {
    move |_, x| Ok(rhs_reduced_arr(*x, p))
}

pub fn full_field(p: &ModelParams) -> impl FnMut(f64, &[f64; 7]) -> Result<[f64; 7]> + '_ {
    move |_, x| crate::model::rhs_full_arr(*x, p)
}

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th member of an ensemble started from `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}

/// Standard-normal pair stream over ChaCha20.
pub struct NormalStream {
    rng: ChaCha20Rng,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed;
        for chunk in key.chunks_exact_mut(8) {
            let word = splitmix64(state);
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        Self {
            rng: ChaCha20Rng::from_seed(key),
        }
    }

    #[inline]
    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Box–Muller pair.
    #[inline]
    pub fn pair(&mut self) -> (f64, f64) {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        (r * theta.cos(), r * theta.sin())
    }
}

/// Euler–Maruyama with additive noise `sigma dW` on both components.
///
/// `drift` is generic so tests can substitute simple fields; the model
/// version is [`integrate_sde`].
pub fn euler_maruyama<F>(mut drift: F, x0: [f64; 2], sigma: f64, cfg: &SolverConfig, seed: u64) -> Result<Trajectory>
where
    F: FnMut(&[f64; 2]) -> [f64; 2],
{
    cfg.validate_sde()?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Config(format!("sigma must be >= 0, got {sigma}")));
    }
    let n = (cfg.t_end / cfg.dt).round() as usize;
    if n > cfg.max_steps {
        return Err(Error::MaxSteps(cfg.max_steps));
    }
    let mut traj = Trajectory::new(
        2,
        TrajectoryMeta {
            solver: "euler-maruyama".into(),
            rel_tol: None,
            abs_tol: None,
            dt: Some(cfg.dt),
            seed: Some(seed),
            negative_excursions: 0,
            steps: n as u64,
            rejected: 0,
        },
    );
    traj.data.reserve(2 * (n / cfg.stride + 1));
    traj.times.reserve(n / cfg.stride + 1);
    let mut noise = NormalStream::new(seed);
    let amp = sigma * cfg.dt.sqrt();
    let mut x = x0;
    let mut negative = x.iter().any(|&v| v < 0.0);
    traj.push(0.0, &x);
    for k in 1..=n {
        let f = drift(&x);
        let (z0, z1) = noise.pair();
        x[0] += f[0] * cfg.dt + amp * z0;
        x[1] += f[1] * cfg.dt + amp * z1;
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(Error::NonFinite(k as f64 * cfg.dt));
        }
        let neg = x[0] < 0.0 || x[1] < 0.0;
        if neg && !negative {
            traj.meta.negative_excursions += 1;
        }
        negative = neg;
        if k % cfg.stride == 0 {
            traj.push(k as f64 * cfg.dt, &x);
        }
    }
    Ok(traj)
}

/// Stochastic reduced model with common noise level `params.sigma`.
pub fn integrate_sde(x0: [f64; 2], cfg: &SolverConfig, params: &ModelParams, seed: u64) -> Result<Trajectory> {
    params.validate()?;
    euler_maruyama(|x| rhs_reduced_arr(*x, params), x0, params.sigma, cfg, seed)
}

/// Upward crossings of `up` with Schmitt-trigger re-arming below `down`.
///
/// The trigger starts armed unless the first sample is already at or above
/// `up`. Event times are linearly interpolated between samples.
pub fn detect_crossings_series(times: &[f64], values: &[f64], up: f64, down: f64) -> Result<Vec<f64>> {
    if !(up > down) {
        return Err(Error::Precondition(format!(
            "hysteresis band requires up > down, got up={up}, down={down}"
        )));
    }
    let mut events = Vec::new();
    let Some(&v0) = values.first() else {
        return Ok(events);
    };
    let mut armed = v0 < up;
    for i in 1..values.len().min(times.len()) {
        let (a, b) = (values[i - 1], values[i]);
        if armed && b >= up {
            let s = if b != a { (up - a) / (b - a) } else { 1.0 };
            events.push(times[i - 1] + s.clamp(0.0, 1.0) * (times[i] - times[i - 1]));
            armed = false;
        } else if !armed && b < down {
            armed = true;
        }
    }
    Ok(events)
}

pub fn detect_crossings(traj: &Trajectory, observable: impl Fn(&[f64]) -> f64, up: f64, down: f64) -> Result<Vec<f64>> {
    detect_crossings_series(&traj.times, &traj.observe(observable), up, down)
}
