//! Generic predictor–corrector for underdetermined systems `G(u) = 0`,
//! `G: R^N -> R^(N-1)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub h0: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub grow: f64,
    /// Consecutive successful steps before the step grows.
    pub grow_after: usize,
    pub max_points: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Minimal number of steps before closed-curve detection applies.
    pub closed_after: usize,
    /// Steps whose new tangent makes a smaller cosine with the old one are
    /// rejected as probable branch switches.
    pub min_turn_cos: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            h0: 1e-2,
            h_min: 1e-6,
            h_max: 1.0,
            grow: 1.3,
            grow_after: 4,
            max_points: 2000,
            newton_tol: 1e-10,
            newton_max_iter: 12,
            closed_after: 10,
            min_turn_cos: 0.5,
        }
    }
}

pub trait Problem {
    /// Number of unknowns `N`.
    fn dim(&self) -> usize;

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>>;

    /// `(N-1) x N` Jacobian; central differences unless overridden.
    fn jacobian(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        fd_jacobian(|v| self.residual(v), u, self.dim() - 1)
    }

    fn tests(&self, _u: &[f64]) -> Result<Vec<f64>> {
        Ok(Vec::new())
    }

    /// Per-component scale used in arclength norms.
    fn scale(&self) -> Vec<f64> {
        vec![1.0; self.dim()]
    }

    fn admissible(&self, _u: &[f64]) -> bool {
        true
    }
}

pub fn fd_jacobian(f: impl Fn(&[f64]) -> Result<Vec<f64>>, u: &[f64], rows: usize) -> Result<DMatrix<f64>> {
    let n = u.len();
    let mut jac = DMatrix::zeros(rows, n);
    let mut v = u.to_vec();
    for j in 0..n {
        let h = 1e-7 * u[j].abs().max(1.0);
        v[j] = u[j] + h;
        let fp = f(&v)?;
        v[j] = u[j] - h;
        let fm = f(&v)?;
        v[j] = u[j];
        for i in 0..rows {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn wdot(a: &[f64], b: &[f64], s: &[f64]) -> f64 {
    a.iter().zip(b).zip(s).map(|((x, y), w)| x * y / (w * w)).sum()
}

fn wnorm(a: &[f64], s: &[f64]) -> f64 {
    wdot(a, a, s).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawPoint {
    pub u: Vec<f64>,
    pub tests: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stop {
    MaxPoints,
    Boundary,
    Closed,
    Truncated(String),
}

#[derive(Debug, Clone)]
pub struct RawBranch {
    pub points: Vec<RawPoint>,
    pub stop: Stop,
}

/// Newton corrector for `G(u) = 0`, `<t, u - pred>_W = 0`.
pub fn correct<P: Problem + ?Sized>(pb: &P, pred: &[f64], t: &[f64], cfg: &StepConfig) -> Result<(Vec<f64>, f64)> {
    let n = pb.dim();
    let s = pb.scale();
    let mut u = pred.to_vec();
    let mut res = f64::INFINITY;
    for _ in 0..cfg.newton_max_iter {
        let g = pb.residual(&u)?;
        res = norm(&g);
        if !res.is_finite() {
            break;
        }
        let jac = pb.jacobian(&u)?;
        let mut a = DMatrix::zeros(n, n);
        a.view_mut((0, 0), (n - 1, n)).copy_from(&jac);
        let mut b = DVector::zeros(n);
        let diff: Vec<f64> = u.iter().zip(pred).map(|(x, y)| x - y).collect();
        for j in 0..n {
            a[(n - 1, j)] = t[j] / (s[j] * s[j]);
        }
        for i in 0..n - 1 {
            b[i] = -g[i];
        }
        b[n - 1] = -wdot(t, &diff, &s);
        let Some(delta) = a.lu().solve(&b) else {
            return Err(Error::NoConvergence("singular bordered Jacobian".into()));
        };
        for j in 0..n {
            u[j] += delta[j];
        }
        if !pb.admissible(&u) {
            return Err(Error::NoConvergence("corrector left the admissible region".into()));
        }
        let step = wnorm(delta.as_slice(), &s);
        if step <= 1e-10 * (1.0 + wnorm(&u, &s)) {
            let g = pb.residual(&u)?;
            res = norm(&g);
            if res <= cfg.newton_tol {
                return Ok((u, res));
            }
        }
    }
    let g = pb.residual(&u)?;
    let r = norm(&g);
    if r <= cfg.newton_tol {
        return Ok((u, r));
    }
    Err(Error::NoConvergence(format!("corrector residual {:e} (last {res:e})", r)))
}

/// Unit tangent (null vector of the Jacobian) oriented along `hint`.
pub fn tangent<P: Problem + ?Sized>(pb: &P, u: &[f64], hint: &[f64]) -> Result<Vec<f64>> {
    let n = pb.dim();
    let s = pb.scale();
    let jac = pb.jacobian(u)?;
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (n - 1, n)).copy_from(&jac);
    for j in 0..n {
        a[(n - 1, j)] = hint[j] / (s[j] * s[j]);
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let v = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::NoConvergence("singular tangent system".into()))?;
    let mut v: Vec<f64> = v.iter().copied().collect();
    let len = wnorm(&v, &s);
    if !(len > 0.0 && len.is_finite()) {
        return Err(Error::NoConvergence("degenerate tangent".into()));
    }
    let sign = if wdot(&v, hint, &s) < 0.0 { -1.0 } else { 1.0 };
    v.iter_mut().for_each(|x| *x *= sign / len);
    Ok(v)
}

fn raw_point<P: Problem + ?Sized>(pb: &P, u: Vec<f64>, residual: f64) -> Result<RawPoint> {
    let tests = pb.tests(&u)?;
    Ok(RawPoint { u, tests, residual })
}

/// Continue from the solution `u0` in the direction of `hint` until `stop`
/// returns true, the branch closes, or the step size underflows.
pub fn continue_from<P: Problem + ?Sized>(
    pb: &P,
    u0: &[f64],
    hint: &[f64],
    cfg: &StepConfig,
    stop: &dyn Fn(&[f64]) -> bool,
) -> Result<RawBranch> {
    let s = pb.scale();
    let g0 = pb.residual(u0)?;
    let first = raw_point(pb, u0.to_vec(), norm(&g0))?;
    let mut points = vec![first];
    let mut t = tangent(pb, u0, hint)?;
    let mut h = cfg.h0;
    let mut successes = 0usize;
    loop {
        if points.len() >= cfg.max_points {
            return Ok(RawBranch { points, stop: Stop::MaxPoints });
        }
        let u = &points.last().expect("non-empty").u;
        let pred: Vec<f64> = u.iter().zip(&t).map(|(x, d)| x + h * d).collect();
        let attempt = correct(pb, &pred, &t, cfg).and_then(|(un, res)| {
            let dist = wnorm(&un.iter().zip(u).map(|(a, b)| a - b).collect::<Vec<_>>(), &s);
            if dist > 2.0 * h || dist == 0.0 {
                return Err(Error::NoConvergence("corrector jumped".into()));
            }
            let tn = tangent(pb, &un, &t)?;
            // reject sharp turns: they usually mean a branch switch
            if wdot(&tn, &t, &s) < cfg.min_turn_cos {
                return Err(Error::NoConvergence("tangent turned".into()));
            }
            Ok((un, res, tn))
        });
        match attempt {
            Ok((un, res, tn)) => {
                let pt = raw_point(pb, un, res)?;
                let done = stop(&pt.u);
                let closed = points.len() >= cfg.closed_after
                    && wnorm(&pt.u.iter().zip(&points[0].u).map(|(a, b)| a - b).collect::<Vec<_>>(), &s) < h;
                points.push(pt);
                t = tn;
                successes += 1;
                if successes >= cfg.grow_after {
                    h = (h * cfg.grow).min(cfg.h_max);
                    successes = 0;
                }
                if closed {
                    return Ok(RawBranch { points, stop: Stop::Closed });
                }
                if done {
                    return Ok(RawBranch { points, stop: Stop::Boundary });
                }
            }
            Err(e) => {
                h *= 0.5;
                successes = 0;
                if h < cfg.h_min {
                    return Ok(RawBranch {
                        points,
                        stop: Stop::Truncated(format!("step underflow: {e}")),
                    });
                }
            }
        }
    }
}

/// Bisection along the secant between two branch points for a sign change
/// of test function `k`. Returns the best point found and whether
/// `|test| <= tol` was reached.
pub fn refine<P: Problem + ?Sized>(
    pb: &P,
    a: &RawPoint,
    b: &RawPoint,
    k: usize,
    tol: f64,
    cfg: &StepConfig,
) -> Result<(RawPoint, bool)> {
    let d: Vec<f64> = b.u.iter().zip(&a.u).map(|(x, y)| x - y).collect();
    let (mut lo, mut hi) = (0.0, 1.0);
    let sign_a = a.tests[k] < 0.0;
    let mut best = if a.tests[k].abs() <= b.tests[k].abs() { a.clone() } else { b.clone() };
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let pred: Vec<f64> = a.u.iter().zip(&d).map(|(x, y)| x + mid * y).collect();
        let (u, res) = correct(pb, &pred, &d, cfg)?;
        let pt = raw_point(pb, u, res)?;
        let v = pt.tests[k];
        if v.abs() < best.tests[k].abs() {
            best = pt.clone();
        }
        if v.abs() <= tol {
            return Ok((pt, true));
        }
        if (v < 0.0) == sign_a {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let ok = best.tests[k].abs() <= tol;
    Ok((best, ok))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Unit circle `x^2 + y^2 = 1`.
    struct Circle;
    impl Problem for Circle {
        fn dim(&self) -> usize {
            2
        }
        fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![u[0] * u[0] + u[1] * u[1] - 1.0])
        }
        fn tests(&self, u: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![u[0]])
        }
    }

    #[test]
    fn traverses_folds_and_closes() {
        let cfg = StepConfig { h0: 0.05, h_max: 0.2, ..Default::default() };
        let br = continue_from(&Circle, &[1.0, 0.0], &[0.0, 1.0], &cfg, &|_| false).unwrap();
        assert_eq!(br.stop, Stop::Closed);
        for p in &br.points {
            assert!(p.residual <= 1e-10);
        }
        // x passes through zero twice (the folds in y)
        let changes = br.points.windows(2).filter(|w| (w[0].tests[0] < 0.0) != (w[1].tests[0] < 0.0)).count();
        assert_eq!(changes, 2);
        let i = br.points.windows(2).position(|w| (w[0].tests[0] < 0.0) != (w[1].tests[0] < 0.0)).unwrap();
        let (pt, ok) = refine(&Circle, &br.points[i], &br.points[i + 1], 0, 1e-12, &cfg).unwrap();
        assert!(ok);
        assert!((pt.u[1].abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn stops_at_boundary() {
        let cfg = StepConfig::default();
        let br = continue_from(&Circle, &[1.0, 0.0], &[0.0, 1.0], &cfg, &|u| u[1] > 0.5).unwrap();
        assert_eq!(br.stop, Stop::Boundary);
        assert!(br.points.last().unwrap().u[1] > 0.5);
    }
}
