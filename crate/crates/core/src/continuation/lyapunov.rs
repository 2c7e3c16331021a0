//! First Lyapunov coefficient of a planar vector field at a Hopf point.
//!
//! The linear part is brought to `[[0, -w], [w, 0]]` with
//! `P = [[0, b], [w, -a]]` (`a = J00`, `b = J01`, `w = sqrt(det J)`), and
//! the cubic normal-form coefficient is
//!
//! ```text
//! l1 = (F_xxx + F_xyy + G_xxy + G_yyy) / 16
//!    + (F_xy (F_xx + F_yy) - G_xy (G_xx + G_yy) - F_xx G_xx + F_yy G_yy) / (16 w)
//! ```
//!
//! for the transformed field `(F, G)`. Partial derivatives come from jet
//! arithmetic along four directions (exact up to rounding);
//! [`first_lyapunov_fd`] is an independent finite-difference route.

use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};
use crate::model::{rhs_reduced_generic, ModelParams};
use crate::phase::Equilibrium;

/// Planar field that can be evaluated in jet arithmetic.
pub trait PlanarField {
    fn eval<T: Scalar>(&self, x: [T; 2]) -> [T; 2];
}

impl PlanarField for ModelParams {
    fn eval<T: Scalar>(&self, x: [T; 2]) -> [T; 2] {
        rhs_reduced_generic(x, self)
    }
}

/// `x' = -y + a x (x^2 + y^2)`, `y' = x + a y (x^2 + y^2)`; `l1 = a`.
#[derive(Debug, Clone, Copy)]
pub struct CubicNormalForm {
    pub a: f64,
}

impl PlanarField for CubicNormalForm {
    fn eval<T: Scalar>(&self, v: [T; 2]) -> [T; 2] {
        let [x, y] = v;
        let r2 = x * x + y * y;
        let a = T::cst(self.a);
        [-y + a * x * r2, x + a * y * r2]
    }
}

/// Jacobian from first-order jets.
pub fn jacobian_of<F: PlanarField>(f: &F, x: [f64; 2]) -> [[f64; 2]; 2] {
    let c0 = f.eval([Jet::var(x[0], 1.0), Jet::var(x[1], 0.0)]);
    let c1 = f.eval([Jet::var(x[0], 0.0), Jet::var(x[1], 1.0)]);
    [[c0[0].deriv(1), c1[0].deriv(1)], [c0[1].deriv(1), c1[1].deriv(1)]]
}

/// Transformation data at a (near-)Hopf point.
struct NormalFrame {
    p: [[f64; 2]; 2],
    pinv: [[f64; 2]; 2],
    omega: f64,
}

fn normal_frame(j: [[f64; 2]; 2]) -> Result<NormalFrame> {
    let (a, b) = (j[0][0], j[0][1]);
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if !(det > 0.0) {
        return Err(Error::Precondition(format!("det J = {det:e} is not positive")));
    }
    if b == 0.0 {
        return Err(Error::Precondition("J01 vanishes".into()));
    }
    let omega = det.sqrt();
    Ok(NormalFrame {
        p: [[0.0, b], [omega, -a]],
        pinv: [[a / (b * omega), 1.0 / omega], [1.0 / b, 0.0]],
        omega,
    })
}

fn mat_vec(m: &[[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Second and third partials `[xx, xy, yy]`, `[xxx, xxy, xyy, yyy]` of the
/// two transformed components.
struct Partials {
    d2: [[f64; 3]; 2],
    d3: [[f64; 4]; 2],
}

fn l1_from_partials(d: &Partials, omega: f64) -> f64 {
    let [fxx, fxy, fyy] = d.d2[0];
    let [gxx, gxy, gyy] = d.d2[1];
    let [fxxx, _, fxyy, _] = d.d3[0];
    let [_, gxxy, _, gyyy] = d.d3[1];
    (fxxx + fxyy + gxxy + gyyy) / 16.0
        + (fxy * (fxx + fyy) - gxy * (gxx + gyy) - fxx * gxx + fyy * gyy) / (16.0 * omega)
}

fn jet_partials<F: PlanarField>(f: &F, x: [f64; 2], frame: &NormalFrame) -> Partials {
    // directional derivatives of g = Pinv f(x + P y) along d in y-space
    let along = |d: [f64; 2]| -> ([f64; 2], [f64; 2]) {
        let v = mat_vec(&frame.p, d);
        let out = f.eval([Jet::var(x[0], v[0]), Jet::var(x[1], v[1])]);
        let second = mat_vec(&frame.pinv, [out[0].deriv(2), out[1].deriv(2)]);
        let third = mat_vec(&frame.pinv, [out[0].deriv(3), out[1].deriv(3)]);
        (second, third)
    };
    let (s_x, t_x) = along([1.0, 0.0]);
    let (s_y, t_y) = along([0.0, 1.0]);
    let (s_p, t_p) = along([1.0, 1.0]);
    let (s_m, t_m) = along([1.0, -1.0]);
    let mut d = Partials {
        d2: [[0.0; 3]; 2],
        d3: [[0.0; 4]; 2],
    };
    for k in 0..2 {
        let xy = (s_p[k] - s_m[k]) / 4.0;
        d.d2[k] = [s_x[k], xy, s_y[k]];
        let xxx = t_x[k];
        let yyy = t_y[k];
        let xyy = (t_p[k] + t_m[k] - 2.0 * xxx) / 6.0;
        let xxy = (t_p[k] - t_m[k] - 2.0 * yyy) / 6.0;
        d.d3[k] = [xxx, xxy, xyy, yyy];
    }
    d
}

/// `l1` without checking the trace condition (used along Hopf curves).
pub fn first_lyapunov_unchecked<F: PlanarField>(f: &F, x: [f64; 2]) -> Result<f64> {
    let j = jacobian_of(f, x);
    let frame = normal_frame(j)?;
    let d = jet_partials(f, x, &frame);
    Ok(l1_from_partials(&d, frame.omega))
}

/// Trace tolerance for the Hopf precondition.
pub const HOPF_TRACE_TOL: f64 = 1e-8;

/// `l1` at a point that must satisfy `|tr J| <= 1e-8`, `det J > 0`.
pub fn first_lyapunov_field<F: PlanarField>(f: &F, x: [f64; 2]) -> Result<f64> {
    let j = jacobian_of(f, x);
    let tr = j[0][0] + j[1][1];
    if tr.abs() > HOPF_TRACE_TOL {
        return Err(Error::Precondition(format!("not a Hopf point: tr J = {tr:e}")));
    }
    first_lyapunov_unchecked(f, x)
}

pub fn first_lyapunov(eq: &Equilibrium, p: &ModelParams) -> Result<f64> {
    first_lyapunov_field(p, eq.state.to_array())
}

/// Finite-difference route: central differences of the transformed field
/// with two-level Richardson extrapolation, base step
/// `1e-4 max(1, |x|)` scaled by the frame.
pub fn first_lyapunov_fd(f: impl Fn([f64; 2]) -> [f64; 2], x: [f64; 2], j: [[f64; 2]; 2]) -> Result<f64> {
    let frame = normal_frame(j)?;
    let g = |y: [f64; 2]| {
        let v = mat_vec(&frame.p, y);
        mat_vec(&frame.pinv, f([x[0] + v[0], x[1] + v[1]]))
    };
    let pscale = frame.p.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let h0 = 1e-4 * x[0].hypot(x[1]).max(1.0) / pscale.max(1e-300);
    let partials_at = |h: f64| {
        let e = |a: f64, b: f64| g([a * h, b * h]);
        let mut d = Partials {
            d2: [[0.0; 3]; 2],
            d3: [[0.0; 4]; 2],
        };
        let c = e(0.0, 0.0);
        let (xp, xm, yp, ym) = (e(1.0, 0.0), e(-1.0, 0.0), e(0.0, 1.0), e(0.0, -1.0));
        let (x2p, x2m, y2p, y2m) = (e(2.0, 0.0), e(-2.0, 0.0), e(0.0, 2.0), e(0.0, -2.0));
        let (pp, pm, mp, mm) = (e(1.0, 1.0), e(1.0, -1.0), e(-1.0, 1.0), e(-1.0, -1.0));
        for k in 0..2 {
            let xx = (xp[k] - 2.0 * c[k] + xm[k]) / (h * h);
            let yy = (yp[k] - 2.0 * c[k] + ym[k]) / (h * h);
            let xy = (pp[k] - pm[k] - mp[k] + mm[k]) / (4.0 * h * h);
            d.d2[k] = [xx, xy, yy];
            let xxx = (x2p[k] - 2.0 * xp[k] + 2.0 * xm[k] - x2m[k]) / (2.0 * h * h * h);
            let yyy = (y2p[k] - 2.0 * yp[k] + 2.0 * ym[k] - y2m[k]) / (2.0 * h * h * h);
            // d/dy of f_xx and d/dx of f_yy
            let xxy = ((pp[k] - 2.0 * yp[k] + mp[k]) - (pm[k] - 2.0 * ym[k] + mm[k])) / (2.0 * h * h * h);
            let xyy = ((pp[k] - 2.0 * xp[k] + pm[k]) - (mp[k] - 2.0 * xm[k] + mm[k])) / (2.0 * h * h * h);
            d.d3[k] = [xxx, xxy, xyy, yyy];
        }
        d
    };
    let coarse = partials_at(h0);
    let fine = partials_at(h0 / 2.0);
    let mut d = Partials {
        d2: [[0.0; 3]; 2],
        d3: [[0.0; 4]; 2],
    };
    for k in 0..2 {
        for i in 0..3 {
            d.d2[k][i] = (4.0 * fine.d2[k][i] - coarse.d2[k][i]) / 3.0;
        }
        for i in 0..4 {
            d.d3[k][i] = (4.0 * fine.d3[k][i] - coarse.d3[k][i]) / 3.0;
        }
    }
    Ok(l1_from_partials(&d, frame.omega))
}
