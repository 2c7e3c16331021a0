//! Reduced (2-ODE) and full (7-ODE) phosphorylation / nuclear-import model.
//!
//! Concentrations in the cytoplasm: `c_no` (non-phosphorylated cargo), `c_nop`
//! (phosphorylated cargo), `c_cy` (other cytoplasmic protein). `c_ni` is the
//! imported cargo concentration in the nucleus, `phi` the N/C volume ratio.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Scalar;

/// Ratio at which the smooth scaling function reaches its half-way point.
const SCA_HALF: f64 = 9.0 / 64.0;

/// All constants of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub k_vn: f64,
    pub k_vcy: f64,
    pub k_nt: f64,
    #[serde(rename = "K_c")]
    pub k_c: f64,
    pub tau: f64,
    #[serde(rename = "A_cyto")]
    pub a_cyto: f64,
    #[serde(rename = "A_n")]
    pub a_n: f64,
    pub m: f64,
    pub m_sca: f64,
    pub sigma: f64,
    pub use_piecewise_fsca: bool,
}

impl Default for ModelParams {
    /// Calibrated defaults (see `calibrate`); `K_c`, `tau`, `k_nt` sit at the
    /// oscillating reference point `(2.75, 0.01, 0.1)`.
    fn default() -> Self {
        Self {
            k_vn: 0.04,
            k_vcy: 0.9,
            k_nt: 0.1,
            k_c: 2.75,
            tau: 0.01,
            a_cyto: 0.01,
            a_n: 0.01,
            m: 4.0,
            m_sca: 4.0,
            sigma: 0.0,
            use_piecewise_fsca: false,
        }
    }
}

/// Parameters that can be varied by continuation and sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Param {
    #[serde(rename = "K_c")]
    Kc,
    #[serde(rename = "tau")]
    Tau,
    #[serde(rename = "k_nt")]
    Knt,
    #[serde(rename = "k_vn")]
    Kvn,
    #[serde(rename = "k_vcy")]
    Kvcy,
    #[serde(rename = "sigma")]
    Sigma,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::Kc => "K_c",
            Param::Tau => "tau",
            Param::Knt => "k_nt",
            Param::Kvn => "k_vn",
            Param::Kvcy => "k_vcy",
            Param::Sigma => "sigma",
        }
    }
}

impl std::str::FromStr for Param {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "K_c" | "Kc" | "k_c" => Param::Kc,
            "tau" => Param::Tau,
            "k_nt" | "knt" => Param::Knt,
            "k_vn" => Param::Kvn,
            "k_vcy" => Param::Kvcy,
            "sigma" => Param::Sigma,
            _ => {
                return Err(Error::Domain {
                    name: "param",
                    reason: format!("unknown parameter `{s}`"),
                })
            }
        })
    }
}

impl std::fmt::Display for Param {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl ModelParams {
    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::Kc => self.k_c,
            Param::Tau => self.tau,
            Param::Knt => self.k_nt,
            Param::Kvn => self.k_vn,
            Param::Kvcy => self.k_vcy,
            Param::Sigma => self.sigma,
        }
    }

    pub fn set(&mut self, p: Param, v: f64) {
        match p {
            Param::Kc => self.k_c = v,
            Param::Tau => self.tau = v,
            Param::Knt => self.k_nt = v,
            Param::Kvn => self.k_vn = v,
            Param::Kvcy => self.k_vcy = v,
            Param::Sigma => self.sigma = v,
        }
    }

    pub fn with(mut self, p: Param, v: f64) -> Self {
        self.set(p, v);
        self
    }

    /// Checks the domain constraints. `k_nt` may be any finite real.
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Domain {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                })
            }
        }
        positive("k_vn", self.k_vn)?;
        positive("k_vcy", self.k_vcy)?;
        positive("K_c", self.k_c)?;
        positive("tau", self.tau)?;
        positive("A_cyto", self.a_cyto)?;
        positive("A_n", self.a_n)?;
        if !self.k_nt.is_finite() {
            return Err(Error::Domain {
                name: "k_nt",
                reason: format!("must be finite, got {}", self.k_nt),
            });
        }
        for (name, v) in [("m", self.m), ("m_sca", self.m_sca)] {
            if !(v.is_finite() && v >= 1.0) {
                return Err(Error::Domain {
                    name,
                    reason: format!("must be >= 1, got {v}"),
                });
            }
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::Domain {
                name: "sigma",
                reason: format!("must be >= 0, got {}", self.sigma),
            });
        }
        Ok(())
    }

    /// Cytoplasmic dilution rate `A_cyto (k_vn + k_vcy - k_nt c_nop)`.
    #[inline]
    fn dilution(&self, c_nop: f64) -> f64 {
        self.a_cyto * (self.k_vn + self.k_vcy - self.k_nt * c_nop)
    }

    #[inline]
    pub fn f_sca(&self, c_nop: f64) -> f64 {
        if self.use_piecewise_fsca {
            f_sca_piecewise_unchecked(c_nop, self.k_c)
        } else {
            f_sca_smooth_unchecked(c_nop, self.k_c, self.m_sca)
        }
    }

    /// Derivative of the selected scaling function in `c_nop`. For the
    /// piecewise variant the active linear branch is used; exactly at the
    /// kink the right (flat) branch wins.
    #[inline]
    pub fn f_sca_prime(&self, c_nop: f64) -> f64 {
        if self.use_piecewise_fsca {
            if c_nop < 9.0 * self.k_c / 32.0 {
                -4.0
            } else {
                0.0
            }
        } else {
            let c = c_nop.max(0.0);
            if c == 0.0 && self.m_sca > 1.0 {
                return 0.0;
            }
            let x = c / self.k_c;
            let h = SCA_HALF.powf(self.m_sca);
            let r = x.powf(self.m_sca);
            let dr = self.m_sca * x.powf(self.m_sca - 1.0) / self.k_c;
            -9.0 / 8.0 * self.k_c * h * dr / ((r + h) * (r + h))
        }
    }
}

#[inline]
fn f_sca_piecewise_unchecked(c_nop: f64, k_c: f64) -> f64 {
    k_c * (1.0 / 8.0_f64).max(5.0 / 4.0 - 4.0 * c_nop / k_c)
}

#[inline]
fn f_sca_smooth_unchecked(c_nop: f64, k_c: f64, m_sca: f64) -> f64 {
    let r = (c_nop.max(0.0) / k_c).powf(m_sca);
    let h = SCA_HALF.powf(m_sca);
    k_c * (5.0 / 4.0 - 9.0 / 8.0 * r / (r + h))
}

fn check_kc(k_c: f64) -> Result<()> {
    if k_c > 0.0 && k_c.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "K_c",
            reason: format!("must be > 0, got {k_c}"),
        })
    }
}

/// Piecewise-linear scaling function `K_c max{1/8, 5/4 - 4 c_nop / K_c}`.
pub fn f_sca_piecewise(c_nop: f64, k_c: f64) -> Result<f64> {
    check_kc(k_c)?;
    Ok(f_sca_piecewise_unchecked(c_nop, k_c))
}

/// Smooth Hill-type scaling function with the same endpoints as the
/// piecewise one (`5K_c/4` at zero, `K_c/8` at infinity).
pub fn f_sca_smooth(c_nop: f64, k_c: f64, m_sca: f64) -> Result<f64> {
    check_kc(k_c)?;
    Ok(f_sca_smooth_unchecked(c_nop, k_c, m_sca))
}

/// Phosphorylation propensity. The total is clamped at zero so that
/// transiently negative SDE states never produce complex powers.
#[inline]
pub fn f_p(c_no: f64, c_nop: f64, p: &ModelParams) -> f64 {
    f_p_generic(c_no, c_nop, p)
}

#[inline]
fn f_sca_generic<T: Scalar>(c_nop: T, p: &ModelParams) -> T {
    let k_c = p.k_c;
    if p.use_piecewise_fsca {
        // the flat branch wins at the kink
        if c_nop.val() < 9.0 * k_c / 32.0 {
            T::cst(5.0 / 4.0 * k_c) - T::cst(4.0) * c_nop
        } else {
            T::cst(k_c / 8.0)
        }
    } else if c_nop.val() <= 0.0 {
        T::cst(5.0 / 4.0 * k_c)
    } else {
        let r = (c_nop / T::cst(k_c)).powf(p.m_sca);
        let h = T::cst(SCA_HALF.powf(p.m_sca));
        T::cst(k_c) * (T::cst(5.0 / 4.0) - T::cst(9.0 / 8.0) * r / (r + h))
    }
}

#[inline]
fn f_p_generic<T: Scalar>(c_no: T, c_nop: T, p: &ModelParams) -> T {
    let total = c_no + c_nop;
    if total.val() <= 0.0 {
        return T::cst(0.0);
    }
    let a = total.powf(p.m);
    let b = f_sca_generic(c_nop, p).powf(p.m);
    total * a / (a + b) / T::cst(p.tau)
}

/// Partial derivatives of `f_p` with respect to `(c_no, c_nop)`.
#[inline]
pub fn f_p_grad(c_no: f64, c_nop: f64, p: &ModelParams) -> (f64, f64) {
    let total = c_no + c_nop;
    if total <= 0.0 {
        return (0.0, 0.0);
    }
    let f = p.f_sca(c_nop);
    let a = total.powf(p.m);
    let b = f.powf(p.m);
    let d2 = (a + b) * (a + b);
    let d_total = (a * a + (p.m + 1.0) * a * b) / d2 / p.tau;
    let d_f = -p.m * total * a * b / (f * d2) / p.tau;
    (d_total, d_total + d_f * p.f_sca_prime(c_nop))
}

#[inline]
pub fn f_dp(c_nop: f64, p: &ModelParams) -> f64 {
    c_nop / p.tau
}

/// State of the reduced system.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReducedState {
    pub c_no: f64,
    pub c_nop: f64,
}

impl ReducedState {
    pub fn new(c_no: f64, c_nop: f64) -> Self {
        Self { c_no, c_nop }
    }

    pub fn from_array(a: [f64; 2]) -> Self {
        Self::new(a[0], a[1])
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.c_no, self.c_nop]
    }

    pub fn total(&self) -> f64 {
        self.c_no + self.c_nop
    }

    /// Phase-plane coordinates; `None` when the total is not positive.
    pub fn phase_point(&self) -> Option<PhasePoint> {
        let total = self.total();
        (total > 0.0).then(|| PhasePoint {
            total,
            frac: self.c_nop / total,
        })
    }
}

/// Point in the `(c_no + c_nop, c_nop / (c_no + c_nop))` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub total: f64,
    pub frac: f64,
}

impl PhasePoint {
    pub fn to_state(self) -> ReducedState {
        ReducedState::new((1.0 - self.frac) * self.total, self.frac * self.total)
    }
}

/// State of the full seven-equation system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub c_no: f64,
    pub c_nop: f64,
    pub c_ni: f64,
    pub c_cy: f64,
    pub phi: f64,
    pub v_n: f64,
    pub v_cyto: f64,
}

impl FullState {
    pub fn from_array(a: [f64; 7]) -> Self {
        Self {
            c_no: a[0],
            c_nop: a[1],
            c_ni: a[2],
            c_cy: a[3],
            phi: a[4],
            v_n: a[5],
            v_cyto: a[6],
        }
    }

    pub fn to_array(self) -> [f64; 7] {
        [
            self.c_no, self.c_nop, self.c_ni, self.c_cy, self.phi, self.v_n, self.v_cyto,
        ]
    }

    /// A state on the physical manifold: `c_cy` fills the cytoplasm up to
    /// `1/A_cyto` and `phi = v_n / v_cyto`.
    pub fn on_manifold(
        reduced: ReducedState,
        c_ni: f64,
        v_n: f64,
        v_cyto: f64,
        p: &ModelParams,
    ) -> Self {
        Self {
            c_no: reduced.c_no,
            c_nop: reduced.c_nop,
            c_ni,
            c_cy: 1.0 / p.a_cyto - reduced.c_no - reduced.c_nop,
            phi: v_n / v_cyto,
            v_n,
            v_cyto,
        }
    }
}

/// Right-hand side of the reduced system, as `[dc_no/dt, dc_nop/dt]`.
#[inline]
pub fn rhs_reduced_arr(x: [f64; 2], p: &ModelParams) -> [f64; 2] {
    rhs_reduced_generic(x, p)
}

/// The reduced right-hand side in any [`Scalar`] arithmetic.
#[inline]
pub fn rhs_reduced_generic<T: Scalar>(x: [T; 2], p: &ModelParams) -> [T; 2] {
    let [c_no, c_nop] = x;
    let fp = f_p_generic(c_no, c_nop, p);
    let fdp = c_nop / T::cst(p.tau);
    let g = T::cst(p.a_cyto) * (T::cst(p.k_vn + p.k_vcy) - T::cst(p.k_nt) * c_nop);
    [
        T::cst(p.k_vn) - fp + fdp - c_no * g,
        fp - fdp - T::cst(p.k_nt) * c_nop - c_nop * g,
    ]
}

pub fn rhs_reduced(s: ReducedState, p: &ModelParams) -> ReducedState {
    ReducedState::from_array(rhs_reduced_arr(s.to_array(), p))
}

/// Analytic Jacobian of the reduced system, row-major.
#[inline]
pub fn jacobian_reduced_arr(x: [f64; 2], p: &ModelParams) -> [[f64; 2]; 2] {
    let [c_no, c_nop] = x;
    let (dfp_no, dfp_nop) = f_p_grad(c_no, c_nop, p);
    let g = p.dilution(c_nop);
    let dg = -p.a_cyto * p.k_nt;
    let it = 1.0 / p.tau;
    [
        [-dfp_no - g, -dfp_nop + it - c_no * dg],
        [dfp_no, dfp_nop - it - p.k_nt - g - c_nop * dg],
    ]
}

/// Jacobian plus a flag set when the piecewise scaling function is
/// evaluated within `10 eps` of its kink, where the derivative is one-sided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian {
    pub m: [[f64; 2]; 2],
    pub near_kink: bool,
}

impl Jacobian {
    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }
}

pub fn jacobian_reduced(s: ReducedState, p: &ModelParams) -> Jacobian {
    let kink = 9.0 * p.k_c / 32.0;
    let near_kink = p.use_piecewise_fsca && (s.c_nop - kink).abs() <= 10.0 * f64::EPSILON * kink.max(1.0);
    Jacobian {
        m: jacobian_reduced_arr(s.to_array(), p),
        near_kink,
    }
}

/// Right-hand side of the full system, ordered as [`FullState::to_array`].
pub fn rhs_full_arr(x: [f64; 7], p: &ModelParams) -> Result<[f64; 7]> {
    let [c_no, c_nop, c_ni, c_cy, phi, _v_n, v_cyto] = x;
    if !(phi > 0.0) {
        return Err(Error::Singular(format!("N/C ratio must be > 0, got {phi}")));
    }
    if !(v_cyto > 0.0) {
        return Err(Error::Singular(format!(
            "cytoplasmic volume must be > 0, got {v_cyto}"
        )));
    }
    let [d_no, d_nop] = rhs_reduced_arr([c_no, c_nop], p);
    let g = p.dilution(c_nop);
    let import = p.k_nt * c_nop;
    Ok([
        d_no,
        d_nop,
        import * (1.0 - p.a_n * c_ni) / phi,
        p.k_vcy - c_cy * g,
        p.a_n * import - g * phi,
        p.a_n * import * v_cyto,
        g * v_cyto,
    ])
}

pub fn rhs_full(s: FullState, p: &ModelParams) -> Result<FullState> {
    rhs_full_arr(s.to_array(), p).map(FullState::from_array)
}

/// Residual of the quasi-steady fraction relation at fixed total.
fn qs_residual(frac: f64, total: f64, p: &ModelParams) -> f64 {
    let a = total.powf(p.m);
    let b = p.f_sca(frac * total).powf(p.m);
    frac - a / (a + b)
}

/// Number of uniform samples used to bracket roots in `[0, 1]`.
pub const FRAC_GRID: usize = 2048;

/// Bracket sign changes of `g` on a uniform grid over `[0, 1]` and bisect
/// each one until `|g| <= tol` (or the bracket collapses).
pub(crate) fn roots_on_unit_interval(g: impl Fn(f64) -> f64, n: usize, tol: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut x0 = 0.0;
    let mut g0 = g(x0);
    if g0 == 0.0 {
        roots.push(0.0);
    }
    for i in 1..=n {
        let x1 = i as f64 / n as f64;
        let g1 = g(x1);
        if g1 == 0.0 {
            roots.push(x1);
        } else if g0 != 0.0 && (g0 < 0.0) != (g1 < 0.0) {
            roots.push(bisect(&g, x0, x1, g0, tol));
        }
        x0 = x1;
        g0 = g1;
    }
    roots
}

pub(crate) fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        let c = 0.5 * (a + b);
        let gc = g(c);
        if gc.abs() <= tol && (b - a) < 1e-12 || gc == 0.0 || b - a <= f64::EPSILON * c.abs().max(1e-300) {
            return c;
        }
        if (gc < 0.0) == (ga < 0.0) {
            a = c;
            ga = gc;
        } else {
            b = c;
        }
    }
    0.5 * (a + b)
}

/// All phosphorylated fractions compatible with the fast-equilibrium
/// relation `frac = total^m / (total^m + f_sca(frac total)^m)`.
pub fn quasi_steady_fractions(total: f64, p: &ModelParams) -> Result<Vec<f64>> {
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Domain {
            name: "total",
            reason: format!("must be > 0, got {total}"),
        });
    }
    Ok(roots_on_unit_interval(|f| qs_residual(f, total, p), FRAC_GRID, 1e-10))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn fsca_piecewise_values() {
        assert_eq!(f_sca_piecewise(0.0, 2.75).unwrap(), 3.4375);
        assert!(close(f_sca_piecewise(9.0 / 32.0, 1.0).unwrap(), 0.125, 1e-15));
        assert_eq!(f_sca_piecewise(10.0, 1.0).unwrap(), 0.125);
        assert!(f_sca_piecewise(1.0, 0.0).is_err());
        assert!(f_sca_piecewise(1.0, -2.0).is_err());
    }

    #[test]
    fn fsca_smooth_values() {
        for m_sca in [1.0, 2.0, 4.0, 7.5] {
            assert_eq!(f_sca_smooth(0.0, 2.75, m_sca).unwrap(), 3.4375);
        }
        assert!(close(f_sca_smooth(9.0 / 64.0, 1.0, 4.0).unwrap(), 0.6875, 1e-14));
        let far = f_sca_smooth(2e3, 2.0, 4.0).unwrap();
        assert!((far - 0.25).abs() / 0.25 <= 1e-6);
        assert!(f_sca_smooth(1.0, 0.0, 4.0).is_err());
    }

    #[test]
    fn fp_origin_and_symmetric_point() {
        let p = ModelParams::default();
        assert_eq!(f_p(0.0, 0.0, &p), 0.0);
        // total equal to f_sca(c_nop): f_p = total / (2 tau)
        let c_nop = 0.3;
        let total = p.f_sca(c_nop);
        let v = f_p(total - c_nop, c_nop, &p);
        assert!(close(v, total / (2.0 * p.tau), 1e-13));
    }

    #[test]
    fn fp_variants_agree_at_zero() {
        let smooth = ModelParams::default();
        let piecewise = ModelParams {
            use_piecewise_fsca: true,
            ..smooth
        };
        for c_no in [0.1, 1.0, 3.0, 7.0] {
            assert_eq!(f_p(c_no, 0.0, &smooth), f_p(c_no, 0.0, &piecewise));
        }
    }

    #[test]
    fn fdp_linear() {
        let p = ModelParams { tau: 0.5, ..Default::default() };
        assert_eq!(f_dp(0.0, &p), 0.0);
        assert_eq!(f_dp(2.0, &p), 4.0);
        let p1 = ModelParams { tau: 1.0, ..Default::default() };
        for x in [0.0, 0.3, 12.5] {
            assert_eq!(f_dp(x, &p1), x);
        }
    }

    #[test]
    fn reduced_rhs_at_origin() {
        let p = ModelParams::default();
        assert_eq!(rhs_reduced_arr([0.0, 0.0], &p), [p.k_vn, 0.0]);
    }

    #[test]
    fn reduced_rhs_degenerate_sum() {
        let p = ModelParams {
            k_nt: 0.0,
            a_cyto: 0.0,
            ..Default::default()
        };
        let [a, b] = rhs_reduced_arr([1.3, 0.7], &p);
        assert!(close(a + b, p.k_vn, 1e-12));
    }

    #[test]
    fn full_rhs_special_states() {
        let p = ModelParams::default();
        let s = FullState::from_array([1.0, 0.0, 2.0, 90.0, 0.5, 1.0, 2.0]);
        let d = rhs_full(s, &p).unwrap();
        assert_eq!(d.c_ni, 0.0);
        assert_eq!(d.v_n, 0.0);
        assert!(close(d.phi, -p.a_cyto * (p.k_vn + p.k_vcy) * s.phi, 1e-15));

        let s = FullState::from_array([1.0, 0.4, 1.0 / p.a_n, 90.0, 0.5, 1.0, 2.0]);
        assert_eq!(rhs_full(s, &p).unwrap().c_ni, 0.0);

        let s = FullState::from_array([1.0, 0.4, 1.0, 90.0, 0.0, 1.0, 2.0]);
        assert!(matches!(rhs_full(s, &p), Err(Error::Singular(_))));
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::default().validate().is_ok());
        assert!(ModelParams { k_nt: -0.2, ..Default::default() }.validate().is_ok());
        assert!(ModelParams { tau: 0.0, ..Default::default() }.validate().is_err());
        assert!(ModelParams { m: 0.5, ..Default::default() }.validate().is_err());
        assert!(ModelParams { sigma: -1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn kink_flag() {
        let p = ModelParams {
            use_piecewise_fsca: true,
            k_c: 1.0,
            ..Default::default()
        };
        let j = jacobian_reduced(ReducedState::new(1.0, 9.0 / 32.0), &p);
        assert!(j.near_kink);
        let j = jacobian_reduced(ReducedState::new(1.0, 0.5), &p);
        assert!(!j.near_kink);
    }

    #[test]
    fn quasi_steady_limits() {
        let p = ModelParams::default();
        let low = quasi_steady_fractions(1e-3, &p).unwrap();
        assert_eq!(low.len(), 1);
        assert!(low[0] < 1e-6);
        let high = quasi_steady_fractions(1e3, &p).unwrap();
        assert_eq!(high.len(), 1);
        assert!(high[0] > 1.0 - 1e-6);
        assert!(quasi_steady_fractions(0.0, &p).is_err());
    }
}
