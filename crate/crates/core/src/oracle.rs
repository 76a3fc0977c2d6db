//! Brute-force references for checking the fast paths.
//!
//! Nothing here reuses the formulas or the quadrature of the modules being
//! checked: integrals are evaluated from their stochastic-integral
//! definitions with freshly computed Gauss–Legendre rules, and Gaussian
//! conditioning uses dense algebra.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{check_finite, Error, Result};
use crate::kernel::SgpParams;

/// Composite Gauss–Legendre rule on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    segments: usize,
}

/// Nodes and weights of the `order`-point Gauss–Legendre rule on [-1, 1],
/// found by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

impl QuadratureRule {
    /// `segments` equal panels of an `order`-point rule on `[lo, hi]`.
    pub fn composite(lo: f64, hi: f64, order: usize, segments: usize) -> Result<Self> {
        check_finite("lower limit", lo)?;
        check_finite("upper limit", hi)?;
        if order == 0 || segments == 0 {
            return Err(Error::domain("quadrature needs at least one node and one segment"));
        }
        let (t, w) = gauss_legendre(order);
        let step = (hi - lo) / segments as f64;
        let mut nodes = Vec::with_capacity(order * segments);
        let mut weights = Vec::with_capacity(order * segments);
        for s in 0..segments {
            let mid = lo + (s as f64 + 0.5) * step;
            for (ti, wi) in t.iter().zip(&w) {
                nodes.push(mid + 0.5 * step * ti);
                weights.push(0.5 * step * wi);
            }
        }
        Ok(QuadratureRule { nodes, weights, segments })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

const ORACLE_ORDER: usize = 10;

/// Relative accuracy demanded of every oracle integral.
const ORACLE_RELATIVE_TOLERANCE: f64 = 1e-12;

/// Integral with a step-doubling error estimate; fails if the estimate
/// exceeds `rel_tol · ∫|f|`.
fn integrate_checked(lo: f64, hi: f64, segments: usize, rel_tol: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let coarse = QuadratureRule::composite(lo, hi, ORACLE_ORDER, segments)?.integrate(&f);
    let fine_rule = QuadratureRule::composite(lo, hi, ORACLE_ORDER, 2 * segments)?;
    let fine = fine_rule.integrate(&f);
    let magnitude = fine_rule.integrate(|x| f(x).abs());
    let estimate = (fine - coarse).abs();
    let tolerance = rel_tol * magnitude;
    if estimate > tolerance {
        return Err(Error::Accuracy { estimate, tolerance });
    }
    Ok(fine)
}

/// `∫₀^{x1} (σ/α)² sin(α(x1−τ)) sin(α(x2−τ)) dτ`, the covariance of
/// `g(x) = (σ/α) ∫₀^x sin(α(x−τ)) dW(τ)` at `x1 ≤ x2`.
pub fn cov_by_quadrature(params: &SgpParams, x1: f64, x2: f64, segments: usize) -> Result<f64> {
    check_finite("x1", x1)?;
    check_finite("x2", x2)?;
    if !(0.0 <= x1 && x1 <= x2) {
        return Err(Error::domain(format!("need 0 <= x1 <= x2, got x1 = {x1}, x2 = {x2}")));
    }
    let (alpha, sigma) = (params.alpha(), params.sigma());
    let needed = ((alpha * x1 / std::f64::consts::PI).ceil() as usize * 4).max(1);
    if segments < needed {
        return Err(Error::domain(format!(
            "at least {needed} segments are needed for x1 = {x1}, got {segments}"
        )));
    }
    if x1 == 0.0 {
        return Ok(0.0);
    }
    let scale = (sigma / alpha).powi(2);
    let v = integrate_checked(0.0, x1, segments, ORACLE_RELATIVE_TOLERANCE, |t| {
        (alpha * (x1 - t)).sin() * (alpha * (x2 - t)).sin()
    })?;
    Ok(scale * v)
}

/// Covariance of `(∫₀^d σ sin(α(d−τ))/α dW, ∫₀^d σ cos(α(d−τ)) dW)`.
pub fn noise_cov_by_quadrature(params: &SgpParams, d: f64, segments: usize) -> Result<Matrix2<f64>> {
    check_finite("d", d)?;
    if d < 0.0 {
        return Err(Error::domain(format!("interval length must be nonnegative, got {d}")));
    }
    if segments == 0 {
        return Err(Error::domain("at least one segment is needed"));
    }
    if d == 0.0 {
        return Ok(Matrix2::zeros());
    }
    let (a, s2) = (params.alpha(), params.sigma().powi(2));
    let tol = ORACLE_RELATIVE_TOLERANCE;
    let gg = integrate_checked(0.0, d, segments, tol, |t| (a * (d - t)).sin().powi(2) / (a * a))?;
    let gd = integrate_checked(0.0, d, segments, tol, |t| (a * (d - t)).sin() * (a * (d - t)).cos() / a)?;
    let dd = integrate_checked(0.0, d, segments, tol, |t| (a * (d - t)).cos().powi(2))?;
    Ok(Matrix2::new(s2 * gg, s2 * gd, s2 * gd, s2 * dd))
}

/// Gaussian posterior from a dense prior precision (prior mean zero), design
/// `A` and observations `y = A x + ε`, `ε ~ N(0, noise_sd² I)`.
///
/// An infinite `noise_sd` returns the prior.
pub fn dense_condition(
    prior_precision: &DMatrix<f64>,
    design: &DMatrix<f64>,
    y: &DVector<f64>,
    noise_sd: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if !(noise_sd > 0.0) {
        return Err(Error::domain(format!("noise_sd must be positive, got {noise_sd}")));
    }
    let tau = if noise_sd.is_infinite() { 0.0 } else { 1.0 / (noise_sd * noise_sd) };
    let post = prior_precision + design.transpose() * design * tau;
    let chol = post
        .cholesky()
        .ok_or_else(|| Error::Numeric("dense posterior precision is not positive definite".into()))?;
    let cov = chol.inverse();
    let mean = &cov * (design.transpose() * y * tau);
    Ok((mean, cov))
}

/// The same posterior computed in covariance form,
/// `m = K Aᵀ S⁻¹ y`, `V = K − K Aᵀ S⁻¹ A K`, `S = A K Aᵀ + noise_sd² I`.
pub fn dense_condition_covariance(
    prior_cov: &DMatrix<f64>,
    design: &DMatrix<f64>,
    y: &DVector<f64>,
    noise_sd: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = design.nrows();
    let ka = prior_cov * design.transpose();
    let s = design * &ka + DMatrix::identity(n, n) * (noise_sd * noise_sd);
    let chol = s
        .cholesky()
        .ok_or_else(|| Error::Numeric("dense marginal covariance is not positive definite".into()))?;
    let mean = &ka * chol.solve(y);
    let cov = prior_cov - &ka * chol.solve(&ka.transpose());
    Ok((mean, cov))
}

/// Integrates `g'' = −α² g` from state `[g, g']` over time `t` by classical
/// fourth-order Runge–Kutta with `steps` steps.
pub fn rk4_propagate(alpha: f64, state: [f64; 2], t: f64, steps: usize) -> [f64; 2] {
    let a2 = alpha * alpha;
    let f = |s: [f64; 2]| [s[1], -a2 * s[0]];
    let h = t / steps.max(1) as f64;
    let mut s = state;
    for _ in 0..steps.max(1) {
        let k1 = f(s);
        let k2 = f([s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1]]);
        let k3 = f([s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1]]);
        let k4 = f([s[0] + h * k3[0], s[1] + h * k3[1]]);
        for i in 0..2 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    s
}

/// Empirical second moments of zero-mean draws (one draw per row) and the
/// standard errors of those estimates.
pub fn monte_carlo_covariance(samples: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, p) = samples.shape();
    let mut cov = DMatrix::zeros(p, p);
    let mut se = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..=i {
            let prods: Vec<f64> = (0..n).map(|s| samples[(s, i)] * samples[(s, j)]).collect();
            let mean = prods.iter().sum::<f64>() / n as f64;
            let var = prods.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let e = (var / n as f64).sqrt();
            cov[(i, j)] = mean;
            cov[(j, i)] = mean;
            se[(i, j)] = e;
            se[(j, i)] = e;
        }
    }
    (cov, se)
}

/// Outcome of one step of [`self_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Quick agreement checks between the library and these references.
pub fn self_check() -> Vec<CheckOutcome> {
    use crate::kernel;
    use crate::statespace::{self, LocationGrid, StateSpaceChain};
    use std::f64::consts::PI;

    let mut out = Vec::new();
    let mut record = |name: &'static str, result: Result<(bool, String)>| {
        let (passed, detail) = result.unwrap_or_else(|e| (false, e.to_string()));
        out.push(CheckOutcome { name, passed, detail });
    };

    record("covariance vs quadrature", (|| {
        let mut worst = 0.0f64;
        for alpha in [PI / 4.0, PI, 2.0 * PI, 8.0 * PI] {
            let p = SgpParams::new(alpha, 1.0)?;
            let scale = (1.0 / alpha).powi(2);
            for i in 0..6 {
                for j in i..6 {
                    let (x1, x2) = (1.7 * i as f64, 1.7 * j as f64);
                    let segs = ((alpha * x1 / PI).ceil() as usize * 4).max(4);
                    let q = cov_by_quadrature(&p, x1, x2, segs)?;
                    worst = worst.max((kernel::covariance(&p, x1, x2)? - q).abs() / scale);
                }
            }
        }
        Ok((worst < 1e-8, format!("max scaled error {worst:.2e}")))
    })());

    record("noise covariance vs quadrature", (|| {
        let mut worst = 0.0f64;
        for alpha in [1.0, PI, 2.0 * PI] {
            let p = SgpParams::new(alpha, 1.0)?;
            for d in [0.1, 0.5, 2.3] {
                let q = noise_cov_by_quadrature(&p, d, 16)?;
                worst = worst.max((statespace::noise_covariance(&p, d)? - q).abs().max());
            }
        }
        Ok((worst < 1e-10, format!("max error {worst:.2e}")))
    })());

    record("state-space precision inverse", (|| {
        let p = SgpParams::new(2.0 * PI, 1.0)?;
        let s: Vec<f64> = (1..=20).map(|i| 0.3 * i as f64 + 0.05 * ((i * 7) % 5) as f64).collect();
        let chain = StateSpaceChain::new(p, LocationGrid::new(s.clone())?);
        let q = statespace::assemble_precision(&chain)?.to_dense();
        let inv = q
            .try_inverse()
            .ok_or_else(|| Error::Numeric("dense inverse failed".into()))?;
        let k = kernel::covariance_matrix(&p, &s)?;
        let mut worst = 0.0f64;
        for i in 0..s.len() {
            for j in 0..s.len() {
                worst = worst.max((inv[(2 * i, 2 * j)] - k[(i, j)]).abs());
            }
        }
        Ok((worst < 1e-8, format!("max error {worst:.2e}")))
    })());

    record("transition vs ODE integration", (|| {
        let alpha = 2.0 * PI;
        let p = SgpParams::new(alpha, 1.0)?;
        let r = statespace::transition(&p, 0.37)?;
        let mut worst = 0.0f64;
        for s0 in [[1.0, 0.0], [0.0, 1.0], [0.3, -2.0]] {
            let ode = rk4_propagate(alpha, s0, 0.37, 2000);
            let lin = r * nalgebra::Vector2::new(s0[0], s0[1]);
            worst = worst.max((ode[0] - lin[0]).abs()).max((ode[1] - lin[1]).abs());
        }
        Ok((worst < 1e-9, format!("max error {worst:.2e}")))
    })());

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_rule() {
        let (x, w) = gauss_legendre(5);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[2], 0.0, epsilon = 1e-15);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert_abs_diff_eq!(q, 2.0 / 9.0, epsilon = 1e-14);
        let (x1, w1) = gauss_legendre(1);
        assert_eq!((x1[0], w1[0]), (0.0, 2.0));
    }

    #[test]
    fn composite_weights_positive() {
        let r = QuadratureRule::composite(1.0, 4.0, 7, 3).unwrap();
        assert!(r.weights().iter().all(|&w| w > 0.0));
        assert_abs_diff_eq!(r.weights().iter().sum::<f64>(), 3.0, epsilon = 1e-13);
        assert!(QuadratureRule::composite(0.0, 1.0, 0, 1).is_err());
    }

    #[test]
    fn quadrature_limits() {
        let p = SgpParams::new(2.0, 1.0).unwrap();
        assert_eq!(cov_by_quadrature(&p, 0.0, 3.0, 4).unwrap(), 0.0);
        assert!(cov_by_quadrature(&p, 2.0, 1.0, 8).is_err());
        assert!(cov_by_quadrature(&p, 10.0, 10.0, 2).is_err());
        let z = noise_cov_by_quadrature(&p, 0.0, 4).unwrap();
        assert_eq!(z, Matrix2::zeros());
        let m = noise_cov_by_quadrature(&p, 0.8, 4).unwrap();
        assert_eq!(m[(0, 1)], m[(1, 0)]);
    }

    #[test]
    fn step_doubling_flags_coarse_rule() {
        let p = SgpParams::new(60.0, 1.0).unwrap();
        // The minimum passes the segment rule; the error estimate is checked too.
        let r = cov_by_quadrature(&p, 1.0, 1.5, 80);
        assert!(r.is_ok());
        assert!(matches!(
            integrate_checked(0.0, 10.0, 1, 1e-12, |t: f64| (40.0 * t).sin()),
            Err(Error::Accuracy { .. })
        ));
    }

    #[test]
    fn dense_conditioning_textbook() {
        let i3 = DMatrix::<f64>::identity(3, 3);
        let y = DVector::zeros(3);
        let (m, v) = dense_condition(&i3, &i3, &y, 1.0).unwrap();
        assert_eq!(m, DVector::zeros(3));
        assert_abs_diff_eq!(v, &i3 * 0.5, epsilon = 1e-15);
        let (m, v) = dense_condition(&(&i3 * 4.0), &i3, &DVector::from_element(3, 1.0), f64::INFINITY).unwrap();
        assert_eq!(m, DVector::zeros(3));
        assert_abs_diff_eq!(v, &i3 * 0.25, epsilon = 1e-15);
    }

    #[test]
    fn precision_and_covariance_forms_agree() {
        let q = DMatrix::from_row_slice(3, 3, &[2.0, -0.5, 0.0, -0.5, 1.5, 0.3, 0.0, 0.3, 1.0]);
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.5, 1.0, 0.0]);
        let y = DVector::from_vec(vec![0.4, -1.2]);
        let (m1, v1) = dense_condition(&q, &a, &y, 0.7).unwrap();
        let (m2, v2) = dense_condition_covariance(&q.clone().try_inverse().unwrap(), &a, &y, 0.7).unwrap();
        assert_abs_diff_eq!(m1, m2, epsilon = 1e-13);
        assert_abs_diff_eq!(v1, v2, epsilon = 1e-13);
    }

    #[test]
    fn rk4_follows_cosine() {
        let s = rk4_propagate(3.0, [1.0, 0.0], 1.1, 1000);
        assert_abs_diff_eq!(s[0], (3.3f64).cos(), epsilon = 1e-10);
        assert_abs_diff_eq!(s[1], -3.0 * (3.3f64).sin(), epsilon = 1e-10);
    }

    #[test]
    fn self_check_passes() {
        for c in self_check() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
