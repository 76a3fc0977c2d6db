//! Closed-form mathematics of the seasonal Gaussian process.
//!
//! `g ~ sGP(α, σ)` solves `g'' + α² g = σ ξ` on `x ≥ 0` with `g(0) = g'(0) = 0`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{check_finite, Error, Result};

/// Smallest accepted frequency; the α → 0 limit is not modelled.
pub const MIN_ALPHA: f64 = 1e-8;

/// Frequency `alpha` (radians per unit of x) and standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgpParams {
    alpha: f64,
    sigma: f64,
}

impl SgpParams {
    pub fn new(alpha: f64, sigma: f64) -> Result<Self> {
        check_finite("alpha", alpha)?;
        check_finite("sigma", sigma)?;
        if alpha < MIN_ALPHA {
            return Err(Error::domain(format!(
                "alpha must be at least {MIN_ALPHA:e}, got {alpha}"
            )));
        }
        if sigma <= 0.0 {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        Ok(SgpParams { alpha, sigma })
    }

    /// Parameters for a process with period `period`, `α = 2π / period`.
    pub fn from_period(period: f64, sigma: f64) -> Result<Self> {
        check_finite("period", period)?;
        if period <= 0.0 {
            return Err(Error::domain(format!("period must be positive, got {period}")));
        }
        Self::new(2.0 * PI / period, sigma)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.alpha
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.alpha, sigma)
    }
}

/// The null space `span{cos(αx), sin(αx)}` of `L = d²/dx² + α²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryBasis {
    alpha: f64,
}

impl BoundaryBasis {
    pub fn new(alpha: f64) -> Result<Self> {
        SgpParams::new(alpha, 1.0)?;
        Ok(BoundaryBasis { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `[cos(αx), sin(αx)]`.
    pub fn eval(&self, x: f64) -> [f64; 2] {
        let (s, c) = (self.alpha * x).sin_cos();
        [c, s]
    }

    pub fn derivative(&self, x: f64) -> [f64; 2] {
        let (s, c) = (self.alpha * x).sin_cos();
        [-self.alpha * s, self.alpha * c]
    }

    pub fn second_derivative(&self, x: f64) -> [f64; 2] {
        let a2 = self.alpha * self.alpha;
        let [c, s] = self.eval(x);
        [-a2 * c, -a2 * s]
    }

    /// `L` applied to both functions; zero up to rounding.
    pub fn apply_operator(&self, x: f64) -> [f64; 2] {
        let a2 = self.alpha * self.alpha;
        let v = self.eval(x);
        let d2 = self.second_derivative(x);
        [d2[0] + a2 * v[0], d2[1] + a2 * v[1]]
    }
}

/// `t − sin t`, accurate for small `t` where the subtraction cancels.
pub(crate) fn t_minus_sin(t: f64) -> f64 {
    if t.abs() < 0.25 {
        // t³/3! − t⁵/5! + t⁷/7! − …
        let t2 = t * t;
        let mut term = t * t2 / 6.0;
        let mut sum = term;
        let mut k = 3.0;
        loop {
            term *= -t2 / ((2.0 * k - 2.0) * (2.0 * k - 1.0));
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
            k += 1.0;
        }
        sum
    } else {
        t - t.sin()
    }
}

/// `h/2 − sin(2αh)/(4α)`, the variance of `g(h)` per unit of `(σ/α)²`.
pub(crate) fn variance_factor(alpha: f64, h: f64) -> f64 {
    t_minus_sin(2.0 * alpha * h) / (4.0 * alpha)
}

fn check_location(name: &str, x: f64) -> Result<()> {
    check_finite(name, x)?;
    if x < 0.0 {
        return Err(Error::domain(format!(
            "{name} must be nonnegative (the process starts at 0), got {x}"
        )));
    }
    Ok(())
}

/// `Cov[g(x1), g(x2)]`; arguments may be given in either order.
pub fn covariance(params: &SgpParams, x1: f64, x2: f64) -> Result<f64> {
    check_location("x1", x1)?;
    check_location("x2", x2)?;
    Ok(covariance_unchecked(params.alpha, params.sigma, x1, x2))
}

pub(crate) fn covariance_unchecked(alpha: f64, sigma: f64, x1: f64, x2: f64) -> f64 {
    let (lo, hi) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
    let scale = (sigma / alpha).powi(2);
    if lo == hi {
        return scale * variance_factor(alpha, lo);
    }
    scale * (0.5 * lo * (alpha * (hi - lo)).cos() - (alpha * hi).cos() * (alpha * lo).sin() / (2.0 * alpha))
}

/// Dense covariance matrix of `g` at `xs`.
pub fn covariance_matrix(params: &SgpParams, xs: &[f64]) -> Result<DMatrix<f64>> {
    for &x in xs {
        check_location("location", x)?;
    }
    let n = xs.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = covariance_unchecked(params.alpha, params.sigma, xs[i], xs[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Predictive standard deviation `SD[g(x+h) | g(x), g'(x)]`.
///
/// Independent of `x`: `σ(h) = (σ/α)·sqrt(h/2 − sin(2αh)/(4α))`.
pub fn psd(params: &SgpParams, h: f64) -> Result<f64> {
    check_finite("h", h)?;
    if h <= 0.0 {
        return Err(Error::domain(format!("prediction unit h must be positive, got {h}")));
    }
    Ok(params.sigma / params.alpha * variance_factor(params.alpha, h).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_at_origin() {
        let p = SgpParams::new(1.0, 1.0).unwrap();
        for x in [0.0, 0.3, 5.0, 100.0] {
            assert_eq!(covariance(&p, 0.0, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn diagonal_is_variance_formula() {
        let p = SgpParams::new(1.0, 1.0).unwrap();
        for x in [0.01f64, 0.5, 2.0, 17.3] {
            let expected = x / 2.0 - (2.0 * x).sin() / 4.0;
            assert_relative_eq!(covariance(&p, x, x).unwrap(), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn psd_full_period() {
        let p = SgpParams::new(2.0 * PI, 1.0).unwrap();
        let expected = (0.5f64).sqrt() / (2.0 * PI);
        assert_relative_eq!(psd(&p, 1.0).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn psd_vanishes_with_sigma() {
        let p = SgpParams::new(3.0, 1e-300).unwrap();
        assert!(psd(&p, 2.0).unwrap() < 1e-299);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SgpParams::new(1e-9, 1.0).is_err());
        assert!(SgpParams::new(1.0, 0.0).is_err());
        assert!(SgpParams::new(f64::NAN, 1.0).is_err());
        let p = SgpParams::new(1.0, 1.0).unwrap();
        assert!(covariance(&p, -1.0, 2.0).is_err());
        assert!(covariance(&p, 1.0, f64::INFINITY).is_err());
        assert!(psd(&p, 0.0).is_err());
        assert!(psd(&p, -2.0).is_err());
    }

    #[test]
    fn matrix_is_elementwise_and_psd() {
        let p = SgpParams::new(PI, 1.0).unwrap();
        let m = covariance_matrix(&p, &[1.0, 2.0]).unwrap();
        assert_eq!(m[(0, 1)], covariance(&p, 1.0, 2.0).unwrap());
        assert_eq!(m[(1, 1)], covariance(&p, 2.0, 2.0).unwrap());
        assert_eq!(covariance_matrix(&p, &[0.0]).unwrap()[(0, 0)], 0.0);

        let p = SgpParams::new(2.0 * PI, 1.0).unwrap();
        let xs: Vec<f64> = (0..10).map(|i| 5.0 * i as f64 / 9.0).collect();
        let eig = covariance_matrix(&p, &xs).unwrap().symmetric_eigen();
        assert!(eig.eigenvalues.min() >= -1e-10);
    }

    #[test]
    fn boundary_basis_is_null_space() {
        let b = BoundaryBasis::new(2.5).unwrap();
        assert_eq!(b.eval(0.0), [1.0, 0.0]);
        for x in [0.0, 0.4, 3.3, 12.0] {
            let r = b.apply_operator(x);
            assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-12);
        }
    }

    #[test]
    fn series_matches_direct_near_switch() {
        for t in [0.2499, 0.25, 0.1, 1e-3] {
            let direct = t - f64::sin(t);
            assert_relative_eq!(t_minus_sin(t), direct, max_relative = 1e-9);
        }
    }

    #[test]
    fn psd_monotone_over_periods() {
        let p = SgpParams::new(2.0 * PI, 1.0).unwrap();
        let vals: Vec<f64> = (1..=2000).map(|i| psd(&p, i as f64 * 0.0025).unwrap()).collect();
        for w in vals.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    proptest! {
        #[test]
        fn symmetric(alpha in 0.05f64..30.0, x1 in 0.0f64..20.0, x2 in 0.0f64..20.0) {
            let p = SgpParams::new(alpha, 1.3).unwrap();
            prop_assert_eq!(covariance(&p, x1, x2).unwrap(), covariance(&p, x2, x1).unwrap());
        }

        #[test]
        fn sigma_scales_quadratically(alpha in 0.05f64..30.0, c in 0.01f64..50.0, x1 in 0.0f64..20.0, x2 in 0.0f64..20.0) {
            let unit = covariance(&SgpParams::new(alpha, 1.0).unwrap(), x1, x2).unwrap();
            let scaled = covariance(&SgpParams::new(alpha, c).unwrap(), x1, x2).unwrap();
            prop_assert!((scaled - c * c * unit).abs() <= 1e-12 * (c * c * unit).abs().max(1e-300) * 4.0);
        }
    }
}
