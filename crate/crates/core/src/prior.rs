//! Priors set through the predictive standard deviation.
//!
//! At fixed `α` and `h`, `σ(h) = σ · s(α, h)` with
//! `s(α, h) = sqrt(h/2 − sin(2αh)/(4α)) / α`, so an exponential prior on
//! `σ(h)` is an exponential prior on `σ` with rate `λ · s(α, h)`.

use crate::error::{check_finite, Error, Result};
use crate::kernel::{self, SgpParams};

/// Exponential law on a positive scale parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialPrior {
    rate: f64,
}

fn check_tail(u: f64, p: f64) -> Result<()> {
    check_finite("threshold u", u)?;
    check_finite("probability p", p)?;
    if u <= 0.0 {
        return Err(Error::domain(format!("threshold u must be positive, got {u}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("probability p must lie in (0, 1), got {p}")));
    }
    Ok(())
}

impl ExponentialPrior {
    pub fn new(rate: f64) -> Result<Self> {
        check_finite("rate", rate)?;
        if rate <= 0.0 {
            return Err(Error::domain(format!("rate must be positive, got {rate}")));
        }
        Ok(ExponentialPrior { rate })
    }

    /// The exponential law with `P(X > u) = p`.
    pub fn from_tail(u: f64, p: f64) -> Result<Self> {
        check_tail(u, p)?;
        Self::new(-p.ln() / u)
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn median(&self) -> f64 {
        std::f64::consts::LN_2 / self.rate
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-self.rate * x).exp_m1()
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            (-self.rate * x).exp()
        }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if x < 0.0 {
            f64::NEG_INFINITY
        } else {
            self.rate.ln() - self.rate * x
        }
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        check_finite("quantile level", q)?;
        if !(0.0..1.0).contains(&q) {
            return Err(Error::domain(format!("quantile level must lie in [0, 1), got {q}")));
        }
        Ok(-(-q).ln_1p() / self.rate)
    }

    /// Values at `n` equally spaced quantile levels from 0.05 to 0.95
    /// (a single node sits at the median).
    pub fn quantile_grid(&self, n: usize) -> Result<Vec<f64>> {
        quantile_levels(n)?.into_iter().map(|q| self.quantile(q)).collect()
    }

    /// The law of `c · X`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.rate / c)
    }
}

/// Levels `0.05, …, 0.95` used to discretize a prior; nine give steps of 0.1.
pub fn quantile_levels(n: usize) -> Result<Vec<f64>> {
    match n {
        0 => Err(Error::domain("a quantile grid needs at least one node")),
        1 => Ok(vec![0.5]),
        _ => Ok((0..n).map(|i| 0.05 + 0.9 * i as f64 / (n - 1) as f64).collect()),
    }
}

/// Exponential prior on `σ(h)` encoded as `P(σ(h) > u) = p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdPrior {
    h: f64,
    u: f64,
    p: f64,
}

impl PsdPrior {
    pub fn new(h: f64, u: f64, p: f64) -> Result<Self> {
        check_finite("prediction unit h", h)?;
        if h <= 0.0 {
            return Err(Error::domain(format!("prediction unit h must be positive, got {h}")));
        }
        check_tail(u, p)?;
        Ok(PsdPrior { h, u, p })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `λ = −ln(p)/u`.
    pub fn rate(&self) -> f64 {
        -self.p.ln() / self.u
    }

    /// The exponential law of `σ(h)` itself.
    pub fn psd_law(&self) -> ExponentialPrior {
        ExponentialPrior { rate: self.rate() }
    }
}

/// `s(α, h)` with `σ(h) = σ · s(α, h)`.
pub fn psd_scale(alpha: f64, h: f64) -> Result<f64> {
    let unit = SgpParams::new(alpha, 1.0)?;
    let s = kernel::psd(&unit, h)?;
    if !(s > 0.0) {
        return Err(Error::domain(format!(
            "h/2 - sin(2αh)/(4α) is not positive for α = {alpha}, h = {h}"
        )));
    }
    Ok(s)
}

/// Exponential rate on `σ` induced by the prior on `σ(h)`.
pub fn to_sigma_rate(prior: &PsdPrior, alpha: f64) -> Result<f64> {
    Ok(prior.rate() * psd_scale(alpha, prior.h)?)
}

/// The induced prior on `σ`.
pub fn sigma_prior(prior: &PsdPrior, alpha: f64) -> Result<ExponentialPrior> {
    ExponentialPrior::new(to_sigma_rate(prior, alpha)?)
}

/// `σ` giving predictive standard deviation `psd_value` at `prior`'s `h`.
pub fn sigma_from_psd(psd_value: f64, alpha: f64, h: f64) -> Result<f64> {
    check_finite("psd", psd_value)?;
    Ok(psd_value / psd_scale(alpha, h)?)
}

/// Median `ln 2 / λ` of the `σ(h)` prior.
pub fn median_psd(prior: &PsdPrior) -> f64 {
    std::f64::consts::LN_2 / prior.rate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn median_at_half_probability_is_threshold() {
        let p = PsdPrior::new(1.0, 0.01, 0.5).unwrap();
        assert_relative_eq!(median_psd(&p), 0.01, max_relative = 1e-15);
        let lynx = PsdPrior::new(50.0, 1.0, 0.01).unwrap();
        assert_relative_eq!(median_psd(&lynx), LN_2 / 100f64.ln(), max_relative = 1e-15);
        assert!((median_psd(&lynx) - 0.1505).abs() < 1e-4);
    }

    #[test]
    fn induced_tail_probability() {
        let prior = PsdPrior::new(1.0, 0.3, 0.1).unwrap();
        let alpha = 2.0 * PI / 3.7;
        let sp = sigma_prior(&prior, alpha).unwrap();
        let sigma_u = sigma_from_psd(0.3, alpha, 1.0).unwrap();
        assert_relative_eq!(sp.survival(sigma_u), 0.1, max_relative = 1e-10);
    }

    #[test]
    fn round_trip() {
        let alpha = 2.0 * PI;
        for sigma in [0.01, 0.7, 3.0, 80.0] {
            let psd = kernel::psd(&SgpParams::new(alpha, sigma).unwrap(), 1.0).unwrap();
            assert_relative_eq!(sigma_from_psd(psd, alpha, 1.0).unwrap(), sigma, max_relative = 1e-12);
        }
    }

    #[test]
    fn quantile_grid_levels() {
        let e = ExponentialPrior::new(2.0).unwrap();
        let g = e.quantile_grid(9).unwrap();
        assert_eq!(g.len(), 9);
        assert_relative_eq!(e.cdf(g[0]), 0.05, max_relative = 1e-12);
        assert_relative_eq!(e.cdf(g[8]), 0.95, max_relative = 1e-12);
        assert_relative_eq!(e.quantile(0.5).unwrap(), e.median(), max_relative = 1e-15);
        assert!(e.quantile_grid(0).is_err());
    }

    #[test]
    fn rejects_bad_priors() {
        assert!(PsdPrior::new(0.0, 1.0, 0.5).is_err());
        assert!(PsdPrior::new(1.0, -1.0, 0.5).is_err());
        assert!(PsdPrior::new(1.0, 1.0, 1.0).is_err());
        assert!(PsdPrior::new(1.0, 1.0, 0.0).is_err());
        assert!(ExponentialPrior::from_tail(1.0, 1.5).is_err());
        assert!(to_sigma_rate(&PsdPrior::new(1.0, 1.0, 0.5).unwrap(), 0.0).is_err());
    }
}
