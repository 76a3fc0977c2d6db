//! Setting priors through the predictive standard deviation σ(h).

use sgp::prior::{median_psd, psd_scale, sigma_prior, ExponentialPrior, PsdPrior};
use std::f64::consts::PI;

fn main() -> sgp::Result<()> {
    // P(σ(50) > 1) = 0.01 for a decade-scale cycle on yearly data
    let prior = PsdPrior::new(50.0, 1.0, 0.01)?;
    println!("rate on σ(50): {:.4}, median σ(50): {:.4}", prior.rate(), median_psd(&prior));
    println!("period   s(α, h)    rate on σ   median σ");
    for period in [6.0, 8.0, 10.0, 12.0] {
        let alpha = 2.0 * PI / period;
        let law = sigma_prior(&prior, alpha)?;
        println!("{period:<8} {:<10.4} {:<11.4} {:.5}", psd_scale(alpha, 50.0)?, law.rate(), law.median());
    }

    // the same statement about σ(h) gives different σ priors at different h
    for h in [0.5, 1.0, 2.0] {
        let p = PsdPrior::new(h, 0.01, 0.5)?;
        let law = sigma_prior(&p, 2.0 * PI)?;
        println!("h = {h}: P(σ(h) > 0.01) = 0.5 gives median σ = {:.5}", law.median());
    }

    let noise = ExponentialPrior::from_tail(1.0, 0.01)?;
    let levels = noise.quantile_grid(9)?;
    println!("noise-SD grid: {}", levels.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" "));
    Ok(())
}
