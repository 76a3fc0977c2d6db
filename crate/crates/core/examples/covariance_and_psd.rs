//! Closed-form covariance, its periodic structure and the predictive SD.
//!
//! Run with `cargo run --example covariance_and_psd`.

use sgp::kernel::{covariance, psd, BoundaryBasis, SgpParams};
use sgp::statespace::noise_covariance;
use std::f64::consts::PI;

fn main() -> sgp::Result<()> {
    for alpha in [PI / 4.0, PI, 2.0 * PI] {
        let p = SgpParams::new(alpha, 1.0)?;
        println!("alpha = {alpha:.4} (period {:.3})", p.period());
        println!("  x2     C(2, x2)");
        for k in 0..=8 {
            let x2 = 2.0 + 0.35 * k as f64;
            println!("  {x2:<6.2} {:+.6}", covariance(&p, 2.0, x2)?);
        }
        // σ(h): SD of g(x + h) given the whole past, from the state-space noise
        for h in [0.5, 1.0, 5.0] {
            let direct = psd(&p, h)?;
            let from_noise = noise_covariance(&p, h)?[(0, 0)].sqrt();
            println!("  h = {h}: psd {direct:.10} (state-space noise {from_noise:.10})");
        }
    }

    // cos and sin solve the homogeneous equation: L applied to them vanishes
    let b = BoundaryBasis::new(2.0 * PI)?;
    let worst = (0..100)
        .map(|i| b.apply_operator(i as f64 * 0.1))
        .flat_map(|v| v.into_iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    println!("max |L cos|, |L sin| on [0, 10): {worst:.2e}");
    Ok(())
}
