//! Correlation error of cubic and seasonal B-spline approximations.
//!
//! Domain [0, 10], reference point 5, error over [1, 9].

use sgp::fem::{correlation_error_curve, BasisFamily, FemApprox};
use sgp::kernel::{covariance, SgpParams};
use std::f64::consts::PI;

fn main() -> sgp::Result<()> {
    let ks = [12, 21, 30, 60, 90];
    for alpha in [2.0 * PI, 2.0 * PI / 5.0] {
        println!("alpha = {alpha:.4}");
        println!("  {:<6} {:>12} {:>12}", "k", "cubic", "sB");
        let cubic = correlation_error_curve(BasisFamily::CubicBSpline, alpha, (0.0, 10.0), &ks, 5.0, (1.0, 9.0))?;
        let sb = correlation_error_curve(BasisFamily::SeasonalBSpline, alpha, (0.0, 10.0), &ks, 5.0, (1.0, 9.0))?;
        for (c, s) in cubic.iter().zip(&sb) {
            println!("  {:<6} {:>12.3e} {:>12.3e}", c.k, c.max_error, s.max_error);
        }
    }

    // covariance error at a fixed pair as the basis grows
    let params = SgpParams::new(2.0 * PI, 1.0)?;
    let exact = covariance(&params, 3.0, 7.0)?;
    println!("|C_k(3, 7) - C(3, 7)| with C = {exact:.6}");
    for k in [20, 40, 80, 160] {
        let mut row = format!("  k = {k:<4}");
        for family in [BasisFamily::CubicBSpline, BasisFamily::SeasonalBSpline] {
            let approx = FemApprox::with_size(family, (0.0, 10.0), k, 2.0 * PI)?;
            let c = approx.covariance(1.0, &[3.0, 7.0])?;
            row.push_str(&format!("  {} {:.3e}", family.name(), (c[(0, 1)] - exact).abs()));
        }
        println!("{row}");
    }
    Ok(())
}
