//! Gaussian conditioning on the state-space chain against dense algebra.

use nalgebra::{DMatrix, DVector};
use sgp::kernel::SgpParams;
use sgp::oracle::dense_condition;
use sgp::statespace::{assemble_precision, condition_gaussian, LocationGrid, StateSpaceChain};

fn main() -> sgp::Result<()> {
    let params = SgpParams::new(2.0 * std::f64::consts::PI, 0.8)?;
    let s: Vec<f64> = (1..=40).map(|i| 0.1 * i as f64 + 0.02 * (i % 3) as f64).collect();
    let chain = StateSpaceChain::new(params, LocationGrid::new(s.clone())?);
    let observed: Vec<usize> = (0..40).step_by(3).collect();
    let y: Vec<f64> = observed.iter().map(|&i| (2.0 * std::f64::consts::PI * s[i]).sin() * 0.2).collect();
    let noise = 0.05;

    let sparse = condition_gaussian(&chain, &observed, &y, noise)?;

    let q = assemble_precision(&chain)?.to_dense();
    let mut a = DMatrix::zeros(observed.len(), 2 * s.len());
    for (r, &i) in observed.iter().enumerate() {
        a[(r, 2 * i)] = 1.0;
    }
    let (dense_mean, dense_cov) = dense_condition(&q, &a, &DVector::from_column_slice(&y), noise)?;

    let mut worst = 0.0_f64;
    for i in 0..2 * s.len() {
        worst = worst.max((sparse.mean[i] - dense_mean[i]).abs());
        worst = worst.max((sparse.sd[i] - dense_cov[(i, i)].sqrt()).abs());
    }
    println!("x      mean       sd");
    for i in (0..s.len()).step_by(5) {
        println!("{:<6.2} {:+.5}  {:.5}", s[i], sparse.mean[2 * i], sparse.sd[2 * i]);
    }
    println!("largest difference from the dense solve: {worst:.2e}");
    Ok(())
}
