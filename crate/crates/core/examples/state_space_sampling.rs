//! Sparse precision of the augmented state and reproducible sample paths.

use sgp::kernel::{covariance, SgpParams};
use sgp::oracle::monte_carlo_covariance;
use sgp::statespace::{assemble_precision, sample_paths, LocationGrid, StateSpaceChain};

fn main() -> sgp::Result<()> {
    let params = SgpParams::new(std::f64::consts::PI, 1.0)?;
    let s: Vec<f64> = (1..=300).map(|i| i as f64 * 0.01).collect();
    let chain = StateSpaceChain::new(params, LocationGrid::new(s.clone())?);
    let q = assemble_precision(&chain)?;
    println!(
        "Q_aug: dimension {}, half bandwidth {}, {} stored nonzeros (lower)",
        q.dim(),
        q.matrix().half_bandwidth(),
        q.matrix().nonzeros_lower()
    );

    let paths = sample_paths(&chain, 5, 42)?;
    println!("x      path1     path2     path3     path4     path5");
    for i in (0..s.len()).step_by(30) {
        print!("{:<6.2}", s[i]);
        for k in 0..5 {
            print!(" {:+.5}", paths[(k, i)]);
        }
        println!();
    }

    // empirical covariance at a few locations against the kernel
    let picks = [49, 99, 199, 299];
    let sub_grid = LocationGrid::new(picks.iter().map(|&i| s[i]).collect())?;
    let draws = sample_paths(&StateSpaceChain::new(params, sub_grid), 20_000, 7)?;
    let (emp, se) = monte_carlo_covariance(&draws);
    for (a, &i) in picks.iter().enumerate() {
        for (b, &j) in picks.iter().enumerate().skip(a) {
            let exact = covariance(&params, s[i], s[j])?;
            println!(
                "C({:.2}, {:.2}) = {exact:+.4}  empirical {:+.4} ± {:.4}",
                s[i], s[j], emp[(a, b)], se[(a, b)]
            );
        }
    }
    Ok(())
}
