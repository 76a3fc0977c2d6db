//! Excess over the expected seasonal pattern in a held-out year.

use sgp::inference::{excess_summary, fit, FitOptions};
use sgp::io::{load_dataset, ModelConfig};

fn main() -> sgp::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    let config = ModelConfig::load(format!("{dir}/weekly_config.json"))?;
    let data = load_dataset(format!("{dir}/weekly_holdout.csv"))?;
    let spec = config.to_spec(data)?;
    let result = fit(&spec, &FitOptions::default())?;

    let (hx, hy) = spec.data.holdout_rows();
    let draws = excess_summary(&result, &spec, &hx, &hy, config.excess_samples, config.seed)?;
    let mut sorted: Vec<f64> = draws.iter().map(|d| -d).collect();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| sorted[((sorted.len() - 1) as f64 * p).round() as usize];
    println!("{} held-out weeks", hx.len());
    println!("observed minus predicted, summed:");
    println!("  median {:.3}, 95% interval [{:.3}, {:.3}]", q(0.5), q(0.025), q(0.975));
    Ok(())
}
