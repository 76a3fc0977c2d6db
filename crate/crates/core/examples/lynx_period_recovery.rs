//! Posterior over an unknown period on lynx-shaped synthetic data.
//!
//! The bundled series was simulated with period 10.1.

use sgp::inference::{fit, forecast, FitOptions};
use sgp::io::{load_dataset, ModelConfig};

fn main() -> sgp::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    let config = ModelConfig::load(format!("{dir}/lynx_config.json"))?;
    let data = load_dataset(format!("{dir}/lynx_synthetic.csv"))?;
    let spec = config.to_spec(data)?;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let options = FitOptions { threads };
    let result = fit(&spec, &options)?;

    println!("{} grid nodes", result.nodes.len());
    let posterior = result.period_posterior();
    let mut ranked = posterior.clone();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("most probable periods:");
    for (c, w) in ranked.iter().take(5) {
        println!("  {c:>5.1}  {w:.4}");
    }
    println!("mode: {:?}", result.period_mode());

    let f = forecast(&result, &spec, &config.horizon, &options)?;
    println!("x      mean     95% interval");
    for i in 0..f.x.len() {
        println!("{:<6} {:.3}   [{:.3}, {:.3}]", f.x[i], f.mean[i], f.lower[i], f.upper[i]);
    }
    Ok(())
}
