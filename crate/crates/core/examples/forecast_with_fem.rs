//! The same model fitted with the exact state space and with sB-splines.

use sgp::fem::BasisFamily;
use sgp::inference::{fit, forecast, ComponentSpec, Dataset, FitOptions, Frequency, LevelGrid, ModelSpec, NoiseSpec, Representation};
use sgp::prior::{ExponentialPrior, PsdPrior};
use std::f64::consts::TAU;

fn spec(data: Dataset, representation: Representation) -> sgp::Result<ModelSpec> {
    let component = ComponentSpec::new("season", Frequency::Alpha(TAU), PsdPrior::new(1.0, 0.2, 0.1)?)
        .with_levels(LevelGrid::Quantiles(5))
        .with_representation(representation);
    let noise = NoiseSpec::new(ExponentialPrior::from_tail(0.5, 0.01)?, LevelGrid::Quantiles(5));
    Ok(ModelSpec::new(data, vec![component], noise))
}

fn main() -> sgp::Result<()> {
    // monthly data over four years with a slowly growing seasonal amplitude
    let x: Vec<f64> = (1..=48).map(|i| i as f64 / 12.0).collect();
    let y: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, &x)| 1.0 + (1.0 + 0.1 * x) * (TAU * x).sin() + 0.05 * ((i * 7919) % 13) as f64 / 13.0)
        .collect();
    let data = Dataset::observed(x, y)?;
    let horizon: Vec<f64> = (49..=60).map(|i| i as f64 / 12.0).collect();

    let exact = spec(data.clone(), Representation::StateSpace)?;
    let fem = spec(
        data,
        Representation::Fem {
            family: BasisFamily::SeasonalBSpline,
            r: 60,
            domain: Some((0.0, 5.0)),
        },
    )?;
    let options = FitOptions::default();
    let r_exact = fit(&exact, &options)?;
    let r_fem = fit(&fem, &options)?;
    let f_exact = forecast(&r_exact, &exact, &horizon, &options)?;
    let f_fem = forecast(&r_fem, &fem, &horizon, &options)?;

    println!("x       state space          sB-spline (r = 60)");
    for i in 0..horizon.len() {
        println!(
            "{:<7.3} {:+.4} ± {:.4}     {:+.4} ± {:.4}",
            horizon[i], f_exact.mean[i], f_exact.sd[i], f_fem.mean[i], f_fem.sd[i]
        );
    }
    let gap = f_exact
        .mean
        .iter()
        .zip(&f_fem.mean)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("largest difference in forecast mean: {gap:.2e}");
    Ok(())
}
