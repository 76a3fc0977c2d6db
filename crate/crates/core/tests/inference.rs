use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sgp::fem::BasisFamily;
use sgp::inference::{
    excess_summary, fit, forecast, ComponentSpec, Dataset, FitOptions, Frequency, LevelGrid, ModelSpec, NoiseSpec,
    Representation,
};
use sgp::kernel::SgpParams;
use sgp::prior::{psd_scale, ExponentialPrior, PsdPrior};
use sgp::statespace::{sample_paths, LocationGrid, StateSpaceChain};
use std::f64::consts::TAU;

const ALPHA: f64 = TAU / 2.5;
const PSD: f64 = 0.3;
const NOISE: f64 = 0.25;

fn grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 * 0.15).collect()
}

/// Intercept plus trig plus one sGP path at `x`; returns (η, y).
fn simulate(x: &[f64], seed: u64) -> (Vec<f64>, Vec<f64>) {
    let sigma = PSD / psd_scale(ALPHA, 1.0).unwrap();
    let chain = StateSpaceChain::new(SgpParams::new(ALPHA, sigma).unwrap(), LocationGrid::new(x.to_vec()).unwrap());
    let path = sample_paths(&chain, 1, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let eta: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, &t)| 1.5 + 0.8 * (ALPHA * t + 0.4).cos() + path[(0, i)])
        .collect();
    let y = eta
        .iter()
        .map(|e| e + NOISE * rng.sample::<f64, _>(StandardNormal))
        .collect();
    (eta, y)
}

fn fixed_spec(data: Dataset, representation: Representation) -> ModelSpec {
    let comp = ComponentSpec::new("season", Frequency::Alpha(ALPHA), PsdPrior::new(1.0, 1.0, 0.5).unwrap())
        .with_levels(LevelGrid::Values(vec![PSD]))
        .with_representation(representation);
    let noise = NoiseSpec::new(ExponentialPrior::new(1.0).unwrap(), LevelGrid::Values(vec![NOISE]));
    ModelSpec::new(data, vec![comp], noise)
}

#[test]
fn representations_agree() {
    let x = grid(60);
    let (_, y) = simulate(&x, 3);
    let ymean = y.iter().sum::<f64>() / y.len() as f64;
    let ysd = (y.iter().map(|v| (v - ymean).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let data = Dataset::observed(x.clone(), y).unwrap();
    let ss = fit(&fixed_spec(data.clone(), Representation::StateSpace), &FitOptions::default()).unwrap();
    for family in [BasisFamily::SeasonalBSpline, BasisFamily::CubicBSpline] {
        let fem = Representation::Fem { family, r: 60, domain: None };
        let alt = fit(&fixed_spec(data.clone(), fem), &FitOptions::default()).unwrap();
        let worst = ss
            .fitted_mean
            .iter()
            .zip(&alt.fitted_mean)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.02 * ysd, "{family:?}: {worst} vs response sd {ysd}");
    }
}

#[test]
fn credible_intervals_are_calibrated() {
    let x = grid(30);
    let (mut inside, mut total) = (0usize, 0usize);
    for seed in 0..200 {
        let (eta, y) = simulate(&x, 1000 + seed);
        let spec = fixed_spec(Dataset::observed(x.clone(), y).unwrap(), Representation::StateSpace);
        let result = fit(&spec, &FitOptions::default()).unwrap();
        for i in 0..x.len() {
            total += 1;
            if result.lower[i] <= eta[i] && eta[i] <= result.upper[i] {
                inside += 1;
            }
        }
    }
    let coverage = inside as f64 / total as f64;
    assert!((0.90..=0.99).contains(&coverage), "coverage {coverage}");
}

#[test]
fn excess_draws_center_on_forecast_sum() {
    let x = grid(40);
    let (_, y) = simulate(&x, 8);
    let spec = fixed_spec(Dataset::observed(x, y).unwrap(), Representation::StateSpace);
    let result = fit(&spec, &FitOptions::default()).unwrap();
    let hx = vec![6.3, 6.6, 6.9, 7.2];
    let hy = vec![1.0, 2.0, 1.5, 0.5];
    let f = forecast(&result, &spec, &hx, &FitOptions::default()).unwrap();
    let draws = excess_summary(&result, &spec, &hx, &hy, 10_000, 21).unwrap();
    let n = draws.len() as f64;
    let m = draws.iter().sum::<f64>() / n;
    let sd = (draws.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let analytic = f.mean.iter().sum::<f64>() - hy.iter().sum::<f64>();
    assert!((m - analytic).abs() < 3.0 * sd / n.sqrt(), "{m} vs {analytic}");
    // the sum's sd cannot exceed the sum of marginal sds
    assert!(sd <= f.sd.iter().sum::<f64>() * 1.05);
    assert!(excess_summary(&result, &spec, &hx, &hy[..2], 10, 1).is_err());
}

#[test]
fn period_grid_posterior_concentrates() {
    let x = grid(80);
    let (_, y) = simulate(&x, 4);
    let data = Dataset::observed(x, y).unwrap();
    let comp = ComponentSpec::new("season", Frequency::Harmonic(1.0), PsdPrior::new(1.0, 1.0, 0.5).unwrap())
        .with_levels(LevelGrid::Quantiles(5));
    let noise = NoiseSpec::new(ExponentialPrior::new(1.0).unwrap(), LevelGrid::Quantiles(5));
    let spec = ModelSpec::new(data, vec![comp], noise)
        .with_periods(sgp::inference::PeriodGrid::stepped(1.5, 3.5, 0.1).unwrap());
    let result = fit(&spec, &FitOptions { threads: 2 }).unwrap();
    let total: f64 = result.nodes.iter().map(|n| n.weight).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let mode = result.period_mode().unwrap();
    assert!((mode - 2.5).abs() <= 0.2, "mode {mode}");
}

#[test]
fn near_duplicate_locations_stay_exact() {
    use nalgebra::{DMatrix, DVector};
    use sgp::kernel::covariance_matrix;
    use sgp::oracle::dense_condition_covariance;
    let mut x = grid(20);
    x.extend([1.2 + 1e-7, 1.8 + 3e-5, 1.8 + 6e-5, 2.4 + 1e-9]);
    x.sort_by(f64::total_cmp);
    let (_, y) = simulate(&x, 12);
    let mut spec = fixed_spec(Dataset::observed(x.clone(), y.clone()).unwrap(), Representation::StateSpace);
    spec.fixed.intercept = false;
    spec.components[0] = spec.components[0].clone().without_boundary();
    let result = fit(&spec, &FitOptions::default()).unwrap();
    let sigma = PSD / psd_scale(ALPHA, 1.0).unwrap();
    let k = covariance_matrix(&SgpParams::new(ALPHA, sigma).unwrap(), &x).unwrap();
    let n = x.len();
    let (mean, cov) = dense_condition_covariance(&k, &DMatrix::identity(n, n), &DVector::from_vec(y), NOISE).unwrap();
    for i in 0..n {
        assert!((result.fitted_mean[i] - mean[i]).abs() < 1e-9, "mean at {}", x[i]);
        assert!((result.fitted_sd[i] - cov[(i, i)].sqrt()).abs() < 1e-9, "sd at {}", x[i]);
    }
}
