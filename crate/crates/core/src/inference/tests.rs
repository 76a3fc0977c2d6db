use super::*;
use crate::kernel::{covariance_matrix, SgpParams};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::f64::consts::TAU;

/// Covariance-form posterior of `η` with kernel `k` plus fixed and boundary columns.
struct DenseOracle {
    mean: Vec<f64>,
    sd: Vec<f64>,
    log_ml: f64,
}

fn dense_oracle(k_all: &DMatrix<f64>, columns: &[Vec<f64>], var: f64, train: &[usize], y: &[f64], noise: f64) -> DenseOracle {
    let n = k_all.nrows();
    let mut k = k_all.clone();
    for col in columns {
        let v = DVector::from_column_slice(col);
        k += &v * v.transpose() * var;
    }
    let m = train.len();
    let mut ky = DMatrix::zeros(m, m);
    let mut kx = DMatrix::zeros(n, m);
    for (a, &i) in train.iter().enumerate() {
        for (b, &j) in train.iter().enumerate() {
            ky[(a, b)] = k[(i, j)];
        }
        ky[(a, a)] += noise * noise;
        for r in 0..n {
            kx[(r, a)] = k[(r, i)];
        }
    }
    let chol = ky.clone().cholesky().unwrap();
    let yv = DVector::from_column_slice(y);
    let alpha = chol.solve(&yv);
    let mean = &kx * &alpha;
    let post = &k - &kx * chol.solve(&kx.transpose());
    let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let log_ml = -0.5 * yv.dot(&alpha) - 0.5 * log_det - 0.5 * m as f64 * TAU.ln();
    DenseOracle {
        mean: mean.iter().copied().collect(),
        sd: (0..n).map(|i| post[(i, i)].max(0.0).sqrt()).collect(),
        log_ml,
    }
}

fn single(v: f64) -> LevelGrid {
    LevelGrid::Values(vec![v])
}

fn random_problem(seed: u64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..6.0)).collect();
    x.sort_by(f64::total_cmp);
    let y = x.iter().map(|x| (1.3 * x).sin() + 0.3 * rng.random_range(-1.0..1.0)).collect();
    (x, y)
}

fn assert_close(a: &[f64], b: &[f64], tol: f64, what: &str) {
    for (i, (u, v)) in a.iter().zip(b).enumerate() {
        assert!((u - v).abs() <= tol * (1.0 + v.abs()), "{what}[{i}]: {u} vs {v}");
    }
}

#[test]
fn single_node_matches_dense_oracle() {
    let alpha = 1.3;
    let (x, y) = random_problem(1, 15);
    let prior = PsdPrior::new(1.0, 1.0, 0.5).unwrap();
    let psd = 0.4;
    let comp = ComponentSpec::new("s", Frequency::Alpha(alpha), prior).with_levels(single(psd));
    let noise = NoiseSpec::new(ExponentialPrior::new(1.0).unwrap(), single(0.3));
    let spec = ModelSpec::new(Dataset::observed(x.clone(), y.clone()).unwrap(), vec![comp], noise);
    let result = fit(&spec, &FitOptions::default()).unwrap();
    let sigma = psd / psd_scale(alpha, 1.0).unwrap();
    let kg = covariance_matrix(&SgpParams::new(alpha, sigma).unwrap(), &x).unwrap();
    let cols = vec![
        vec![1.0; x.len()],
        x.iter().map(|x| (alpha * x).cos()).collect(),
        x.iter().map(|x| (alpha * x).sin()).collect(),
    ];
    let train: Vec<usize> = (0..x.len()).collect();
    let o = dense_oracle(&kg, &cols, 1000.0, &train, &y, 0.3);
    assert_close(&result.fitted_mean, &o.mean, 1e-8, "mean");
    assert_close(&result.fitted_sd, &o.sd, 1e-8, "sd");
    let node = &result.nodes[0];
    assert!((node.log_marginal_likelihood - o.log_ml).abs() < 1e-8 * o.log_ml.abs().max(1.0));
    assert_eq!(node.weight, 1.0);
}

#[test]
fn prediction_rows_and_two_components_match_oracle() {
    let (x, y) = random_problem(2, 20);
    let mut yo: Vec<Option<f64>> = y.iter().copied().map(Some).collect();
    yo[4] = None;
    yo[11] = None;
    let mut holdout = vec![false; x.len()];
    holdout[15] = true;
    let data = Dataset::new(x.clone(), yo, Some(holdout), Vec::new()).unwrap();
    let prior = PsdPrior::new(2.0, 1.0, 0.1).unwrap();
    let c1 = ComponentSpec::new("long", Frequency::Harmonic(1.0), prior).with_levels(single(0.5));
    let c2 = ComponentSpec::new("short", Frequency::Harmonic(2.0), prior)
        .with_levels(single(0.2))
        .without_boundary();
    let noise = NoiseSpec::new(ExponentialPrior::new(1.0).unwrap(), single(0.25));
    let fixed = FixedEffects {
        degree: 2,
        ..FixedEffects::default()
    };
    let spec = ModelSpec::new(data, vec![c1, c2], noise)
        .with_fixed(fixed)
        .with_periods(PeriodGrid::uniform(vec![4.0]).unwrap());
    let result = fit(&spec, &FitOptions::default()).unwrap();

    let (a1, a2) = (TAU / 4.0, TAU / 2.0);
    let s1 = 0.5 / psd_scale(a1, 2.0).unwrap();
    let s2 = 0.2 / psd_scale(a2, 2.0).unwrap();
    let kg = covariance_matrix(&SgpParams::new(a1, s1).unwrap(), &x).unwrap()
        + covariance_matrix(&SgpParams::new(a2, s2).unwrap(), &x).unwrap();
    let (lo, hi) = (x[0], x[x.len() - 1]);
    let t: Vec<f64> = x.iter().map(|v| (v - 0.5 * (lo + hi)) / (0.5 * (hi - lo))).collect();
    let cols = vec![
        vec![1.0; x.len()],
        t.clone(),
        t.iter().map(|t| t * t).collect(),
        x.iter().map(|x| (a1 * x).cos()).collect(),
        x.iter().map(|x| (a1 * x).sin()).collect(),
    ];
    let train: Vec<usize> = (0..x.len()).filter(|i| ![4, 11, 15].contains(i)).collect();
    let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let o = dense_oracle(&kg, &cols, 1000.0, &train, &yt, 0.25);
    assert_close(&result.fitted_mean, &o.mean, 1e-8, "mean");
    assert_close(&result.fitted_sd, &o.sd, 1e-8, "sd");
    assert!((result.nodes[0].log_marginal_likelihood - o.log_ml).abs() < 1e-8 * o.log_ml.abs());

    // the short component alone has no boundary terms: its covariance is K₂
    let k2 = covariance_matrix(&SgpParams::new(a2, s2).unwrap(), &x).unwrap();
    let kg_joint = kg.clone();
    let k_eta = {
        let mut k = kg_joint;
        for col in &cols {
            let v = DVector::from_column_slice(col);
            k += &v * v.transpose() * 1000.0;
        }
        k
    };
    let mut ky = DMatrix::zeros(train.len(), train.len());
    let mut kc = DMatrix::zeros(x.len(), train.len());
    for (a, &i) in train.iter().enumerate() {
        for (b, &j) in train.iter().enumerate() {
            ky[(a, b)] = k_eta[(i, j)];
        }
        ky[(a, a)] += 0.0625;
        for r in 0..x.len() {
            kc[(r, a)] = k2[(r, i)];
        }
    }
    let chol = ky.cholesky().unwrap();
    let m2 = &kc * chol.solve(&DVector::from_column_slice(&yt));
    let v2 = &k2 - &kc * chol.solve(&kc.transpose());
    let sd2: Vec<f64> = (0..x.len()).map(|i| v2[(i, i)].sqrt()).collect();
    assert_close(&result.components[1].mean, m2.as_slice(), 1e-8, "component mean");
    assert_close(&result.components[1].sd, &sd2, 1e-8, "component sd");
}

#[test]
fn fem_component_matches_its_own_covariance() {
    let alpha = 1.3;
    let (x, y) = random_problem(3, 12);
    let prior = PsdPrior::new(1.0, 1.0, 0.5).unwrap();
    let rep = Representation::Fem {
        family: BasisFamily::SeasonalBSpline,
        r: 12,
        domain: Some((0.0, 6.0)),
    };
    let comp = ComponentSpec::new("s", Frequency::Alpha(alpha), prior)
        .with_levels(single(0.4))
        .with_representation(rep);
    let noise = NoiseSpec::new(ExponentialPrior::new(1.0).unwrap(), single(0.3));
    let spec = ModelSpec::new(Dataset::observed(x.clone(), y.clone()).unwrap(), vec![comp], noise);
    let result = fit(&spec, &FitOptions::default()).unwrap();
    let sigma = 0.4 / psd_scale(alpha, 1.0).unwrap();
    let approx = crate::fem::FemApprox::new(BasisFamily::SeasonalBSpline, (0.0, 6.0), 12, alpha).unwrap();
    let kg = approx.covariance(sigma, &x).unwrap();
    let cols = vec![
        vec![1.0; x.len()],
        x.iter().map(|x| (alpha * x).cos()).collect(),
        x.iter().map(|x| (alpha * x).sin()).collect(),
    ];
    let train: Vec<usize> = (0..x.len()).collect();
    let o = dense_oracle(&kg, &cols, 1000.0, &train, &y, 0.3);
    assert_close(&result.fitted_mean, &o.mean, 1e-8, "mean");
    assert_close(&result.fitted_sd, &o.sd, 1e-8, "sd");
    assert!((result.nodes[0].log_marginal_likelihood - o.log_ml).abs() < 1e-7);
}

fn grid_spec(weights: Vec<f64>) -> ModelSpec {
    let (x, y) = random_problem(4, 30);
    let prior = PsdPrior::new(1.0, 1.0, 0.1).unwrap();
    let comp = ComponentSpec::new("s", Frequency::Harmonic(1.0), prior).with_levels(LevelGrid::Quantiles(3));
    let noise = NoiseSpec::new(ExponentialPrior::from_tail(1.0, 0.1).unwrap(), LevelGrid::Quantiles(3));
    ModelSpec::new(Dataset::observed(x, y).unwrap(), vec![comp], noise)
        .with_periods(PeriodGrid::with_weights(vec![4.0, 4.5, 5.0, 5.5], weights).unwrap())
}

#[test]
fn weights_normalized_and_scale_free() {
    let a = fit(&grid_spec(vec![1.0; 4]), &FitOptions::default()).unwrap();
    let b = fit(&grid_spec(vec![2.0; 4]), &FitOptions::default()).unwrap();
    assert_eq!(a.nodes.len(), 36);
    let total: f64 = a.nodes.iter().map(|n| n.weight).sum();
    assert!((total - 1.0).abs() < 1e-12);
    for (na, nb) in a.nodes.iter().zip(&b.nodes) {
        assert!(na.weight >= 0.0);
        assert!((na.weight - nb.weight).abs() < 1e-14);
    }
    let pp: f64 = a.period_posterior().iter().map(|p| p.1).sum();
    assert!((pp - 1.0).abs() < 1e-12);
    for i in 0..a.x.len() {
        assert!(a.lower[i] <= a.fitted_mean[i] && a.fitted_mean[i] <= a.upper[i]);
    }
}

#[test]
fn threads_do_not_change_results() {
    let spec = grid_spec(vec![1.0; 4]);
    let a = fit(&spec, &FitOptions { threads: 1 }).unwrap();
    let b = fit(&spec, &FitOptions { threads: 3 }).unwrap();
    assert_eq!(a, b);
}

#[test]
fn noiseless_sinusoid_is_reproduced() {
    let alpha = TAU / 3.0;
    let x: Vec<f64> = (1..=40).map(|i| i as f64 * 0.3).collect();
    let y: Vec<f64> = x.iter().map(|x| (alpha * x).cos()).collect();
    let prior = PsdPrior::new(1.0, 0.5, 0.5).unwrap();
    let levels = vec![1e-4, 1e-2, 0.1, 0.5];
    let comp = ComponentSpec::new("s", Frequency::Alpha(alpha), prior).with_levels(LevelGrid::Values(levels));
    let noise = NoiseSpec::new(ExponentialPrior::new(1.0).unwrap(), single(1e-7));
    let fixed = FixedEffects {
        intercept: false,
        ..FixedEffects::default()
    };
    let spec = ModelSpec::new(Dataset::observed(x, y.clone()).unwrap(), vec![comp], noise).with_fixed(fixed);
    let result = fit(&spec, &FitOptions::default()).unwrap();
    for (m, y) in result.fitted_mean.iter().zip(&y) {
        assert!((m - y).abs() < 1e-6, "{m} vs {y}");
    }
    let best = result
        .nodes
        .iter()
        .max_by(|a, b| a.weight.total_cmp(&b.weight))
        .unwrap();
    assert_eq!(best.psd[0], 1e-4);
    assert!(best.weight > 0.99);
}

#[test]
fn forecast_at_training_points_equals_fit() {
    let spec = grid_spec(vec![1.0; 4]);
    let result = fit(&spec, &FitOptions::default()).unwrap();
    let horizon = vec![spec.data.x()[5], spec.data.x()[20], 7.5, 9.0];
    let f = forecast(&result, &spec, &horizon, &FitOptions::default()).unwrap();
    for (h, j) in [(0, 5), (1, 20)] {
        assert!((f.mean[h] - result.fitted_mean[j]).abs() < 1e-9);
        assert!((f.sd[h] - result.fitted_sd[j]).abs() < 1e-9);
    }
    assert!(f.sd[3] > f.sd[2]);
    assert!(f.lower[3] < f.mean[3] && f.mean[3] < f.upper[3]);
}

#[test]
fn forecast_outside_fem_domain_is_rejected() {
    let (x, y) = random_problem(5, 10);
    let rep = Representation::Fem {
        family: BasisFamily::CubicBSpline,
        r: 20,
        domain: None,
    };
    let comp = ComponentSpec::new("s", Frequency::Alpha(1.0), PsdPrior::new(1.0, 1.0, 0.5).unwrap())
        .with_levels(single(0.3))
        .with_representation(rep);
    let noise = NoiseSpec::new(ExponentialPrior::new(1.0).unwrap(), single(0.3));
    let spec = ModelSpec::new(Dataset::observed(x, y).unwrap(), vec![comp], noise);
    let result = fit(&spec, &FitOptions::default()).unwrap();
    let err = forecast(&result, &spec, &[100.0], &FitOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Domain(_)), "{err}");
}

#[test]
fn excess_samples_reproducible_and_centered() {
    let spec = grid_spec(vec![1.0; 4]);
    let result = fit(&spec, &FitOptions::default()).unwrap();
    let hx = vec![6.2, 6.5, 7.0];
    let f = forecast(&result, &spec, &hx, &FitOptions::default()).unwrap();
    let a = excess_summary(&result, &spec, &hx, &f.mean, 20_000, 9).unwrap();
    let b = excess_summary(&result, &spec, &hx, &f.mean, 20_000, 9).unwrap();
    assert_eq!(a, b);
    let m = a.iter().sum::<f64>() / a.len() as f64;
    let sd = (a.iter().map(|v| (v - m).powi(2)).sum::<f64>() / a.len() as f64).sqrt();
    assert!(m.abs() < 4.0 * sd / (a.len() as f64).sqrt(), "mean {m}, sd {sd}");
}

#[test]
fn collinear_fixed_effects_are_a_model_error() {
    let (x, y) = random_problem(6, 10);
    let n = x.len();
    let yo = y.into_iter().map(Some).collect();
    let data = Dataset::new(x, yo, None, vec![("one".into(), vec![2.0; n])]).unwrap();
    let comp = ComponentSpec::new("s", Frequency::Alpha(1.0), PsdPrior::new(1.0, 1.0, 0.5).unwrap()).with_levels(single(0.3));
    let noise = NoiseSpec::new(ExponentialPrior::new(1.0).unwrap(), single(0.3));
    let err = fit(&ModelSpec::new(data, vec![comp], noise), &FitOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Model(_)), "{err}");
}

#[test]
fn dataset_sorts_rows() {
    let d = Dataset::new(
        vec![3.0, 1.0, 2.0],
        vec![Some(30.0), None, Some(20.0)],
        Some(vec![true, false, false]),
        vec![("v".into(), vec![0.3, 0.1, 0.2])],
    )
    .unwrap();
    assert_eq!(d.x(), &[1.0, 2.0, 3.0]);
    assert_eq!(d.y(), &[None, Some(20.0), Some(30.0)]);
    assert_eq!(d.covariate(0), &[0.1, 0.2, 0.3]);
    assert_eq!(d.training_indices(), vec![1]);
    assert_eq!(d.holdout_rows(), (vec![3.0], vec![30.0]));
    assert!(Dataset::observed(vec![-1.0], vec![0.0]).is_err());
}

#[test]
fn explicit_levels_weighted_by_density() {
    let law = ExponentialPrior::new(2.0).unwrap();
    let lv = LevelGrid::Values(vec![0.1, 0.2, 0.3]).discretize(&law).unwrap();
    let w: Vec<f64> = lv.iter().map(|p| p.1.exp()).collect();
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    assert!((w[0] / w[1] - (0.2f64).exp()).abs() < 1e-12);
}
