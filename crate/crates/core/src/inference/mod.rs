//! Conjugate Bayesian fitting on a discrete hyperparameter grid.
//!
//! The response is `y = η + ε` with
//! `η(x) = fixed effects + Σ_c [g_c(x) + a_c cos(α_c x) + b_c sin(α_c x)]`,
//! each `g_c` an independent sGP started at the origin and `ε` Gaussian
//! noise. At every grid node (period, one `σ(h)` level per component, one
//! noise level) the posterior of all latent coordinates and the marginal
//! likelihood are exact; nodes are then averaged with weights proportional
//! to prior mass times marginal likelihood.
//!
//! ```
//! use sgp::inference::{fit, ComponentSpec, Dataset, FitOptions, Frequency, LevelGrid, ModelSpec, NoiseSpec};
//! use sgp::prior::{ExponentialPrior, PsdPrior};
//!
//! let x: Vec<f64> = (1..=40).map(|i| i as f64 * 0.25).collect();
//! let y: Vec<f64> = x.iter().map(|x| (std::f64::consts::TAU * x).sin()).collect();
//! let component = ComponentSpec::new("annual", Frequency::Alpha(std::f64::consts::TAU), PsdPrior::new(1.0, 0.5, 0.1)?)
//!     .with_levels(LevelGrid::Quantiles(3));
//! let noise = NoiseSpec::new(ExponentialPrior::from_tail(1.0, 0.01)?, LevelGrid::Quantiles(3));
//! let spec = ModelSpec::new(Dataset::observed(x, y)?, vec![component], noise);
//! let result = fit(&spec, &FitOptions::default())?;
//! assert!(result.lower[3] <= result.fitted_mean[3] && result.fitted_mean[3] <= result.upper[3]);
//! assert!((result.nodes.iter().map(|n| n.weight).sum::<f64>() - 1.0).abs() < 1e-12);
//! # Ok::<(), sgp::Error>(())
//! ```

mod mixture;
mod model;

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{check_finite, Error, Result};
use crate::fem::BasisFamily;
use crate::prior::{psd_scale, ExponentialPrior, PsdPrior};
use crate::statespace::{LocationGrid, MERGE_TOLERANCE};

use model::{ComponentPlan, NodeSummary, PeriodModel};

/// Default prior variance of fixed-effect and boundary coefficients.
pub const DEFAULT_PRIOR_VARIANCE: f64 = 1000.0;

/// Nodes whose normalized weight is below this are left out of the
/// posterior summaries (their weights are still reported).
pub const SUMMARY_WEIGHT_FLOOR: f64 = 1e-12;

/// Probability mass of the reported credible intervals.
pub const CREDIBLE_LEVEL: f64 = 0.95;

/// Observations sorted by `x`. Rows with a missing `y` or a holdout flag are
/// evaluated but do not enter the likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<Option<f64>>,
    holdout: Vec<bool>,
    covariate_names: Vec<String>,
    covariates: Vec<Vec<f64>>,
}

impl Dataset {
    /// Rows are reordered by `x` (stable); every column follows.
    pub fn new(
        x: Vec<f64>,
        y: Vec<Option<f64>>,
        holdout: Option<Vec<bool>>,
        covariates: Vec<(String, Vec<f64>)>,
    ) -> Result<Self> {
        let n = x.len();
        if y.len() != n {
            return Err(Error::domain(format!("{n} x values but {} y values", y.len())));
        }
        for &v in &x {
            check_finite("x", v)?;
            if v < 0.0 {
                return Err(Error::domain(format!("x must be nonnegative, got {v}")));
            }
        }
        for v in y.iter().flatten() {
            check_finite("y", *v)?;
        }
        let holdout = holdout.unwrap_or_else(|| vec![false; n]);
        if holdout.len() != n {
            return Err(Error::domain(format!("{n} rows but {} holdout flags", holdout.len())));
        }
        for (name, col) in &covariates {
            if col.len() != n {
                return Err(Error::domain(format!("covariate {name} has {} values for {n} rows", col.len())));
            }
            for &v in col {
                check_finite(name, v)?;
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        let (covariate_names, covariates) = covariates
            .into_iter()
            .map(|(name, col)| (name, order.iter().map(|&i| col[i]).collect()))
            .unzip();
        Ok(Dataset {
            x: order.iter().map(|&i| x[i]).collect(),
            y: order.iter().map(|&i| y[i]).collect(),
            holdout: order.iter().map(|&i| holdout[i]).collect(),
            covariate_names,
            covariates,
        })
    }

    /// Fully observed data without covariates.
    pub fn observed(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::new(x, y.into_iter().map(Some).collect(), None, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[Option<f64>] {
        &self.y
    }

    pub fn holdout(&self) -> &[bool] {
        &self.holdout
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn covariate(&self, k: usize) -> &[f64] {
        &self.covariates[k]
    }

    /// Row enters the likelihood.
    pub fn is_training(&self, i: usize) -> bool {
        self.y[i].is_some() && !self.holdout[i]
    }

    pub fn training_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_training(i)).collect()
    }

    /// Flagged rows with an observed `y`.
    pub fn holdout_rows(&self) -> (Vec<f64>, Vec<f64>) {
        (0..self.len())
            .filter_map(|i| match (self.holdout[i], self.y[i]) {
                (true, Some(y)) => Some((self.x[i], y)),
                _ => None,
            })
            .unzip()
    }
}

/// Frequency of a component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frequency {
    /// Fixed `α` in radians per unit of `x`.
    Alpha(f64),
    /// `α = 2π j / c` for the period `c` of the grid node (`j = 2` gives period `c/2`).
    Harmonic(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Representation {
    StateSpace,
    /// `r` splines on `domain` (default `[0, max x]`).
    Fem {
        family: BasisFamily,
        r: usize,
        domain: Option<(f64, f64)>,
    },
}

/// Discretization of a scale prior.
#[derive(Debug, Clone, PartialEq)]
pub enum LevelGrid {
    /// Equal-weight nodes at quantile levels 0.05…0.95.
    Quantiles(usize),
    /// Explicit values weighted by prior density times cell width.
    Values(Vec<f64>),
}

impl LevelGrid {
    /// `(value, log weight)` pairs, weights normalized.
    pub fn discretize(&self, law: &ExponentialPrior) -> Result<Vec<(f64, f64)>> {
        match self {
            LevelGrid::Quantiles(n) => {
                let lw = -(*n as f64).ln();
                Ok(law.quantile_grid(*n)?.into_iter().map(|v| (v, lw)).collect())
            }
            LevelGrid::Values(values) => {
                if values.is_empty() {
                    return Err(Error::Config("a level grid needs at least one value".into()));
                }
                for &v in values {
                    check_finite("grid level", v)?;
                    if v <= 0.0 {
                        return Err(Error::Config(format!("grid levels must be positive, got {v}")));
                    }
                }
                if values.len() == 1 {
                    return Ok(vec![(values[0], 0.0)]);
                }
                let mut sorted = values.clone();
                sorted.sort_by(f64::total_cmp);
                let n = sorted.len();
                let width = |i: usize| -> f64 {
                    let lo = if i == 0 { sorted[0] - 0.5 * (sorted[1] - sorted[0]) } else { 0.5 * (sorted[i - 1] + sorted[i]) };
                    let hi = if i + 1 == n {
                        sorted[n - 1] + 0.5 * (sorted[n - 1] - sorted[n - 2])
                    } else {
                        0.5 * (sorted[i] + sorted[i + 1])
                    };
                    hi - lo
                };
                let raw: Vec<f64> = values
                    .iter()
                    .map(|&v| {
                        let i = sorted.partition_point(|&s| s < v);
                        law.log_density(v) + width(i).max(f64::MIN_POSITIVE).ln()
                    })
                    .collect();
                let total = log_sum_exp(&raw);
                Ok(values.iter().zip(raw).map(|(&v, w)| (v, w - total)).collect())
            }
        }
    }

    fn len(&self) -> usize {
        match self {
            LevelGrid::Quantiles(n) => *n,
            LevelGrid::Values(v) => v.len(),
        }
    }
}

/// One seasonal component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSpec {
    pub name: String,
    pub frequency: Frequency,
    /// Prior on the predictive standard deviation `σ(h)`; the grid levels are `σ(h)` values.
    pub prior: PsdPrior,
    pub levels: LevelGrid,
    pub representation: Representation,
    /// Add `cos(αx)` and `sin(αx)` coefficients for nonzero initial conditions.
    pub boundary: bool,
}

impl ComponentSpec {
    /// State-space component with nine quantile levels and boundary terms.
    pub fn new(name: impl Into<String>, frequency: Frequency, prior: PsdPrior) -> Self {
        ComponentSpec {
            name: name.into(),
            frequency,
            prior,
            levels: LevelGrid::Quantiles(9),
            representation: Representation::StateSpace,
            boundary: true,
        }
    }

    pub fn with_levels(mut self, levels: LevelGrid) -> Self {
        self.levels = levels;
        self
    }

    pub fn with_representation(mut self, representation: Representation) -> Self {
        self.representation = representation;
        self
    }

    pub fn without_boundary(mut self) -> Self {
        self.boundary = false;
        self
    }
}

/// Polynomial trend and covariate columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedEffects {
    pub intercept: bool,
    /// Polynomial degree in the standardized `x`, at most 3.
    pub degree: usize,
    /// Include every covariate of the dataset.
    pub covariates: bool,
    pub prior_var: f64,
}

impl Default for FixedEffects {
    fn default() -> Self {
        FixedEffects {
            intercept: true,
            degree: 0,
            covariates: true,
            prior_var: DEFAULT_PRIOR_VARIANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub prior: ExponentialPrior,
    pub levels: LevelGrid,
}

impl NoiseSpec {
    pub fn new(prior: ExponentialPrior, levels: LevelGrid) -> Self {
        NoiseSpec { prior, levels }
    }
}

/// Candidate periods with prior weights (uniform by default).
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodGrid {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl PeriodGrid {
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::with_weights(values, vec![1.0; n])
    }

    pub fn with_weights(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("the period grid is empty".into()));
        }
        if weights.len() != values.len() {
            return Err(Error::Config(format!("{} periods but {} weights", values.len(), weights.len())));
        }
        for &c in &values {
            check_finite("period", c)?;
            if c <= 0.0 {
                return Err(Error::Config(format!("periods must be positive, got {c}")));
            }
        }
        for &w in &weights {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Config(format!("period weights must be positive, got {w}")));
            }
        }
        Ok(PeriodGrid { values, weights })
    }

    /// `lo, lo + step, …` up to `hi` (inclusive, to rounding).
    pub fn stepped(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && hi >= lo) {
            return Err(Error::Config(format!("invalid period range {lo}..{hi} step {step}")));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Self::uniform((0..n).map(|i| lo + i as f64 * step).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Everything `fit` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub data: Dataset,
    pub components: Vec<ComponentSpec>,
    pub fixed: FixedEffects,
    pub boundary_prior_var: f64,
    pub noise: NoiseSpec,
    /// Required when a component uses [`Frequency::Harmonic`].
    pub periods: Option<PeriodGrid>,
}

impl ModelSpec {
    pub fn new(data: Dataset, components: Vec<ComponentSpec>, noise: NoiseSpec) -> Self {
        ModelSpec {
            data,
            components,
            fixed: FixedEffects::default(),
            boundary_prior_var: DEFAULT_PRIOR_VARIANCE,
            noise,
            periods: None,
        }
    }

    pub fn with_periods(mut self, periods: PeriodGrid) -> Self {
        self.periods = Some(periods);
        self
    }

    pub fn with_fixed(mut self, fixed: FixedEffects) -> Self {
        self.fixed = fixed;
        self
    }

    fn uses_period(&self) -> bool {
        self.components.iter().any(|c| matches!(c.frequency, Frequency::Harmonic(_)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.training_indices().is_empty() {
            return Err(Error::Model("the dataset has no training rows".into()));
        }
        for (name, v) in [("fixed-effect prior variance", self.fixed.prior_var), ("boundary prior variance", self.boundary_prior_var)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.fixed.degree > 3 {
            return Err(Error::Config(format!("polynomial degree is at most 3, got {}", self.fixed.degree)));
        }
        if self.noise.levels.len() == 0 {
            return Err(Error::Config("the noise grid is empty".into()));
        }
        for c in &self.components {
            if c.levels.len() == 0 {
                return Err(Error::Config(format!("component {} has an empty level grid", c.name)));
            }
            match c.frequency {
                Frequency::Alpha(a) | Frequency::Harmonic(a) if !(a.is_finite() && a > 0.0) => {
                    return Err(Error::Config(format!("component {} has invalid frequency {a}", c.name)));
                }
                _ => {}
            }
        }
        if self.uses_period() && self.periods.is_none() {
            return Err(Error::Config("harmonic components need a period grid".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Worker threads for the grid (1 runs sequentially).
    pub threads: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { threads: 1 }
    }
}

/// One hyperparameter combination.
#[derive(Debug, Clone, PartialEq)]
pub struct GridNode {
    pub period_index: usize,
    pub period: Option<f64>,
    /// `σ(h)` level of each component.
    pub psd: Vec<f64>,
    /// The corresponding `σ` of each component.
    pub sigma: Vec<f64>,
    pub noise_sd: f64,
    pub log_prior: f64,
    /// `NaN` for excluded nodes.
    pub log_marginal_likelihood: f64,
    pub weight: f64,
    pub excluded: bool,
}

/// Posterior of one component (sGP plus its boundary terms).
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSummary {
    pub name: String,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Posterior summaries at the dataset rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorResult {
    pub x: Vec<f64>,
    pub fitted_mean: Vec<f64>,
    pub fitted_sd: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub components: Vec<ComponentSummary>,
    pub nodes: Vec<GridNode>,
    pub warnings: Vec<String>,
}

impl PosteriorResult {
    /// Posterior mass of each candidate period.
    pub fn period_posterior(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for node in &self.nodes {
            let Some(c) = node.period else { continue };
            if out.len() <= node.period_index {
                out.resize(node.period_index + 1, (c, 0.0));
            }
            out[node.period_index] = (c, out[node.period_index].1 + node.weight);
        }
        out
    }

    /// Period with the largest posterior mass (first on ties).
    pub fn period_mode(&self) -> Option<f64> {
        self.period_posterior()
            .into_iter()
            .fold(None, |best: Option<(f64, f64)>, (c, w)| match best {
                Some((_, bw)) if bw >= w => best,
                _ => Some((c, w)),
            })
            .map(|(c, _)| c)
    }
}

/// Predictive law of `η` at horizon points, marginalized over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastTable {
    pub x: Vec<f64>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Evaluation points and the period-independent pieces of the model.
pub(crate) struct Frame {
    eval_x: Vec<f64>,
    train: Vec<usize>,
    y_train: Vec<f64>,
    fixed_rows: Vec<Vec<f64>>,
    ss_grid: Option<LocationGrid>,
    ss_map: Vec<Option<usize>>,
    default_domain: (f64, f64),
}

impl Frame {
    fn new(spec: &ModelSpec, extra: &[f64]) -> Result<Self> {
        let data = &spec.data;
        for &x in extra {
            check_finite("evaluation point", x)?;
            if x < 0.0 {
                return Err(Error::domain(format!("evaluation points must be nonnegative, got {x}")));
            }
        }
        let mut eval_x = data.x.clone();
        eval_x.extend_from_slice(extra);
        let train = data.training_indices();
        let y_train = train.iter().map(|&i| data.y[i].unwrap()).collect();
        let (lo, hi) = (data.x[0], data.x[data.len() - 1]);
        let center = 0.5 * (lo + hi);
        let scale = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
        let use_cov = spec.fixed.covariates && !data.covariates.is_empty();
        let mut fixed_rows = Vec::with_capacity(eval_x.len());
        for (j, &x) in eval_x.iter().enumerate() {
            let mut row = Vec::new();
            if spec.fixed.intercept {
                row.push(1.0);
            }
            let t = (x - center) / scale;
            for p in 1..=spec.fixed.degree {
                row.push(t.powi(p as i32));
            }
            if use_cov {
                let i = if j < data.len() {
                    j
                } else {
                    let k = data.x.partition_point(|&v| v < x - MERGE_TOLERANCE);
                    if k < data.len() && (data.x[k] - x).abs() <= MERGE_TOLERANCE {
                        k
                    } else {
                        return Err(Error::domain(format!(
                            "no covariate values at x = {x}; add the row to the dataset with an empty y"
                        )));
                    }
                };
                row.extend(data.covariates.iter().map(|col| col[i]));
            }
            fixed_rows.push(row);
        }
        let needs_grid = spec.components.iter().any(|c| c.representation == Representation::StateSpace);
        let (ss_grid, ss_map) = if needs_grid {
            LocationGrid::from_unsorted(&eval_x)?
        } else {
            (None, vec![None; eval_x.len()])
        };
        let default_domain = (0.0, if hi > 0.0 { hi } else { 1.0 });
        Ok(Frame {
            eval_x,
            train,
            y_train,
            fixed_rows,
            ss_grid,
            ss_map,
            default_domain,
        })
    }

    fn fixed_count(&self) -> usize {
        self.fixed_rows.first().map_or(0, Vec::len)
    }

    fn fixed_row(&self, j: usize) -> &[f64] {
        &self.fixed_rows[j]
    }

    /// Rejects collinear fixed-effect columns on the training rows.
    fn check_fixed_design(&self) -> Result<()> {
        let p = self.fixed_count();
        if p == 0 {
            return Ok(());
        }
        let mut gram = nalgebra::DMatrix::<f64>::zeros(p, p);
        for &j in &self.train {
            let row = &self.fixed_rows[j];
            for a in 0..p {
                for b in 0..p {
                    gram[(a, b)] += row[a] * row[b];
                }
            }
        }
        let eig = gram.symmetric_eigen().eigenvalues;
        let max = eig.iter().copied().fold(0.0, f64::max);
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        if !(max > 0.0) || min <= 1e-10 * max {
            return Err(Error::Model(
                "fixed-effect columns are collinear on the training rows (singular design)".into(),
            ));
        }
        Ok(())
    }
}

fn plans(spec: &ModelSpec, period: Option<f64>) -> Vec<ComponentPlan> {
    spec.components
        .iter()
        .map(|c| ComponentPlan {
            alpha: match (c.frequency, period) {
                (Frequency::Alpha(a), _) => a,
                (Frequency::Harmonic(j), Some(p)) => std::f64::consts::TAU * j / p,
                (Frequency::Harmonic(_), None) => unreachable!("validated"),
            },
            representation: c.representation,
            boundary: c.boundary,
        })
        .collect()
}

fn enumerate_nodes(spec: &ModelSpec) -> Result<Vec<GridNode>> {
    let periods: Vec<(Option<f64>, f64)> = if spec.uses_period() {
        let grid = spec.periods.as_ref().unwrap();
        let lw: Vec<f64> = grid.weights.iter().map(|w| w.ln()).collect();
        let total = log_sum_exp(&lw);
        grid.values.iter().zip(lw).map(|(&c, w)| (Some(c), w - total)).collect()
    } else {
        vec![(None, 0.0)]
    };
    let levels: Vec<Vec<(f64, f64)>> = spec
        .components
        .iter()
        .map(|c| c.levels.discretize(&c.prior.psd_law()))
        .collect::<Result<_>>()?;
    let noise = spec.noise.levels.discretize(&spec.noise.prior)?;
    let combos: usize = levels.iter().map(Vec::len).product();
    let mut nodes = Vec::with_capacity(periods.len() * combos * noise.len());
    for (pi, &(period, lw_period)) in periods.iter().enumerate() {
        let alphas: Vec<f64> = plans(spec, period).iter().map(|p| p.alpha).collect();
        let mut sigma_levels = Vec::with_capacity(levels.len());
        for ((c, lv), &alpha) in spec.components.iter().zip(&levels).zip(&alphas) {
            let s = psd_scale(alpha, c.prior.h())?;
            sigma_levels.push(lv.iter().map(|&(v, _)| v / s).collect::<Vec<f64>>());
        }
        for combo in 0..combos {
            let mut rest = combo;
            let mut idx = vec![0; levels.len()];
            for c in (0..levels.len()).rev() {
                idx[c] = rest % levels[c].len();
                rest /= levels[c].len();
            }
            let psd: Vec<f64> = idx.iter().enumerate().map(|(c, &l)| levels[c][l].0).collect();
            let sigma: Vec<f64> = idx.iter().enumerate().map(|(c, &l)| sigma_levels[c][l]).collect();
            let lw_levels: f64 = idx.iter().enumerate().map(|(c, &l)| levels[c][l].1).sum();
            for &(sd, lw_noise) in &noise {
                nodes.push(GridNode {
                    period_index: pi,
                    period,
                    psd: psd.clone(),
                    sigma: sigma.clone(),
                    noise_sd: sd,
                    log_prior: lw_period + lw_levels + lw_noise,
                    log_marginal_likelihood: f64::NAN,
                    weight: 0.0,
                    excluded: false,
                });
            }
        }
    }
    Ok(nodes)
}

fn thread_pool(options: &FitOptions) -> Result<rayon::ThreadPool> {
    if options.threads == 0 {
        return Err(Error::Config("thread count must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(options.threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))
}

/// Node indices grouped by period, in grid order.
fn by_period(nodes: &[GridNode], keep: impl Fn(&GridNode) -> bool) -> Vec<(usize, Vec<usize>)> {
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for (k, node) in nodes.iter().enumerate() {
        if !keep(node) {
            continue;
        }
        match groups.last_mut() {
            Some((p, members)) if *p == node.period_index => members.push(k),
            _ => groups.push((node.period_index, vec![k])),
        }
    }
    groups
}

fn period_model(spec: &ModelSpec, frame: &Frame, period: Option<f64>) -> Result<PeriodModel> {
    PeriodModel::new(frame, &plans(spec, period), spec.fixed.prior_var, spec.boundary_prior_var)
}

/// Log marginal likelihood of every node, or the reason it failed.
fn marginal_likelihoods(
    spec: &ModelSpec,
    frame: &Frame,
    nodes: &[GridNode],
    pool: &rayon::ThreadPool,
) -> Result<Vec<std::result::Result<f64, String>>> {
    let groups = by_period(nodes, |_| true);
    let per_group: Vec<Result<Vec<std::result::Result<f64, String>>>> = pool.install(|| {
        groups
            .par_iter()
            .map(|(_, members)| {
                let period = nodes[members[0]].period;
                let model = match period_model(spec, frame, period) {
                    Ok(m) => m,
                    Err(e) if e.is_numeric() => return Ok(vec![Err(e.to_string()); members.len()]),
                    Err(e) => return Err(e),
                };
                Ok(members
                    .iter()
                    .map(|&k| {
                        let node = &nodes[k];
                        match model.solve(&node.sigma, node.noise_sd) {
                            Ok(sol) => Ok(sol.log_ml),
                            Err(e) => Err(e.to_string()),
                        }
                    })
                    .collect())
            })
            .collect()
    });
    let mut out = Vec::with_capacity(nodes.len());
    for g in per_group {
        out.extend(g?);
    }
    Ok(out)
}

struct Mixture {
    mean: Vec<f64>,
    sd: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    component_mean: Vec<Vec<f64>>,
    component_sd: Vec<Vec<f64>>,
}

/// Solves the retained nodes again at `frame`'s evaluation points.
fn retained_summaries(
    spec: &ModelSpec,
    frame: &Frame,
    nodes: &[GridNode],
    pool: &rayon::ThreadPool,
) -> Result<(Vec<f64>, Vec<NodeSummary>)> {
    let groups = by_period(nodes, |n| !n.excluded && n.weight >= SUMMARY_WEIGHT_FLOOR);
    let per_group: Vec<Result<Vec<(f64, NodeSummary)>>> = pool.install(|| {
        groups
            .par_iter()
            .map(|(_, members)| {
                let model = period_model(spec, frame, nodes[members[0]].period)?;
                members
                    .iter()
                    .map(|&k| {
                        let sol = model.solve(&nodes[k].sigma, nodes[k].noise_sd)?;
                        Ok((nodes[k].weight, model.summarize(&sol)))
                    })
                    .collect()
            })
            .collect()
    });
    let mut weights = Vec::new();
    let mut summaries = Vec::new();
    for g in per_group {
        for (w, s) in g? {
            weights.push(w);
            summaries.push(s);
        }
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numeric("no grid node carries posterior weight".into()));
    }
    weights.iter_mut().for_each(|w| *w /= total);
    Ok((weights, summaries))
}

fn mix(weights: &[f64], summaries: &[NodeSummary], points: std::ops::Range<usize>, n_components: usize) -> Mixture {
    let lo_q = 0.5 * (1.0 - CREDIBLE_LEVEL);
    let mut out = Mixture {
        mean: Vec::new(),
        sd: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
        component_mean: vec![Vec::new(); n_components],
        component_sd: vec![Vec::new(); n_components],
    };
    for j in points {
        let means: Vec<f64> = summaries.iter().map(|s| s.eta_mean[j]).collect();
        let vars: Vec<f64> = summaries.iter().map(|s| s.eta_var[j]).collect();
        let sds: Vec<f64> = vars.iter().map(|v| v.sqrt()).collect();
        let (m, v) = mixture::moments(weights, &means, &vars);
        let lower = mixture::quantile(weights, &means, &sds, lo_q);
        let upper = mixture::quantile(weights, &means, &sds, 1.0 - lo_q);
        out.mean.push(m);
        out.sd.push(v.sqrt());
        out.lower.push(lower.min(m));
        out.upper.push(upper.max(m));
        for c in 0..n_components {
            let cm: Vec<f64> = summaries.iter().map(|s| s.component_mean[c][j]).collect();
            let cv: Vec<f64> = summaries.iter().map(|s| s.component_var[c][j]).collect();
            let (m, v) = mixture::moments(weights, &cm, &cv);
            out.component_mean[c].push(m);
            out.component_sd[c].push(v.sqrt());
        }
    }
    out
}

/// Fits `spec` on its dataset and summarizes the posterior at every row.
pub fn fit(spec: &ModelSpec, options: &FitOptions) -> Result<PosteriorResult> {
    spec.validate()?;
    let pool = thread_pool(options)?;
    let frame = Frame::new(spec, &[])?;
    frame.check_fixed_design()?;
    let mut nodes = enumerate_nodes(spec)?;
    let outcomes = marginal_likelihoods(spec, &frame, &nodes, &pool)?;
    let mut warnings = Vec::new();
    let mut log_post = Vec::with_capacity(nodes.len());
    for (k, (node, outcome)) in nodes.iter_mut().zip(outcomes).enumerate() {
        match outcome {
            Ok(l) => {
                node.log_marginal_likelihood = l;
                log_post.push(node.log_prior + l);
            }
            Err(msg) => {
                node.excluded = true;
                warnings.push(format!("grid node {k} excluded: {msg}"));
                log_post.push(f64::NEG_INFINITY);
            }
        }
    }
    let total = log_sum_exp(&log_post);
    if !total.is_finite() {
        return Err(Error::Numeric(format!(
            "every grid node failed; first failure: {}",
            warnings.first().map(String::as_str).unwrap_or("unknown")
        )));
    }
    for (node, lp) in nodes.iter_mut().zip(&log_post) {
        node.weight = if node.excluded { 0.0 } else { (lp - total).exp() };
    }
    let (weights, summaries) = retained_summaries(spec, &frame, &nodes, &pool)?;
    let n = spec.data.len();
    let m = mix(&weights, &summaries, 0..n, spec.components.len());
    let components = spec
        .components
        .iter()
        .zip(m.component_mean.into_iter().zip(m.component_sd))
        .map(|(c, (mean, sd))| ComponentSummary {
            name: c.name.clone(),
            mean,
            sd,
        })
        .collect();
    Ok(PosteriorResult {
        x: spec.data.x.clone(),
        fitted_mean: m.mean,
        fitted_sd: m.sd,
        lower: m.lower,
        upper: m.upper,
        components,
        nodes,
        warnings,
    })
}

fn check_result(result: &PosteriorResult, spec: &ModelSpec) -> Result<()> {
    let expected = enumerate_nodes(spec)?;
    let same = expected.len() == result.nodes.len()
        && expected
            .iter()
            .zip(&result.nodes)
            .all(|(a, b)| a.period == b.period && a.sigma == b.sigma && a.noise_sd == b.noise_sd);
    if same {
        Ok(())
    } else {
        Err(Error::Model("the posterior result was not produced from this model spec".into()))
    }
}

/// Predictive mean and interval of `η` at `horizon`.
///
/// FEM components must have a domain covering every horizon point.
pub fn forecast(result: &PosteriorResult, spec: &ModelSpec, horizon: &[f64], options: &FitOptions) -> Result<ForecastTable> {
    spec.validate()?;
    check_result(result, spec)?;
    let pool = thread_pool(options)?;
    let frame = Frame::new(spec, horizon)?;
    let (weights, summaries) = retained_summaries(spec, &frame, &result.nodes, &pool)?;
    let n = spec.data.len();
    let m = mix(&weights, &summaries, n..n + horizon.len(), spec.components.len());
    Ok(ForecastTable {
        x: horizon.to_vec(),
        mean: m.mean,
        sd: m.sd,
        lower: m.lower,
        upper: m.upper,
    })
}

/// Posterior draws of `Σ_j (η(x_j) − y_j)` over the holdout points.
pub fn excess_summary(
    result: &PosteriorResult,
    spec: &ModelSpec,
    holdout_x: &[f64],
    holdout_y: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if holdout_x.len() != holdout_y.len() {
        return Err(Error::domain(format!(
            "{} holdout locations but {} values",
            holdout_x.len(),
            holdout_y.len()
        )));
    }
    if holdout_x.is_empty() {
        return Err(Error::domain("no holdout points"));
    }
    for &y in holdout_y {
        check_finite("holdout y", y)?;
    }
    spec.validate()?;
    check_result(result, spec)?;
    let frame = Frame::new(spec, holdout_x)?;
    let n = spec.data.len();
    let points: Vec<usize> = (n..n + holdout_x.len()).collect();
    let mut laws = Vec::new();
    let mut weights = Vec::new();
    for (_, members) in by_period(&result.nodes, |n| !n.excluded && n.weight >= SUMMARY_WEIGHT_FLOOR) {
        let model = period_model(spec, &frame, result.nodes[members[0]].period)?;
        for k in members {
            let node = &result.nodes[k];
            let sol = model.solve(&node.sigma, node.noise_sd)?;
            laws.push(model.sum_moments(&sol, &points));
            weights.push(node.weight);
        }
    }
    let observed: f64 = holdout_y.iter().sum();
    let pick = WeightedIndex::new(&weights).map_err(|e| Error::Numeric(format!("node weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_samples)
        .map(|_| {
            let (m, v) = laws[pick.sample(&mut rng)];
            let z: f64 = StandardNormal.sample(&mut rng);
            m + v.sqrt() * z - observed
        })
        .collect())
}

#[cfg(test)]
mod tests;
