//! Exact Markov representation of the augmented state `(g, g')`.
//!
//! States are interleaved as `[g(s₁), g'(s₁), g(s₂), g'(s₂), …]`. The first state
//! starts from the origin, so `state(s₁) ~ N(0, Σ(s₁))`, and each later state is
//! `R_i · state(s_{i-1}) + ε_i` with `ε_i ~ N(0, Σ(d_i))`.
//!
//! [`assemble_precision`] gives the precision in these coordinates;
//! [`stable_precision`] recodes locations after very short steps by their
//! innovation and is what sampling, conditioning and fitting use.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Matrix2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_finite, Error, Result};
use crate::kernel::{variance_factor, SgpParams};
use crate::linalg::{EnvelopeCholesky, SymEnvelope};

/// Locations closer than this are the same latent location.
pub const MERGE_TOLERANCE: f64 = 1e-10;

/// Largest accepted condition number of a noise covariance `Σ_i`.
pub const MAX_NOISE_CONDITION: f64 = 1e12;

/// Strictly increasing positive locations and their spacings.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationGrid {
    s: Vec<f64>,
    d: Vec<f64>,
}

impl LocationGrid {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::domain("location grid is empty"));
        }
        let mut prev = 0.0;
        let mut d = Vec::with_capacity(s.len());
        for (i, &x) in s.iter().enumerate() {
            check_finite("location", x)?;
            if x <= prev {
                return Err(Error::domain(format!(
                    "locations must be positive and strictly increasing; s[{i}] = {x} follows {prev}"
                )));
            }
            d.push(x - prev);
            prev = x;
        }
        Ok(LocationGrid { s, d })
    }

    /// Sorts `xs`, merges entries within [`MERGE_TOLERANCE`] and drops the origin.
    ///
    /// Returns the grid (`None` when no location is positive) and, for each
    /// input, the index of its grid location or `None` if it sits at 0, where
    /// `g` is identically zero.
    pub fn from_unsorted(xs: &[f64]) -> Result<(Option<Self>, Vec<Option<usize>>)> {
        for &x in xs {
            check_finite("location", x)?;
            if x < 0.0 {
                return Err(Error::domain(format!("negative location {x}")));
            }
        }
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
        let mut locs: Vec<f64> = Vec::new();
        let mut map = vec![None; xs.len()];
        for &i in &order {
            let x = xs[i];
            if x <= MERGE_TOLERANCE {
                continue;
            }
            match locs.last() {
                Some(&last) if x - last <= MERGE_TOLERANCE => {}
                _ => locs.push(x),
            }
            map[i] = Some(locs.len() - 1);
        }
        let grid = if locs.is_empty() {
            None
        } else {
            Some(LocationGrid::new(locs)?)
        };
        Ok((grid, map))
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn locations(&self) -> &[f64] {
        &self.s
    }

    /// `d₁ = s₁`, `d_i = s_i − s_{i−1}`.
    pub fn spacings(&self) -> &[f64] {
        &self.d
    }
}

fn check_spacing(d: f64) -> Result<()> {
    check_finite("spacing", d)?;
    if d <= 0.0 {
        return Err(Error::domain(format!("spacing must be positive, got {d}")));
    }
    Ok(())
}

/// Transition matrix `R(d) = exp(F d)` of the augmented state.
pub fn transition(params: &SgpParams, d: f64) -> Result<Matrix2<f64>> {
    check_spacing(d)?;
    Ok(transition_unchecked(params.alpha(), d))
}

fn transition_unchecked(alpha: f64, d: f64) -> Matrix2<f64> {
    let (s, c) = (alpha * d).sin_cos();
    Matrix2::new(c, s / alpha, -alpha * s, c)
}

/// Covariance of the state innovation accumulated over a spacing `d`.
pub fn noise_covariance(params: &SgpParams, d: f64) -> Result<Matrix2<f64>> {
    check_spacing(d)?;
    Ok(noise_covariance_unchecked(params.alpha(), params.sigma(), d))
}

fn noise_covariance_unchecked(alpha: f64, sigma: f64, d: f64) -> Matrix2<f64> {
    let s2 = sigma * sigma;
    let a2 = alpha * alpha;
    let sin_ad = (alpha * d).sin();
    let gg = variance_factor(alpha, d) / a2;
    let gd = sin_ad * sin_ad / (2.0 * a2);
    let dd = (2.0 * alpha * d + (2.0 * alpha * d).sin()) / (4.0 * alpha);
    Matrix2::new(s2 * gg, s2 * gd, s2 * gd, s2 * dd)
}

/// Inverse of a 2×2 SPD matrix with a condition-number guard.
fn invert_noise(sigma: &Matrix2<f64>, interval: usize) -> Result<Matrix2<f64>> {
    let (a, b, d) = (sigma[(0, 0)], sigma[(0, 1)], sigma[(1, 1)]);
    let det = a * d - b * b;
    let half_trace = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let lmax = half_trace + disc;
    let lmin = det / lmax;
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if !(det > 0.0) || condition > MAX_NOISE_CONDITION {
        return Err(Error::SingularInterval { interval, condition });
    }
    Ok(Matrix2::new(d / det, -b / det, -b / det, a / det))
}

/// Per-interval transition and noise matrices for a sorted grid.
#[derive(Debug, Clone)]
pub struct StateSpaceChain {
    params: SgpParams,
    grid: LocationGrid,
    transitions: Vec<Matrix2<f64>>,
    noise: Vec<Matrix2<f64>>,
}

impl StateSpaceChain {
    pub fn new(params: SgpParams, grid: LocationGrid) -> Self {
        let (alpha, sigma) = (params.alpha(), params.sigma());
        let transitions = grid
            .spacings()
            .iter()
            .map(|&d| transition_unchecked(alpha, d))
            .collect();
        let noise = grid
            .spacings()
            .iter()
            .map(|&d| noise_covariance_unchecked(alpha, sigma, d))
            .collect();
        StateSpaceChain {
            params,
            grid,
            transitions,
            noise,
        }
    }

    pub fn params(&self) -> &SgpParams {
        &self.params
    }

    pub fn grid(&self) -> &LocationGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `R_i`; `R_0` propagates from the origin to `s₁`.
    pub fn transitions(&self) -> &[Matrix2<f64>] {
        &self.transitions
    }

    /// `Σ_i`.
    pub fn noise(&self) -> &[Matrix2<f64>] {
        &self.noise
    }

    /// Sum over intervals of `log det Σ_i`, i.e. `−log det Q_aug`.
    pub fn log_det_covariance(&self) -> f64 {
        self.noise.iter().map(|s| s.determinant().ln()).sum()
    }
}

/// Block-tridiagonal precision of the interleaved augmented states.
#[derive(Debug, Clone)]
pub struct AugmentedPrecision {
    matrix: SymEnvelope,
}

impl AugmentedPrecision {
    pub fn matrix(&self) -> &SymEnvelope {
        &self.matrix
    }

    pub fn into_matrix(self) -> SymEnvelope {
        self.matrix
    }

    /// Number of augmented coordinates, `2n`.
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Index of `g(s_i)` in the interleaved ordering.
    pub fn g_index(i: usize) -> usize {
        2 * i
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.matrix.to_dense()
    }

    pub fn cholesky(&self) -> Result<EnvelopeCholesky> {
        self.matrix.cholesky()
    }

    /// Covariance `Q_aug⁻¹` restricted to the `g` coordinates (dense inverse).
    pub fn g_covariance(&self) -> Result<DMatrix<f64>> {
        let chol = self.cholesky()?;
        let n = self.dim() / 2;
        let mut out = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; self.dim()];
            e[2 * j] = 1.0;
            let col = chol.solve(&e);
            for i in 0..n {
                out[(i, j)] = col[2 * i];
            }
        }
        Ok(out)
    }
}

/// Joint precision of all augmented states of `chain`.
///
/// Each step `state_i = R_i state_{i−1} + ε_i` contributes `Q_i = Σ_i⁻¹` to block
/// `(i, i)`, `A_i = R_iᵀ Q_i R_i` to block `(i−1, i−1)` and `H_i = −R_iᵀ Q_i` to
/// block `(i−1, i)`; the initial state contributes `Q_0` alone.
pub fn assemble_precision(chain: &StateSpaceChain) -> Result<AugmentedPrecision> {
    let n = chain.len();
    let mut m = SymEnvelope::banded(2 * n, 3);
    for i in 0..n {
        let q = invert_noise(&chain.noise[i], i)?;
        add_diagonal_block(&mut m, i, &q);
        if i > 0 {
            let r = &chain.transitions[i];
            let a = r.transpose() * q * r;
            let h = -(r.transpose() * q);
            add_diagonal_block(&mut m, i - 1, &a);
            // block (i−1, i) is H_i; the stored lower block (i, i−1) is H_iᵀ
            let ht = h.transpose();
            for p in 0..2 {
                for c in 0..2 {
                    m.add(2 * i + p, 2 * (i - 1) + c, ht[(p, c)]);
                }
            }
        }
    }
    Ok(AugmentedPrecision { matrix: m })
}

fn add_diagonal_block(m: &mut SymEnvelope, b: usize, block: &Matrix2<f64>) {
    let o = 2 * b;
    m.add(o, o, block[(0, 0)]);
    m.add(o + 1, o, 0.5 * (block[(1, 0)] + block[(0, 1)]));
    m.add(o + 1, o + 1, block[(1, 1)]);
}

/// Spacing ratio below which a location is coded by its innovation.
pub const INNOVATION_RATIO: f64 = 0.1;

/// Longest run of consecutive innovation-coded locations.
pub const MAX_INNOVATION_RUN: usize = 8;

/// Inverse of `Σ` through its correlation matrix; the guard ignores scale.
fn invert_scaled(sigma: &Matrix2<f64>, interval: usize) -> Result<Matrix2<f64>> {
    let (da, dd) = (sigma[(0, 0)].sqrt(), sigma[(1, 1)].sqrt());
    if !(da > 0.0 && dd > 0.0) {
        return Err(Error::SingularInterval {
            interval,
            condition: f64::INFINITY,
        });
    }
    let r = sigma[(0, 1)] / (da * dd);
    let corr = Matrix2::new(1.0, r, r, 1.0);
    let inv = invert_noise(&corr, interval)?;
    let scale = Matrix2::new(1.0 / da, 0.0, 0.0, 1.0 / dd);
    Ok(scale * inv * scale)
}

/// Chain precision in coordinates that stay well conditioned when some
/// spacings are much shorter than their neighbours.
///
/// Each location is coded either by its state or, after a short step, by
/// its innovation `ε_i`, with `state_i = R_i state_{i−1} + ε_i`. A short step
/// then puts `Σ_i⁻¹` on its own diagonal block instead of large entries in
/// the `(i−1, i)` blocks that cancel during factorization. The change of
/// variables has unit Jacobian, so `log det` is that of `Q_aug`.
#[derive(Debug, Clone)]
pub struct StableCoordinates {
    precision: SymEnvelope,
    expansions: Vec<Vec<(usize, Matrix2<f64>)>>,
    innovation: Vec<bool>,
}

impl StableCoordinates {
    /// Precision of the coordinates, two per location.
    pub fn precision(&self) -> &SymEnvelope {
        &self.precision
    }

    pub fn dim(&self) -> usize {
        self.precision.dim()
    }

    /// Whether location `i` is coded by its innovation.
    pub fn is_innovation(&self, i: usize) -> bool {
        self.innovation[i]
    }

    /// `state_i = Σ M_b z_b` over coordinate pairs `z_b = (z_{2b}, z_{2b+1})`.
    pub fn expansion(&self, i: usize) -> &[(usize, Matrix2<f64>)] {
        &self.expansions[i]
    }

    /// Coefficients of `g(s_i)` in the coordinates.
    pub fn g_row(&self, i: usize) -> Vec<(usize, f64)> {
        self.expansions[i]
            .iter()
            .flat_map(|(b, m)| [(2 * b, m[(0, 0)]), (2 * b + 1, m[(0, 1)])])
            .filter(|e| e.1 != 0.0)
            .collect()
    }
}

/// [`StableCoordinates`] for `chain`.
///
/// Location `i ≥ 1` is innovation coded when its spacing is below
/// [`INNOVATION_RATIO`] times the largest of its neighbouring spacings and
/// the spacing of the last state-coded location, up to
/// [`MAX_INNOVATION_RUN`] in a row.
pub fn stable_precision(chain: &StateSpaceChain) -> Result<StableCoordinates> {
    let n = chain.len();
    let d = chain.grid.spacings();
    let mut innovation = vec![false; n];
    let mut run = 0;
    let mut base_spacing = d[0];
    for i in 1..n {
        let neighbour = base_spacing.max(d[i - 1]).max(d.get(i + 1).copied().unwrap_or(0.0));
        if d[i] < INNOVATION_RATIO * neighbour && run < MAX_INNOVATION_RUN {
            innovation[i] = true;
            run += 1;
        } else {
            run = 0;
            base_spacing = d[i];
        }
    }

    let mut expansions: Vec<Vec<(usize, Matrix2<f64>)>> = Vec::with_capacity(n);
    let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut add_form = |terms: &[(usize, Matrix2<f64>)], q: &Matrix2<f64>| {
        for (p, cp) in terms {
            for (r, cr) in terms {
                let b = cp.transpose() * q * cr;
                for a in 0..2 {
                    for c in 0..2 {
                        let (row, col) = (2 * p + a, 2 * r + c);
                        if row >= col {
                            *entries.entry((row, col)).or_insert(0.0) += b[(a, c)];
                        }
                    }
                }
            }
        }
    };
    for i in 0..n {
        let own = (i, Matrix2::identity());
        if i == 0 || innovation[i] {
            add_form(&[own], &invert_scaled(&chain.noise[i], i)?);
        } else {
            let q = invert_noise(&chain.noise[i], i)?;
            let r = &chain.transitions[i];
            let mut terms = vec![own];
            terms.extend(expansions[i - 1].iter().map(|(b, m)| (*b, -(r * m))));
            add_form(&terms, &q);
        }
        let expansion = if innovation[i] {
            let r = &chain.transitions[i];
            let mut e: Vec<(usize, Matrix2<f64>)> = expansions[i - 1].iter().map(|(b, m)| (*b, r * m)).collect();
            e.push(own);
            e
        } else {
            vec![own]
        };
        expansions.push(expansion);
    }
    // state moments need every pair within an expansion
    for e in &expansions {
        for (p, _) in e {
            for (r, _) in e {
                for a in 0..2 {
                    for c in 0..2 {
                        let (row, col) = (2 * p + a, 2 * r + c);
                        if row >= col {
                            entries.entry((row, col)).or_insert(0.0);
                        }
                    }
                }
            }
        }
    }
    let mut precision = SymEnvelope::from_pattern(2 * n, entries.keys().copied());
    for (&(i, j), &v) in &entries {
        precision.add(i, j, v);
    }
    Ok(StableCoordinates {
        precision,
        expansions,
        innovation,
    })
}

/// Draws `n_samples` paths of `g` at the chain's locations.
///
/// Row `k` of the result is one path; draws come from `N(0, Q_aug⁻¹)` through
/// the Cholesky factor of `Q_aug`. Reproducible for a fixed seed.
pub fn sample_paths(chain: &StateSpaceChain, n_samples: usize, seed: u64) -> Result<DMatrix<f64>> {
    let stable = stable_precision(chain)?;
    let chol = stable.precision().cholesky()?;
    let n = chain.len();
    let rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| stable.g_row(i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DMatrix::zeros(n_samples, n);
    let mut z = vec![0.0; 2 * n];
    for k in 0..n_samples {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        chol.solve_upper_in_place(&mut z);
        for (i, row) in rows.iter().enumerate() {
            out[(k, i)] = row.iter().map(|&(j, v)| v * z[j]).sum();
        }
    }
    Ok(out)
}

/// Posterior mean and marginal standard deviation of every augmented state.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalLaw {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Conditions the chain on `y_j = g(s_{observed[j]}) + N(0, noise_sd²)`.
pub fn condition_gaussian(
    chain: &StateSpaceChain,
    observed: &[usize],
    y: &[f64],
    noise_sd: f64,
) -> Result<ConditionalLaw> {
    if observed.len() != y.len() {
        return Err(Error::domain(format!(
            "{} observed indices but {} values",
            observed.len(),
            y.len()
        )));
    }
    check_finite("noise_sd", noise_sd)?;
    if noise_sd <= 0.0 {
        return Err(Error::domain(format!("noise_sd must be positive, got {noise_sd}")));
    }
    let n = chain.len();
    let stable = stable_precision(chain)?;
    let mut p = stable.precision().clone();
    let tau = 1.0 / (noise_sd * noise_sd);
    let mut rhs = vec![0.0; 2 * n];
    for (&i, &v) in observed.iter().zip(y) {
        if i >= n {
            return Err(Error::domain(format!("observed index {i} out of range for {n} locations")));
        }
        check_finite("observation", v)?;
        let row = stable.g_row(i);
        for &(a, va) in &row {
            rhs[a] += tau * va * v;
            for &(b, vb) in &row {
                if a >= b {
                    p.add(a, b, tau * va * vb);
                }
            }
        }
    }
    let chol = p.cholesky()?;
    let z_mean = chol.solve(&rhs);
    let z_cov = &chol.selected_inverse();
    let mut mean = vec![0.0; 2 * n];
    let mut sd = vec![0.0; 2 * n];
    for i in 0..n {
        let e = stable.expansion(i);
        for k in 0..2 {
            let coef: Vec<(usize, f64)> = e
                .iter()
                .flat_map(|(b, m)| [(2 * b, m[(k, 0)]), (2 * b + 1, m[(k, 1)])])
                .collect();
            mean[2 * i + k] = coef.iter().map(|&(j, v)| v * z_mean[j]).sum();
            let var: f64 = coef
                .iter()
                .flat_map(|&(a, va)| coef.iter().map(move |&(b, vb)| va * vb * z_cov.get(a, b)))
                .sum();
            sd[2 * i + k] = var.max(0.0).sqrt();
        }
    }
    Ok(ConditionalLaw { mean, sd })
}
