//! Least-squares finite-element approximation of the sGP.
//!
//! `g̃(x) = Σ wᵢ φᵢ(x)` with `w ~ N(0, σ² T⁻¹)` and
//! `T_ij = ⟨Lφᵢ, Lφⱼ⟩ = α⁴G + C + α²M`. Two families are provided: cubic
//! B-splines and the seasonal (sB) family that adds every spline damped by
//! `cos(αx)` and `sin(αx)`.
//!
//! The sB span contains `cos(αx)` and `sin(αx)`, which `L` annihilates, so
//! its `T` is singular. [`ConstrainedBasis`] restricts the span to functions
//! with `g̃(a) = g̃'(a) = 0` at the domain start `a`, the initial conditions
//! of the process, which makes `T` positive definite for both families.

mod bspline;
mod quadrature;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

pub use bspline::KnotGrid;

use crate::error::{check_finite, Error, Result};
use crate::kernel::{self, SgpParams};
use crate::linalg::{CsrMatrix, EnvelopeCholesky};
use quadrature::{gauss_legendre_12, panel_count};

/// Basis family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisFamily {
    CubicBSpline,
    SeasonalBSpline,
}

impl BasisFamily {
    /// Functions per B-spline: 1 or 3.
    pub fn multiplicity(self) -> usize {
        match self {
            BasisFamily::CubicBSpline => 1,
            BasisFamily::SeasonalBSpline => 3,
        }
    }

    /// Number of B-splines giving a basis of (about) `k` functions.
    ///
    /// For the sB family `k` is rounded to the nearest multiple of three.
    pub fn splines_for_size(self, k: usize) -> usize {
        let m = self.multiplicity();
        (k + m / 2) / m
    }

    pub fn name(self) -> &'static str {
        match self {
            BasisFamily::CubicBSpline => "cubic",
            BasisFamily::SeasonalBSpline => "sb",
        }
    }
}

impl std::str::FromStr for BasisFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cubic" | "cubic-bspline" | "bspline" => Ok(BasisFamily::CubicBSpline),
            "sb" | "sb-spline" | "seasonal" | "seasonal-bspline" => Ok(BasisFamily::SeasonalBSpline),
            other => Err(Error::domain(format!(
                "unknown basis family '{other}' (expected 'cubic' or 'sb')"
            ))),
        }
    }
}

/// A finite set of twice-differentiable functions with compact support.
pub trait Basis {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn domain(&self) -> (f64, f64);

    /// Distinct knots; every function is smooth between consecutive ones.
    fn breakpoints(&self) -> &[f64];

    /// Highest frequency of the trig factors, 0 for plain splines.
    fn max_frequency(&self) -> f64;

    /// Representative location of function `i` (centre of its support).
    fn anchor(&self, i: usize) -> f64;

    /// `(index, [φ, φ', φ''])` for every function that may be nonzero at `x`,
    /// in increasing index order. `x` must lie in the domain.
    fn nonzero_at(&self, x: f64) -> Vec<(usize, [f64; 3])>;
}

fn check_in_domain(domain: (f64, f64), x: f64) -> Result<f64> {
    check_finite("location", x)?;
    let (a, b) = domain;
    let slack = 1e-12 * (b - a).max(1.0);
    if x < a - slack || x > b + slack {
        return Err(Error::domain(format!(
            "location {x} lies outside the basis domain [{a}, {b}]; extend the domain"
        )));
    }
    Ok(x.clamp(a, b))
}

/// Unconstrained basis: splines `b_i`, then `b_i cos(αx)`, then `b_i sin(αx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    family: BasisFamily,
    grid: KnotGrid,
    alpha: f64,
}

/// Builds the basis of `r` splines (size `r` or `3r`) on `domain`.
pub fn build_basis(family: BasisFamily, domain: (f64, f64), r: usize, alpha: f64) -> Result<BasisSet> {
    let grid = KnotGrid::new(domain, r)?;
    let alpha = match family {
        BasisFamily::CubicBSpline => {
            check_finite("alpha", alpha)?;
            alpha
        }
        BasisFamily::SeasonalBSpline => SgpParams::new(alpha, 1.0)?.alpha(),
    };
    Ok(BasisSet { family, grid, alpha })
}

impl BasisSet {
    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn grid(&self) -> &KnotGrid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Spline index and damping block (0 plain, 1 cos, 2 sin) of function `i`.
    fn split(&self, i: usize) -> (usize, usize) {
        let r = self.grid.r();
        (i % r, i / r)
    }

    /// `[φ, φ', φ'']` of function `i` at `x`.
    pub fn derivatives(&self, i: usize, x: f64) -> Result<[f64; 3]> {
        if i >= self.len() {
            return Err(Error::domain(format!("basis index {i} out of range")));
        }
        let x = check_in_domain(self.grid.domain(), x)?;
        Ok(self
            .nonzero_at(x)
            .into_iter()
            .find(|&(j, _)| j == i)
            .map(|(_, d)| d)
            .unwrap_or([0.0; 3]))
    }

    pub fn eval(&self, i: usize, x: f64) -> Result<f64> {
        Ok(self.derivatives(i, x)?[0])
    }

    pub fn second_derivative(&self, i: usize, x: f64) -> Result<f64> {
        Ok(self.derivatives(i, x)?[2])
    }

    /// Imposes `g̃(a) = g̃'(a) = 0` at the domain start.
    pub fn constrained(&self) -> Result<ConstrainedBasis> {
        ConstrainedBasis::new(self.clone())
    }
}

impl Basis for BasisSet {
    fn len(&self) -> usize {
        self.grid.r() * self.family.multiplicity()
    }

    fn domain(&self) -> (f64, f64) {
        self.grid.domain()
    }

    fn breakpoints(&self) -> &[f64] {
        self.grid.breakpoints()
    }

    fn max_frequency(&self) -> f64 {
        match self.family {
            BasisFamily::CubicBSpline => 0.0,
            BasisFamily::SeasonalBSpline => self.alpha,
        }
    }

    fn anchor(&self, i: usize) -> f64 {
        let (lo, hi) = self.grid.support(self.split(i).0);
        0.5 * (lo + hi)
    }

    fn nonzero_at(&self, x: f64) -> Vec<(usize, [f64; 3])> {
        let (first, local) = self.grid.local_derivatives(x);
        let r = self.grid.r();
        let mut out = Vec::with_capacity(4 * self.family.multiplicity());
        for (j, d) in local.iter().enumerate() {
            out.push((first + j, *d));
        }
        if self.family == BasisFamily::SeasonalBSpline {
            let a = self.alpha;
            let (s, c) = (a * x).sin_cos();
            for (j, &[b, b1, b2]) in local.iter().enumerate() {
                out.push((
                    r + first + j,
                    [b * c, b1 * c - a * b * s, b2 * c - 2.0 * a * b1 * s - a * a * b * c],
                ));
            }
            for (j, &[b, b1, b2]) in local.iter().enumerate() {
                out.push((
                    2 * r + first + j,
                    [b * s, b1 * s + a * b * c, b2 * s + 2.0 * a * b1 * c - a * a * b * s],
                ));
            }
        }
        out
    }
}

/// The subspace of a [`BasisSet`] satisfying `g̃(a) = g̃'(a) = 0`.
///
/// Raw functions that vanish with their derivative at `a` are kept as they
/// are; the few that do not are replaced by an orthonormal basis of the
/// constraint null space. Functions are ordered by anchor so that `T` is
/// banded.
#[derive(Debug, Clone)]
pub struct ConstrainedBasis {
    raw: BasisSet,
    functions: Vec<Vec<(usize, f64)>>,
    anchors: Vec<f64>,
    raw_to_eff: Vec<Vec<(usize, f64)>>,
}

impl ConstrainedBasis {
    pub fn new(raw: BasisSet) -> Result<Self> {
        let a = raw.domain().0;
        let h = raw.grid.spacing();
        let at_start = raw.nonzero_at(a);
        let touching: Vec<(usize, [f64; 3])> = at_start
            .into_iter()
            .filter(|(_, d)| d[0].abs() > 1e-12 || d[1].abs() * h > 1e-12)
            .collect();

        let mut combos: Vec<(f64, usize, Vec<(usize, f64)>)> = Vec::new();
        if !touching.is_empty() {
            let m = touching.len();
            let k = DMatrix::from_fn(2, m, |row, col| {
                let d = touching[col].1;
                if row == 0 {
                    d[0]
                } else {
                    d[1] * h
                }
            });
            let eig = (k.transpose() * &k).symmetric_eigen();
            let top = eig.eigenvalues.amax();
            for c in 0..m {
                if eig.eigenvalues[c] > 1e-12 * top {
                    continue;
                }
                let v = eig.eigenvectors.column(c);
                let combo: Vec<(usize, f64)> = touching
                    .iter()
                    .zip(v.iter())
                    .filter(|(_, &w)| w.abs() > 1e-15)
                    .map(|(&(i, _), &w)| (i, w))
                    .collect();
                combos.push((a, combos.len(), combo));
            }
        }
        let touched: Vec<usize> = touching.iter().map(|&(i, _)| i).collect();
        let offset = combos.len();
        for i in (0..raw.len()).filter(|i| !touched.contains(i)) {
            combos.push((raw.anchor(i), offset + i, vec![(i, 1.0)]));
        }
        combos.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let anchors = combos.iter().map(|c| c.0).collect();
        let functions = combos.into_iter().map(|c| c.2).collect();
        Ok(ConstrainedBasis::from_functions(raw, functions, anchors))
    }

    fn from_functions(raw: BasisSet, functions: Vec<Vec<(usize, f64)>>, anchors: Vec<f64>) -> Self {
        let mut raw_to_eff = vec![Vec::new(); raw.len()];
        for (e, combo) in functions.iter().enumerate() {
            for &(i, w) in combo {
                raw_to_eff[i].push((e, w));
            }
        }
        ConstrainedBasis {
            raw,
            functions,
            anchors,
            raw_to_eff,
        }
    }

    /// The basis without the functions listed in `drop` (sorted indices).
    pub fn without(&self, drop: &[usize]) -> ConstrainedBasis {
        let keep: Vec<usize> = (0..self.len()).filter(|i| drop.binary_search(i).is_err()).collect();
        ConstrainedBasis::from_functions(
            self.raw.clone(),
            keep.iter().map(|&i| self.functions[i].clone()).collect(),
            keep.iter().map(|&i| self.anchors[i]).collect(),
        )
    }

    pub fn raw(&self) -> &BasisSet {
        &self.raw
    }

    /// Highest damping block (0 plain, 1 cos, 2 sin) used by function `i`.
    fn block_of(&self, i: usize) -> usize {
        self.functions[i].iter().map(|&(j, _)| self.raw.split(j).1).max().unwrap_or(0)
    }

    /// Raw-index coefficients of effective function `i`.
    pub fn combination(&self, i: usize) -> &[(usize, f64)] {
        &self.functions[i]
    }

    /// Matrix `Z` (raw × effective) with `φ_eff = Zᵀ φ_raw`.
    pub fn embedding(&self) -> CsrMatrix {
        let triplets = self
            .functions
            .iter()
            .enumerate()
            .flat_map(|(e, combo)| combo.iter().map(move |&(i, w)| (i, e, w)))
            .collect();
        CsrMatrix::from_triplets(self.raw.len(), self.functions.len(), triplets)
    }
}

impl Basis for ConstrainedBasis {
    fn len(&self) -> usize {
        self.functions.len()
    }

    fn domain(&self) -> (f64, f64) {
        self.raw.domain()
    }

    fn breakpoints(&self) -> &[f64] {
        self.raw.breakpoints()
    }

    fn max_frequency(&self) -> f64 {
        self.raw.max_frequency()
    }

    fn anchor(&self, i: usize) -> f64 {
        self.anchors[i]
    }

    fn nonzero_at(&self, x: f64) -> Vec<(usize, [f64; 3])> {
        let mut acc: BTreeMap<usize, [f64; 3]> = BTreeMap::new();
        for (i, d) in self.raw.nonzero_at(x) {
            for &(e, w) in &self.raw_to_eff[i] {
                let slot = acc.entry(e).or_insert([0.0; 3]);
                for t in 0..3 {
                    slot[t] += w * d[t];
                }
            }
        }
        acc.into_iter().collect()
    }
}

/// Integrals `⟨φ, ψ⟩`, `⟨φ'', ψ''⟩`, `⟨φ, ψ''⟩ + ⟨φ'', ψ⟩` and `⟨Lφ, Lψ⟩`
/// for every pair `i ≥ j` with overlapping support.
fn integrate_pairs<B: Basis + ?Sized>(basis: &B, alpha: f64) -> Result<BTreeMap<(usize, usize), [f64; 4]>> {
    let a2 = alpha * alpha;
    let omega = 2.0 * basis.max_frequency();
    let mut acc: BTreeMap<(usize, usize), [f64; 4]> = BTreeMap::new();
    for w in basis.breakpoints().windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let panels = panel_count(hi - lo, omega);
        let step = (hi - lo) / panels as f64;
        for p in 0..panels {
            let plo = lo + p as f64 * step;
            let phi = if p + 1 == panels { hi } else { plo + step };
            for (x, wt) in gauss_legendre_12(plo, phi) {
                let vals = basis.nonzero_at(x);
                for (s, &(i, di)) in vals.iter().enumerate() {
                    let li = di[2] + a2 * di[0];
                    for &(j, dj) in &vals[..=s] {
                        let lj = dj[2] + a2 * dj[0];
                        let terms = [
                            di[0] * dj[0],
                            di[2] * dj[2],
                            di[0] * dj[2] + di[2] * dj[0],
                            li * lj,
                        ];
                        if terms.iter().any(|t| !t.is_finite()) {
                            return Err(Error::Numeric(format!(
                                "non-finite integrand at x = {x} for basis pair ({i}, {j})"
                            )));
                        }
                        let key = if i >= j { (i, j) } else { (j, i) };
                        let slot = acc.entry(key).or_insert([0.0; 4]);
                        for t in 0..4 {
                            slot[t] += wt * terms[t];
                        }
                    }
                }
            }
        }
    }
    Ok(acc)
}

fn symmetric_csr(n: usize, entries: impl Iterator<Item = ((usize, usize), f64)>) -> CsrMatrix {
    let mut triplets = Vec::new();
    for ((i, j), v) in entries {
        triplets.push((i, j, v));
        if i != j {
            triplets.push((j, i, v));
        }
    }
    CsrMatrix::from_triplets(n, n, triplets)
}

/// The three Gram matrices of a basis.
#[derive(Debug, Clone)]
pub struct GcmMatrices {
    /// `G_ij = ⟨φᵢ, φⱼ⟩`
    pub g: CsrMatrix,
    /// `C_ij = ⟨φᵢ'', φⱼ''⟩`
    pub c: CsrMatrix,
    /// `M_ij = ⟨φᵢ, φⱼ''⟩ + ⟨φᵢ'', φⱼ⟩`
    pub m: CsrMatrix,
}

impl GcmMatrices {
    /// `α⁴G + C + α²M`.
    pub fn combine(&self, alpha: f64) -> CsrMatrix {
        let a2 = alpha * alpha;
        self.g
            .linear_combination(a2 * a2, &self.c, 1.0)
            .linear_combination(1.0, &self.m, a2)
    }
}

/// Assembles `G`, `C` and `M` by Gauss–Legendre quadrature on each knot
/// interval. All three are exactly symmetric.
pub fn assemble_gcm<B: Basis + ?Sized>(basis: &B) -> Result<GcmMatrices> {
    let pairs = integrate_pairs(basis, 0.0)?;
    let n = basis.len();
    Ok(GcmMatrices {
        g: symmetric_csr(n, pairs.iter().map(|(&k, v)| (k, v[0]))),
        c: symmetric_csr(n, pairs.iter().map(|(&k, v)| (k, v[1]))),
        m: symmetric_csr(n, pairs.iter().map(|(&k, v)| (k, v[2]))),
    })
}

/// Precision `T` of the weights (for `σ = 1`) and its Cholesky factor.
#[derive(Debug, Clone)]
pub struct WeightLaw {
    alpha: f64,
    t: CsrMatrix,
    chol: EnvelopeCholesky,
}

/// Assembles `T_ij = ⟨Lφᵢ, Lφⱼ⟩` directly from `Lφ` and factors it.
///
/// The entries equal `α⁴G + C + α²M` up to rounding; integrating `Lφ`
/// avoids the cancellation between the three terms on coarse grids.
pub fn assemble_t<B: Basis + ?Sized>(basis: &B, alpha: f64) -> Result<WeightLaw> {
    SgpParams::new(alpha, 1.0)?;
    let pairs = integrate_pairs(basis, alpha)?;
    let t = symmetric_csr(basis.len(), pairs.iter().map(|(&k, v)| (k, v[3])));
    let chol = t.to_envelope().cholesky().map_err(|e| match e {
        Error::NotPositiveDefinite { pivot, .. } => Error::NotPositiveDefinite {
            pivot,
            hint: format!(
                " while factoring T ({} functions); the basis may be degenerate, try a larger r \
                 or the boundary-constrained basis",
                basis.len()
            ),
        },
        other => other,
    })?;
    Ok(WeightLaw { alpha, t, chol })
}

impl WeightLaw {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn precision(&self) -> &CsrMatrix {
        &self.t
    }

    pub fn cholesky(&self) -> &EnvelopeCholesky {
        &self.chol
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }
}

/// Sparse `Φ` with `Φ_ij = φⱼ(xᵢ)`.
pub fn design_matrix<B: Basis + ?Sized>(basis: &B, xs: &[f64]) -> Result<CsrMatrix> {
    let rows = design_rows(basis, xs)?;
    Ok(CsrMatrix::from_rows(basis.len(), &rows))
}

pub(crate) fn design_rows<B: Basis + ?Sized>(basis: &B, xs: &[f64]) -> Result<Vec<Vec<(usize, f64)>>> {
    xs.iter()
        .map(|&x| {
            let x = check_in_domain(basis.domain(), x)?;
            Ok(basis
                .nonzero_at(x)
                .into_iter()
                .filter(|(_, d)| d[0] != 0.0)
                .map(|(i, d)| (i, d[0]))
                .collect())
        })
        .collect()
}

fn sparse_dot(row: &[(usize, f64)], v: &[f64]) -> f64 {
    row.iter().map(|&(j, w)| w * v[j]).sum()
}

fn solve_row(law: &WeightLaw, row: &[(usize, f64)]) -> Vec<f64> {
    let mut rhs = vec![0.0; law.dim()];
    for &(j, w) in row {
        rhs[j] = w;
    }
    law.chol.solve(&rhs)
}

/// Covariance `σ² Φ T⁻¹ Φᵀ` of the approximation at `xs`.
pub fn approx_covariance<B: Basis + ?Sized>(
    basis: &B,
    law: &WeightLaw,
    sigma: f64,
    xs: &[f64],
) -> Result<DMatrix<f64>> {
    check_finite("sigma", sigma)?;
    if basis.len() != law.dim() {
        return Err(Error::domain("basis and weight law have different sizes"));
    }
    let rows = design_rows(basis, xs)?;
    let solved: Vec<Vec<f64>> = rows.iter().map(|r| solve_row(law, r)).collect();
    let n = xs.len();
    let s2 = sigma * sigma;
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = s2 * sparse_dot(&rows[i], &solved[j]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// Pivot fraction below which a function counts as numerically dependent.
pub const DEPENDENCE_TOLERANCE: f64 = 1e-6;

/// A boundary-constrained basis with its assembled weight law.
///
/// On fine grids (`αh` well below one) the sB family is numerically
/// redundant: `b_j` is reproduced by `Σ cᵢ bᵢ cos(αx)` to high accuracy. Such
/// functions are removed before factoring; [`FemApprox::pruned`] reports how
/// many.
#[derive(Debug, Clone)]
pub struct FemApprox {
    basis: ConstrainedBasis,
    law: WeightLaw,
    pruned: usize,
}

impl FemApprox {
    /// `r` splines of `family` on `domain`, constrained at the domain start.
    pub fn new(family: BasisFamily, domain: (f64, f64), r: usize, alpha: f64) -> Result<Self> {
        SgpParams::new(alpha, 1.0)?;
        let full = build_basis(family, domain, r, alpha)?.constrained()?;
        let pairs = integrate_pairs(&full, alpha)?;
        // Plain splines are screened first so that redundancy is always
        // resolved by removing damped functions.
        let mut order: Vec<usize> = (0..full.len()).collect();
        order.sort_by_key(|&i| full.block_of(i));
        let mut position = vec![0; full.len()];
        for (p, &i) in order.iter().enumerate() {
            position[i] = p;
        }
        let t = symmetric_csr(
            full.len(),
            pairs.iter().map(|(&(i, j), v)| {
                let (pi, pj) = (position[i], position[j]);
                (if pi >= pj { (pi, pj) } else { (pj, pi) }, v[3])
            }),
        );
        let mut drop: Vec<usize> = t
            .to_envelope()
            .dependent_rows(DEPENDENCE_TOLERANCE)
            .into_iter()
            .map(|p| order[p])
            .collect();
        drop.sort_unstable();
        let basis = if drop.is_empty() { full } else { full.without(&drop) };
        let law = assemble_t(&basis, alpha)?;
        Ok(FemApprox {
            basis,
            law,
            pruned: drop.len(),
        })
    }

    /// Number of numerically dependent functions removed.
    pub fn pruned(&self) -> usize {
        self.pruned
    }

    /// Basis of nominal size `k` (see [`BasisFamily::splines_for_size`]).
    pub fn with_size(family: BasisFamily, domain: (f64, f64), k: usize, alpha: f64) -> Result<Self> {
        Self::new(family, domain, family.splines_for_size(k), alpha)
    }

    pub fn basis(&self) -> &ConstrainedBasis {
        &self.basis
    }

    pub fn law(&self) -> &WeightLaw {
        &self.law
    }

    pub fn family(&self) -> BasisFamily {
        self.basis.raw().family()
    }

    /// Nominal size `r` or `3r` of the unconstrained family.
    pub fn nominal_size(&self) -> usize {
        self.basis.raw().len()
    }

    pub fn covariance(&self, sigma: f64, xs: &[f64]) -> Result<DMatrix<f64>> {
        approx_covariance(&self.basis, &self.law, sigma, xs)
    }

    /// Largest `|ρ(reference, x) − ρ̃(reference, x)|` over `eval`, with the
    /// exact process started at the domain start.
    pub fn correlation_error(&self, reference: f64, eval: &[f64]) -> Result<f64> {
        let a = self.basis.domain().0;
        let alpha = self.law.alpha;
        let ref_row = design_rows(&self.basis, &[reference])?.remove(0);
        let ref_solved = solve_row(&self.law, &ref_row);
        let ref_var = sparse_dot(&ref_row, &ref_solved);
        let true_ref_var = kernel::covariance_unchecked(alpha, 1.0, reference - a, reference - a);
        let rows = design_rows(&self.basis, eval)?;
        let mut worst = 0.0f64;
        for (&x, row) in eval.iter().zip(&rows) {
            let cross = sparse_dot(row, &ref_solved);
            let var = sparse_dot(row, &solve_row(&self.law, row));
            let approx = cross / (var * ref_var).sqrt();
            let exact = kernel::covariance_unchecked(alpha, 1.0, reference - a, x - a)
                / (true_ref_var * kernel::covariance_unchecked(alpha, 1.0, x - a, x - a)).sqrt();
            let err = (approx - exact).abs();
            if !err.is_finite() {
                return Err(Error::Numeric(format!("correlation undefined at x = {x}")));
            }
            worst = worst.max(err);
        }
        Ok(worst)
    }
}

/// One row of a correlation-error table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Requested basis size.
    pub k: usize,
    /// Size actually used, `r` or `3r`.
    pub size: usize,
    pub max_error: f64,
}

/// `n` equally spaced points covering `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Points used by [`correlation_error_curve`] over the evaluation range.
pub const CURVE_POINTS: usize = 401;

/// Maximum correlation error against `reference` over 401 points of `eval_range`
/// for each basis size in `k_values`.
pub fn correlation_error_curve(
    family: BasisFamily,
    alpha: f64,
    domain: (f64, f64),
    k_values: &[usize],
    reference: f64,
    eval_range: (f64, f64),
) -> Result<Vec<CurvePoint>> {
    let (a, b) = domain;
    if !(reference > a && reference < b) {
        return Err(Error::domain(format!(
            "reference point {reference} must be interior to [{a}, {b}]"
        )));
    }
    let (lo, hi) = eval_range;
    if !(lo <= hi && lo > a && hi <= b) {
        return Err(Error::domain(format!(
            "evaluation range [{lo}, {hi}] must lie in ({a}, {b}]"
        )));
    }
    let eval = linspace(lo, hi, CURVE_POINTS);
    k_values
        .iter()
        .map(|&k| {
            let fem = FemApprox::with_size(family, domain, k, alpha)?;
            Ok(CurvePoint {
                k,
                size: fem.nominal_size(),
                max_error: fem.correlation_error(reference, &eval)?,
            })
        })
        .collect()
}

/// Solves `T x = b` for a weight law; exposed for samplers and tests.
pub fn solve_weights(law: &WeightLaw, b: &[f64]) -> DVector<f64> {
    DVector::from_vec(law.chol.solve(b))
}
