//! Joint Gaussian model at one period value and its conjugate solve.
//!
//! Latent coordinates of every component (state-space coordinates or FEM
//! weights) are ordered by location so the posterior precision stays banded;
//! fixed effects and boundary coefficients form dense trailing rows.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fem::{design_rows, Basis, FemApprox};
use crate::kernel::{BoundaryBasis, SgpParams};
use crate::linalg::{EnvelopeCholesky, SymEnvelope};
use crate::statespace::{stable_precision, StateSpaceChain};

use super::{Frame, Representation};

/// What one component looks like once its frequency is known.
pub(crate) struct ComponentPlan {
    pub alpha: f64,
    pub representation: Representation,
    pub boundary: bool,
}

struct Block {
    dim: usize,
    unit_log_det: f64,
    /// Lower-triangle entries of the unit-σ precision, global indices.
    prior: Vec<(usize, usize, f64)>,
}

pub(crate) struct PeriodModel {
    dim: usize,
    blocks: Vec<Block>,
    fixed: Vec<usize>,
    boundary: Vec<usize>,
    fixed_precision: f64,
    boundary_precision: f64,
    /// Row of `η` at each evaluation point.
    rows: Vec<Vec<(usize, f64)>>,
    /// Per component, its own contribution (latent plus boundary) to each row.
    component_rows: Vec<Vec<Vec<(usize, f64)>>>,
    template: SymEnvelope,
    cross: Vec<(usize, usize, f64)>,
    cross_y: Vec<f64>,
    yty: f64,
    n_obs: usize,
}

pub(crate) struct NodeSolution {
    pub chol: EnvelopeCholesky,
    pub mean: Vec<f64>,
    pub log_ml: f64,
}

/// Posterior mean and variance of `η` and of each component at the
/// evaluation points.
pub(crate) struct NodeSummary {
    pub eta_mean: Vec<f64>,
    pub eta_var: Vec<f64>,
    pub component_mean: Vec<Vec<f64>>,
    pub component_var: Vec<Vec<f64>>,
}

enum Native {
    StateSpace { chain_prior: Vec<(usize, usize, f64)>, log_det: f64, dim: usize, g_rows: Vec<Vec<(usize, f64)>> },
    Fem { approx: FemApprox },
}

fn merge_row(row: &mut Vec<(usize, f64)>) {
    row.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for &(j, v) in row.iter() {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += v,
            _ => out.push((j, v)),
        }
    }
    *row = out;
}

impl PeriodModel {
    pub fn new(frame: &Frame, plans: &[ComponentPlan], fixed_var: f64, boundary_var: f64) -> Result<Self> {
        let n_eval = frame.eval_x.len();
        // native structures and anchors of every latent coordinate
        let mut natives = Vec::with_capacity(plans.len());
        let mut coords: Vec<(f64, usize, usize)> = Vec::new();
        for (c, plan) in plans.iter().enumerate() {
            match &plan.representation {
                Representation::StateSpace => {
                    let Some(grid) = frame.ss_grid.as_ref() else {
                        natives.push(Native::StateSpace { chain_prior: Vec::new(), log_det: 0.0, dim: 0, g_rows: Vec::new() });
                        continue;
                    };
                    let chain = StateSpaceChain::new(SgpParams::new(plan.alpha, 1.0)?, grid.clone());
                    let stable = stable_precision(&chain)?;
                    let m = stable.precision();
                    let mut entries = Vec::new();
                    for i in 0..m.dim() {
                        let f = m.first_col(i);
                        for (off, &v) in m.row(i).iter().enumerate() {
                            if v != 0.0 {
                                entries.push((i, f + off, v));
                            }
                        }
                    }
                    for (i, &s) in grid.locations().iter().enumerate() {
                        coords.push((s, c, 2 * i));
                        coords.push((s, c, 2 * i + 1));
                    }
                    natives.push(Native::StateSpace {
                        chain_prior: entries,
                        log_det: -chain.log_det_covariance(),
                        dim: 2 * grid.len(),
                        g_rows: (0..grid.len()).map(|i| stable.g_row(i)).collect(),
                    });
                }
                Representation::Fem { family, r, domain } => {
                    let domain = domain.unwrap_or(frame.default_domain);
                    let approx = FemApprox::new(*family, domain, *r, plan.alpha)?;
                    for i in 0..approx.basis().len() {
                        coords.push((approx.basis().anchor(i), c, i));
                    }
                    natives.push(Native::Fem { approx });
                }
            }
        }
        coords.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut global: Vec<Vec<usize>> = natives
            .iter()
            .map(|n| match n {
                Native::StateSpace { dim, .. } => vec![0; *dim],
                Native::Fem { approx } => vec![0; approx.basis().len()],
            })
            .collect();
        for (g, &(_, c, i)) in coords.iter().enumerate() {
            global[c][i] = g;
        }
        let n_latent = coords.len();
        let fixed: Vec<usize> = (0..frame.fixed_count()).map(|j| n_latent + j).collect();
        let mut boundary = Vec::new();
        let mut boundary_of = vec![None; plans.len()];
        for (c, plan) in plans.iter().enumerate() {
            if plan.boundary {
                let o = n_latent + fixed.len() + boundary.len();
                boundary.extend([o, o + 1]);
                boundary_of[c] = Some(o);
            }
        }
        let dim = n_latent + fixed.len() + boundary.len();

        let mut blocks = Vec::with_capacity(plans.len());
        for (c, native) in natives.iter().enumerate() {
            let map = &global[c];
            let block = match native {
                Native::StateSpace { chain_prior, log_det, dim, .. } => Block {
                    dim: *dim,
                    unit_log_det: *log_det,
                    prior: chain_prior.iter().map(|&(i, j, v)| (map[i], map[j], v)).collect(),
                },
                Native::Fem { approx } => Block {
                    dim: approx.basis().len(),
                    unit_log_det: approx.law().cholesky().log_det(),
                    prior: approx
                        .law()
                        .precision()
                        .iter()
                        .filter(|&(i, j, _)| i >= j)
                        .map(|(i, j, v)| (map[i], map[j], v))
                        .collect(),
                },
            };
            blocks.push(block);
        }

        let mut component_rows = Vec::with_capacity(plans.len());
        for (c, (plan, native)) in plans.iter().zip(&natives).enumerate() {
            let map = &global[c];
            let mut latent: Vec<Vec<(usize, f64)>> = match native {
                Native::StateSpace { g_rows, .. } => frame
                    .ss_map
                    .iter()
                    .map(|m| m.map(|i| g_rows[i].iter().map(|&(j, v)| (map[j], v)).collect()).unwrap_or_default())
                    .collect(),
                Native::Fem { approx } => design_rows(approx.basis(), &frame.eval_x)?
                    .into_iter()
                    .map(|row| row.into_iter().map(|(i, v)| (map[i], v)).collect())
                    .collect(),
            };
            if let Some(o) = boundary_of[c] {
                let trig = BoundaryBasis::new(plan.alpha)?;
                for (row, &x) in latent.iter_mut().zip(&frame.eval_x) {
                    let [cx, sx] = trig.eval(x);
                    row.push((o, cx));
                    row.push((o + 1, sx));
                }
            }
            component_rows.push(latent);
        }
        let mut rows: Vec<Vec<(usize, f64)>> = (0..n_eval)
            .map(|j| {
                let mut row: Vec<(usize, f64)> = component_rows.iter().flat_map(|cr| cr[j].iter().copied()).collect();
                row.extend(fixed.iter().zip(frame.fixed_row(j)).map(|(&g, &v)| (g, v)));
                row
            })
            .collect();
        for row in rows.iter_mut() {
            merge_row(row);
        }

        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for b in &blocks {
            pairs.extend(b.prior.iter().map(|&(i, j, _)| (i, j)));
        }
        for row in &rows {
            for (p, &(i, _)) in row.iter().enumerate() {
                for &(j, _) in &row[..p] {
                    pairs.push((i, j));
                }
            }
        }
        let mut first: Vec<usize> = (0..dim).collect();
        for (i, j) in pairs {
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            first[r] = first[r].min(c);
        }
        let template = SymEnvelope::with_profile(first);

        let mut cross_map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut cross_y = vec![0.0; dim];
        for (&j, &y) in frame.train.iter().zip(&frame.y_train) {
            let row = &rows[j];
            for (p, &(a, va)) in row.iter().enumerate() {
                cross_y[a] += va * y;
                for &(b, vb) in &row[..=p] {
                    *cross_map.entry((a.max(b), a.min(b))).or_insert(0.0) += va * vb;
                }
            }
        }
        let cross = cross_map.into_iter().map(|((a, b), v)| (a, b, v)).collect();
        Ok(PeriodModel {
            dim,
            blocks,
            fixed,
            boundary,
            fixed_precision: 1.0 / fixed_var,
            boundary_precision: 1.0 / boundary_var,
            rows,
            component_rows,
            template,
            cross,
            cross_y,
            yty: frame.y_train.iter().map(|y| y * y).sum(),
            n_obs: frame.train.len(),
        })
    }

    /// Conjugate posterior for component scales `sigmas` and noise `noise_sd`.
    pub fn solve(&self, sigmas: &[f64], noise_sd: f64) -> Result<NodeSolution> {
        let tau = 1.0 / (noise_sd * noise_sd);
        let mut p = self.template.clone();
        let mut log_det_prior = 0.0;
        for (b, &s) in self.blocks.iter().zip(sigmas) {
            let w = 1.0 / (s * s);
            for &(i, j, v) in &b.prior {
                p.add(i, j, w * v);
            }
            log_det_prior += b.unit_log_det + b.dim as f64 * w.ln();
        }
        for &i in &self.fixed {
            p.add(i, i, self.fixed_precision);
        }
        for &i in &self.boundary {
            p.add(i, i, self.boundary_precision);
        }
        log_det_prior += self.fixed.len() as f64 * self.fixed_precision.ln()
            + self.boundary.len() as f64 * self.boundary_precision.ln();
        for &(i, j, v) in &self.cross {
            p.add(i, j, tau * v);
        }
        let chol = p.cholesky()?;
        let rhs: Vec<f64> = self.cross_y.iter().map(|v| tau * v).collect();
        let mean = chol.solve(&rhs);
        let quad = tau * self.yty - rhs.iter().zip(&mean).map(|(b, m)| b * m).sum::<f64>();
        let n = self.n_obs as f64;
        let log_ml = -0.5 * n * (2.0 * std::f64::consts::PI).ln() - n * noise_sd.ln() + 0.5 * log_det_prior
            - 0.5 * chol.log_det()
            - 0.5 * quad;
        if !log_ml.is_finite() {
            return Err(Error::Numeric(format!(
                "log marginal likelihood is not finite at noise sd {noise_sd}"
            )));
        }
        Ok(NodeSolution { chol, mean, log_ml })
    }

    fn row_moments(row: &[(usize, f64)], mean: &[f64], inv: &SymEnvelope) -> (f64, f64) {
        let m = row.iter().map(|&(i, v)| v * mean[i]).sum();
        let mut var = 0.0;
        for (p, &(i, vi)) in row.iter().enumerate() {
            var += vi * vi * inv.get(i, i);
            for &(j, vj) in &row[..p] {
                var += 2.0 * vi * vj * inv.get(i, j);
            }
        }
        (m, var.max(0.0))
    }

    pub fn summarize(&self, sol: &NodeSolution) -> NodeSummary {
        let inv = sol.chol.selected_inverse();
        let (eta_mean, eta_var) = self.rows.iter().map(|r| Self::row_moments(r, &sol.mean, &inv)).unzip();
        let mut component_mean = Vec::with_capacity(self.component_rows.len());
        let mut component_var = Vec::with_capacity(self.component_rows.len());
        for rows in &self.component_rows {
            let (m, v): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| Self::row_moments(r, &sol.mean, &inv)).unzip();
            component_mean.push(m);
            component_var.push(v);
        }
        NodeSummary {
            eta_mean,
            eta_var,
            component_mean,
            component_var,
        }
    }

    /// Mean and variance of `Σ_j η(x_j)` over the evaluation indices `points`.
    pub fn sum_moments(&self, sol: &NodeSolution, points: &[usize]) -> (f64, f64) {
        let mut c = vec![0.0; self.dim];
        for &j in points {
            for &(i, v) in &self.rows[j] {
                c[i] += v;
            }
        }
        let mean = c.iter().zip(&sol.mean).map(|(a, b)| a * b).sum();
        sol.chol.solve_lower_in_place(&mut c);
        (mean, c.iter().map(|v| v * v).sum())
    }
}
