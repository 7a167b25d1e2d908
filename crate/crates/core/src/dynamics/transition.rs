use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::meeting::{binomial, MeetingConfig};
use crate::equilibria::{argmax_potential, for_each_subset, MAX_ENUM_N};
use crate::error::{Error, Result};
use crate::model::{cell_bit, check_dims, potential, CovariateTable, ModelParams, NetworkState, PotentialEvaluator};

/// Largest `n` for which dense matrices are built.
pub const MAX_DENSE_N: usize = 3;

fn check_capacity(n: usize, limit: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid("n must be at least 2"));
    }
    if n > limit {
        return Err(Error::Capacity { n, limit });
    }
    Ok(())
}

/// Row-stochastic matrix over packed state indices, stored row-compressed.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl TransitionMatrix {
    /// Assembles a matrix from per-row `(column, value)` lists, each sorted by
    /// column without repeats.
    pub(crate) fn from_rows(rows: Vec<Vec<(u32, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in rows {
            for (c, v) in r {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(column, probability)` pairs of row `r`, columns ascending.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().map(|&c| c as usize).zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        let cols = &self.cols[span.clone()];
        cols.binary_search(&(c as u32)).map_or(0.0, |k| self.vals[span.start + k])
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim).map(|r| self.row(r).map(|(_, v)| v).sum()).collect()
    }

    /// `pi T`.
    pub fn left_multiply(&self, pi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (r, &w) in pi.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (c, v) in self.row(r) {
                out[c] += w * v;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.dim > 1 << (MAX_DENSE_N * MAX_DENSE_N) {
            return Err(Error::Capacity {
                n: (self.dim.trailing_zeros() as f64).sqrt() as usize,
                limit: MAX_DENSE_N,
            });
        }
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        Ok(m)
    }
}

/// Sorts `(column, value)` pairs and sums repeated columns.
pub(crate) fn merge_entries(mut entries: Vec<(u32, f64)>) -> Vec<(u32, f64)> {
    entries.sort_unstable_by_key(|e| e.0);
    let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
    for (c, v) in entries {
        match merged.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => merged.push((c, v)),
        }
    }
    merged
}

/// Exact one-step kernel of the perturbed dynamic under `meet`, summing
/// meeting probabilities times logit block probabilities.
pub fn transition_matrix(n: usize, x: &CovariateTable, p: &ModelParams, meet: &MeetingConfig) -> Result<TransitionMatrix> {
    check_capacity(n, MAX_ENUM_N)?;
    check_dims(&NetworkState::empty(n)?, x)?;
    meet.validate_for(n)?;
    meet.require_closed_form()?;
    let ev = PotentialEvaluator::new(x, p);
    let inv_beta = 1.0 / p.beta;
    let dim = 1usize << (n * n);
    let rows: Vec<Vec<(u32, f64)>> = (0..dim as u64)
        .into_par_iter()
        .map(|idx| {
            let mut s = NetworkState::from_index(n, idx).expect("valid index");
            let mut entries: Vec<(u32, f64)> = Vec::new();
            let mut deltas = Vec::new();
            for (k, pk) in meet.k_dist.iter() {
                let pm = pk / (n as f64 * binomial(n - 1, k - 1));
                for i in 0..n {
                    let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                    for_each_subset(&others, k - 1, |partners| {
                        ev.block_potentials(&mut s, i, partners, &mut deltas);
                        let bits: Vec<usize> = std::iter::once(cell_bit(n, i, i))
                            .chain(partners.iter().map(|&j| cell_bit(n, i, j)))
                            .collect();
                        let mask: u64 = bits.iter().fold(0, |m, &b| m | 1 << b);
                        let base = idx & !mask;
                        let max = deltas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        let w: Vec<f64> = deltas.iter().map(|d| ((d - max) * inv_beta).exp()).collect();
                        let total: f64 = w.iter().sum();
                        for (code, wc) in w.iter().enumerate() {
                            let target = bits
                                .iter()
                                .enumerate()
                                .filter(|(t, _)| code >> t & 1 == 1)
                                .fold(base, |acc, (_, &b)| acc | 1 << b);
                            entries.push((target as u32, pm * wc / total));
                        }
                        true
                    });
                }
            }
            merge_entries(entries)
        })
        .collect();
    Ok(TransitionMatrix::from_rows(rows))
}

/// Potentials of every state, indexed by packed state index.
pub fn all_potentials(n: usize, x: &CovariateTable, p: &ModelParams) -> Result<Vec<f64>> {
    check_capacity(n, MAX_ENUM_N)?;
    check_dims(&NetworkState::empty(n)?, x)?;
    (0..1u64 << (n * n))
        .into_par_iter()
        .map(|idx| potential(&NetworkState::from_index(n, idx).expect("valid index"), x, p))
        .collect()
}

fn softmax(phi: &[f64], beta: f64) -> Vec<f64> {
    let max = phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = phi.iter().map(|v| ((v - max) / beta).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Closed-form stationary law `exp(Phi / beta)`, normalised, with
/// `beta = p.beta`.
pub fn exact_stationary(n: usize, x: &CovariateTable, p: &ModelParams) -> Result<Vec<f64>> {
    Ok(softmax(&all_potentials(n, x, p)?, p.beta))
}

/// Same as [`exact_stationary`] but refuses meeting laws without the closed
/// form.
pub fn exact_stationary_for(n: usize, x: &CovariateTable, p: &ModelParams, meet: &MeetingConfig) -> Result<Vec<f64>> {
    meet.require_closed_form()?;
    exact_stationary(n, x, p)
}

/// Left stationary vector by a dense LU solve of `pi (T - I) = 0`,
/// `sum pi = 1`.
pub fn stationary_by_linear_solve(t: &TransitionMatrix) -> Result<Vec<f64>> {
    let dense = t.to_dense()?;
    let dim = t.dim();
    let mut a = dense.transpose() - DMatrix::identity(dim, dim);
    for c in 0..dim {
        a[(dim - 1, c)] = 1.0;
    }
    let mut b = DVector::zeros(dim);
    b[dim - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numerical("singular stationary system".into()))?;
    Ok(sol.iter().copied().collect())
}

/// Left stationary vector by power iteration from the uniform law, stopping
/// when successive iterates are within `tol` in total variation.
pub fn stationary_by_power(t: &TransitionMatrix, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let dim = t.dim();
    let mut pi = vec![1.0 / dim as f64; dim];
    for _ in 0..max_iter {
        let next = t.left_multiply(&pi);
        let d = tv_distance(&pi, &next);
        pi = next;
        if d < tol {
            return Ok(pi);
        }
    }
    Err(Error::Numerical(format!("power iteration did not reach {tol} in {max_iter} steps")))
}

pub fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Stationary mass on the potential maximisers at each `beta`.
pub fn beta_ranking_probe(n: usize, x: &CovariateTable, p: &ModelParams, betas: &[f64]) -> Result<Vec<f64>> {
    if betas.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
        return Err(Error::invalid("beta values must be positive"));
    }
    if betas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("beta sequence must be strictly decreasing"));
    }
    let phi = all_potentials(n, x, p)?;
    let modes: Vec<usize> = argmax_potential(n, x, p)?.iter().map(|s| s.index() as usize).collect();
    Ok(betas
        .iter()
        .map(|&b| {
            let pi = softmax(&phi, b);
            modes.iter().map(|&m| pi[m]).sum()
        })
        .collect())
}
