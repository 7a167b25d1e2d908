use nalgebra::{DMatrix, SymmetricEigen};

use super::meeting::{binomial, KDistribution};
use super::transition::TransitionMatrix;
use crate::error::{Error, Result};
use crate::model::{cell_bit, NetworkState};

/// A subset `I` of the `n^2` cells, as a mask over packed bit positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IndexSet {
    n: usize,
    mask: u64,
}

impl IndexSet {
    pub fn new(n: usize, mask: u64) -> Result<Self> {
        if n < 2 || n * n > 64 {
            return Err(Error::Capacity { n, limit: 8 });
        }
        if n * n < 64 && mask >> (n * n) != 0 {
            return Err(Error::invalid("index set mask has bits beyond n^2"));
        }
        Ok(Self { n, mask })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, 0)
    }

    pub fn from_cells(n: usize, cells: &[(usize, usize)]) -> Result<Self> {
        if cells.iter().any(|&(i, j)| i >= n || j >= n) {
            return Err(Error::invalid("cell out of range"));
        }
        Self::new(n, cells.iter().fold(0, |m, &(i, j)| m | 1 << cell_bit(n, i, j)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.mask >> cell_bit(self.n, i, j) & 1 == 1
    }

    /// `|I_i|`: off-diagonal cells of row `i` in the set.
    pub fn row_count(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| j != i && self.contains(i, j)).count()
    }
}

/// `e_I(S)`: the product of `(-1)^bit` over the cells in `I`.
pub fn eigenfunction_value(set: &IndexSet, s: &NetworkState) -> Result<i8> {
    if s.n() != set.n() {
        return Err(Error::invalid("index set and state differ in n"));
    }
    Ok(if (set.mask & s.index()).count_ones() % 2 == 0 { 1 } else { -1 })
}

/// Eigenvalue of `e_I` for the constant-potential kernel with fixed `k`: the
/// probability that the drawn block avoids every cell of `I`.
pub fn eigenvalue_formula(set: &IndexSet, k: usize) -> Result<f64> {
    let n = set.n();
    if k < 2 || k > n {
        return Err(Error::invalid(format!("k = {k} outside 2..={n}")));
    }
    let num: f64 = (0..n)
        .filter(|&i| !set.contains(i, i))
        .map(|i| binomial(n - 1 - set.row_count(i), k - 1))
        .sum();
    Ok(num / (n as f64 * binomial(n - 1, k - 1)))
}

/// Mixture of [`eigenvalue_formula`] over `p_k`.
pub fn eigenvalue_mixture(set: &IndexSet, k_dist: &KDistribution) -> Result<f64> {
    k_dist.iter().map(|(k, q)| Ok(q * eigenvalue_formula(set, k)?)).sum()
}

/// `(1/n)(n - 1 + (n - k)/(n - 1))`.
pub fn second_eigenvalue(n: usize, k: usize) -> Result<f64> {
    if n < 2 || k < 2 || k > n {
        return Err(Error::invalid(format!("need 2 <= k <= n, got n = {n}, k = {k}")));
    }
    let nf = n as f64;
    Ok((nf - 1.0 + (nf - k as f64) / (nf - 1.0)) / nf)
}

/// All `2^(n^2)` analytic eigenvalues, sorted descending.
pub fn analytic_spectrum(n: usize, k_dist: &KDistribution) -> Result<Vec<f64>> {
    if n > 4 {
        return Err(Error::Capacity { n, limit: 4 });
    }
    k_dist.validate_for(n)?;
    let mut v = (0..1u64 << (n * n))
        .map(|m| eigenvalue_mixture(&IndexSet::new(n, m)?, k_dist))
        .collect::<Result<Vec<f64>>>()?;
    sort_desc(&mut v);
    Ok(v)
}

fn sort_desc(v: &mut [f64]) {
    v.sort_by(|a, b| b.total_cmp(a));
}

/// In-place fast Walsh-Hadamard transform.
pub fn walsh_hadamard(v: &mut [f64]) {
    let len = v.len();
    assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for block in (0..len).step_by(2 * h) {
            for t in block..block + h {
                let (a, b) = (v[t], v[t + h]);
                v[t] = a + b;
                v[t + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Eigenvalues of a kernel that depends only on `S xor S'` (the
/// constant-potential case), obtained as the Walsh transform of row 0.
/// Fails if the kernel is not translation invariant. Sorted descending.
pub fn walsh_spectrum(t: &TransitionMatrix) -> Result<Vec<f64>> {
    let dim = t.dim();
    let mut row0 = vec![0.0; dim];
    for (c, v) in t.row(0) {
        row0[c] = v;
    }
    for r in 1..dim {
        for (c, v) in t.row(r) {
            if (v - row0[r ^ c]).abs() > 1e-12 {
                return Err(Error::Numerical(format!(
                    "kernel is not translation invariant at ({r}, {c})"
                )));
            }
        }
        if t.row(r).count() != t.row(0).count() {
            return Err(Error::Numerical(format!("row {r} has a different support from row 0")));
        }
    }
    walsh_hadamard(&mut row0);
    sort_desc(&mut row0);
    Ok(row0)
}

/// Eigenvalues of a kernel reversible with respect to `pi`, via the
/// symmetrisation `D^{1/2} T D^{-1/2}` and a dense symmetric eigensolve.
/// Sorted descending.
pub fn reversible_spectrum(t: &TransitionMatrix, pi: &[f64]) -> Result<Vec<f64>> {
    if pi.len() != t.dim() || pi.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::invalid("pi must be a positive vector of the kernel's dimension"));
    }
    let dense = t.to_dense()?;
    let d: Vec<f64> = pi.iter().map(|v| v.sqrt()).collect();
    let dim = t.dim();
    let sym = DMatrix::from_fn(dim, dim, |r, c| {
        let a = dense[(r, c)] * d[r] / d[c];
        let b = dense[(c, r)] * d[c] / d[r];
        0.5 * (a + b)
    });
    let mut v: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    sort_desc(&mut v);
    Ok(v)
}

/// Second-largest modulus in a spectrum that contains the eigenvalue 1.
pub fn second_largest_modulus(eigs: &[f64]) -> Result<f64> {
    if eigs.len() < 2 {
        return Err(Error::invalid("spectrum needs at least two eigenvalues"));
    }
    let mut m: Vec<f64> = eigs.iter().map(|v| v.abs()).collect();
    sort_desc(&mut m);
    Ok(m[1])
}
