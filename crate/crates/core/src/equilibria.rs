//! k-player and partition Nash stability, potential maximisers and local
//! modes.
//!
//! Stability checks compare payoffs `u_i` directly; mode checks compare the
//! potential. The two routes only meet through the potential property.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    all_states, check_dims, payoff, potential, Block, CovariateTable, ModelParams, NetworkState,
};

/// Absolute slack for weak payoff and potential comparisons.
pub const TIE_TOL: f64 = 1e-12;

/// Largest `n` accepted by the exhaustive scans (`2^(n^2)` states).
pub const MAX_ENUM_N: usize = 4;

/// Ordered distinct players, `2 <= k <= n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlayerSubset {
    members: Vec<usize>,
}

impl PlayerSubset {
    pub fn new(members: Vec<usize>, n: usize) -> Result<Self> {
        if members.len() < 2 || members.len() > n {
            return Err(Error::invalid(format!(
                "a player subset needs 2..={n} members, got {}",
                members.len()
            )));
        }
        validate_members(&members, n)?;
        Ok(Self { members })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.contains(&i)
    }
}

fn validate_members(members: &[usize], n: usize) -> Result<()> {
    for (t, &m) in members.iter().enumerate() {
        if m >= n {
            return Err(Error::invalid(format!("player {m} out of range for n = {n}")));
        }
        if members[..t].contains(&m) {
            return Err(Error::invalid(format!("player {m} listed twice")));
        }
    }
    Ok(())
}

/// Disjoint cells covering `0..n`. Singleton cells are allowed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    cells: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(cells: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for c in &cells {
            if c.is_empty() {
                return Err(Error::invalid("partition cells must be nonempty"));
            }
            for &m in c {
                if m >= n {
                    return Err(Error::invalid(format!("player {m} out of range for n = {n}")));
                }
                if seen[m] {
                    return Err(Error::invalid(format!("player {m} appears in two cells")));
                }
                seen[m] = true;
            }
        }
        if let Some(m) = seen.iter().position(|&b| !b) {
            return Err(Error::invalid(format!("player {m} is not covered by the partition")));
        }
        Ok(Self { cells })
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn max_cell(&self) -> usize {
        self.cells.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// All set partitions of `0..n` (Bell-number many).
pub fn set_partitions(n: usize) -> Vec<Partition> {
    fn rec(i: usize, n: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Partition>) {
        if i == n {
            out.push(Partition { cells: cur.clone() });
            return;
        }
        for c in 0..cur.len() {
            cur[c].push(i);
            rec(i + 1, n, cur, out);
            cur[c].pop();
        }
        cur.push(vec![i]);
        rec(i + 1, n, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    rec(0, n, &mut Vec::new(), &mut out);
    out
}

/// Deduplicated k-player Nash stable states, in packed-index order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StableSet {
    pub k: usize,
    pub states: Vec<NetworkState>,
}

impl StableSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, s: &NetworkState) -> bool {
        self.states.binary_search_by_key(&s.index(), NetworkState::index).is_ok()
    }

    pub fn is_subset_of(&self, other: &StableSet) -> bool {
        self.states.iter().all(|s| other.contains(s))
    }
}

fn check_enum(n: usize, x: &CovariateTable) -> Result<()> {
    if n > MAX_ENUM_N {
        return Err(Error::Capacity { n, limit: MAX_ENUM_N });
    }
    if n < 2 {
        return Err(Error::invalid("n must be at least 2"));
    }
    if x.len() != n {
        return Err(Error::config(format!("covariate table has {} nodes, expected {n}", x.len())));
    }
    Ok(())
}

/// Visits every `size`-subset of `pool` in lexicographic order. Stops early
/// when `f` returns false; returns whether it ran to completion.
pub fn for_each_subset(pool: &[usize], size: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    fn rec(pool: &[usize], start: usize, size: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == size {
            return f(cur);
        }
        let need = size - cur.len();
        for t in start..=pool.len().saturating_sub(need) {
            cur.push(pool[t]);
            let go = rec(pool, t + 1, size, cur, f);
            cur.pop();
            if !go {
                return false;
            }
        }
        true
    }
    if size > pool.len() {
        return true;
    }
    rec(pool, 0, size, &mut Vec::with_capacity(size), &mut f)
}

/// Payoffs of `i` for every block towards `partners`; `s` is restored.
fn block_payoffs(i: usize, partners: &[usize], s: &mut NetworkState, x: &CovariateTable, p: &ModelParams) -> Vec<f64> {
    let original = Block::read(s, i, partners);
    let width = partners.len() + 1;
    let out = (0..1u32 << width)
        .map(|b| {
            Block(b).write(s, i, partners);
            payoff(i, s, x, p).expect("dimensions checked by caller")
        })
        .collect();
    original.write(s, i, partners);
    out
}

/// Whether `i`'s current block is a weak best response; `s` is restored.
fn block_is_best(i: usize, partners: &[usize], s: &mut NetworkState, x: &CovariateTable, p: &ModelParams) -> bool {
    let original = Block::read(s, i, partners);
    let u0 = payoff(i, s, x, p).expect("dimensions checked by caller");
    let width = partners.len() + 1;
    let mut best = true;
    for b in 0..1u32 << width {
        if b == original.0 {
            continue;
        }
        Block(b).write(s, i, partners);
        if payoff(i, s, x, p).expect("dimensions checked by caller") > u0 + TIE_TOL {
            best = false;
            break;
        }
    }
    original.write(s, i, partners);
    best
}

/// Picks the payoff-maximising block of `i` among the `2^|partners|+1`
/// alternatives. Ties keep the current block if it is a maximiser, else the
/// smallest block code. `partners` are used in the order given.
pub(crate) fn best_block_for(
    i: usize,
    partners: &[usize],
    s: &mut NetworkState,
    x: &CovariateTable,
    p: &ModelParams,
) -> Block {
    let current = Block::read(s, i, partners);
    let u = block_payoffs(i, partners, s, x, p);
    let max = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if u[current.0 as usize] >= max - TIE_TOL {
        return current;
    }
    Block(u.iter().position(|&v| v >= max - TIE_TOL).expect("nonempty") as u32)
}

/// Best response of `i` in the restriction game on `subset`. Partners are
/// the other members in ascending order; the returned block uses that
/// order.
pub fn best_response_block(
    i: usize,
    subset: &PlayerSubset,
    s: &NetworkState,
    x: &CovariateTable,
    p: &ModelParams,
) -> Result<Block> {
    check_dims(s, x)?;
    if !subset.contains(i) {
        return Err(Error::invalid(format!("player {i} is not in the subset")));
    }
    let mut partners: Vec<usize> = subset.members().iter().copied().filter(|&j| j != i).collect();
    partners.sort_unstable();
    let mut scratch = s.clone();
    Ok(best_block_for(i, &partners, &mut scratch, x, p))
}

fn k_stable_unchecked(s: &mut NetworkState, k: usize, x: &CovariateTable, p: &ModelParams) -> bool {
    let n = s.n();
    for i in 0..n {
        let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let ok = for_each_subset(&others, k - 1, |partners| block_is_best(i, partners, s, x, p));
        if !ok {
            return false;
        }
    }
    true
}

/// True iff in every size-`k` player set each member's current block is a
/// weak best response. Smaller sets are implied.
pub fn is_k_stable(s: &NetworkState, k: usize, x: &CovariateTable, p: &ModelParams) -> Result<bool> {
    check_dims(s, x)?;
    let n = s.n();
    if k < 2 || k > n {
        return Err(Error::invalid(format!("k = {k} outside 2..={n}")));
    }
    let mut scratch = s.clone();
    Ok(k_stable_unchecked(&mut scratch, k, x, p))
}

/// Exhaustive scan of all `2^(n^2)` states for k-player stability.
pub fn enumerate_k_stable(k: usize, n: usize, x: &CovariateTable, p: &ModelParams) -> Result<StableSet> {
    check_enum(n, x)?;
    if k < 2 || k > n {
        return Err(Error::invalid(format!("k = {k} outside 2..={n}")));
    }
    let total = 1u64 << (n * n);
    let states: Vec<NetworkState> = (0..total)
        .into_par_iter()
        .filter_map(|idx| {
            let mut s = NetworkState::from_index(n, idx).expect("valid index");
            if k_stable_unchecked(&mut s, k, x, p) {
                Some(s)
            } else {
                None
            }
        })
        .collect();
    Ok(StableSet { k, states })
}

/// True iff the state restricted to each cell is a Nash equilibrium of the
/// cell's restriction game.
pub fn is_partition_stable(s: &NetworkState, partition: &Partition, x: &CovariateTable, p: &ModelParams) -> Result<bool> {
    check_dims(s, x)?;
    let n = s.n();
    Partition::new(partition.cells.clone(), n)?;
    let mut scratch = s.clone();
    for cell in partition.cells() {
        for &i in cell {
            let partners: Vec<usize> = cell.iter().copied().filter(|&j| j != i).collect();
            if !block_is_best(i, &partners, &mut scratch, x, p) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// All global maximisers of the potential.
pub fn argmax_potential(n: usize, x: &CovariateTable, p: &ModelParams) -> Result<Vec<NetworkState>> {
    check_enum(n, x)?;
    let phis: Vec<f64> = all_states(n).map(|s| potential(&s, x, p)).collect::<Result<_>>()?;
    let max = phis.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOL * max.abs().max(1.0);
    Ok(phis
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= max - tol)
        .map(|(idx, _)| NetworkState::from_index(n, idx as u64).expect("valid index"))
        .collect())
}

/// States differing from `s` in exactly one action or link bit (`n^2` of them).
pub fn neighborhood(s: &NetworkState) -> Vec<NetworkState> {
    let n = s.n();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut t = s.clone();
            t.flip_cell(i, j);
            out.push(t);
        }
    }
    out
}

/// True iff no single-bit neighbour has strictly higher potential.
pub fn is_local_mode(s: &NetworkState, x: &CovariateTable, p: &ModelParams) -> Result<bool> {
    let phi = potential(s, x, p)?;
    let tol = TIE_TOL * phi.abs().max(1.0);
    for t in neighborhood(s) {
        if potential(&t, x, p)? > phi + tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Everyone's payoff at `s`, for efficiency comparisons left to the caller.
pub fn payoff_vector(s: &NetworkState, x: &CovariateTable, p: &ModelParams) -> Result<Vec<f64>> {
    (0..s.n()).map(|i| payoff(i, s, x, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PairCovariate, Statistic, StatisticSet};

    fn zero(n: usize) -> (CovariateTable, ModelParams) {
        let set = StatisticSet::new(Statistic::catalogue()).unwrap();
        let len = set.len();
        (CovariateTable::uniform(n), ModelParams::new(set, vec![0.0; len]).unwrap())
    }

    fn only(stat: Statistic, v: f64) -> ModelParams {
        ModelParams::from_pairs(&[(stat, v)]).unwrap()
    }

    #[test]
    fn subset_and_partition_validation() {
        assert!(PlayerSubset::new(vec![0], 3).is_err());
        assert!(PlayerSubset::new(vec![0, 0], 3).is_err());
        assert!(PlayerSubset::new(vec![0, 3], 3).is_err());
        assert!(Partition::new(vec![vec![0, 1]], 3).is_err());
        assert!(Partition::new(vec![vec![0, 1], vec![1, 2]], 3).is_err());
        assert_eq!(set_partitions(4).len(), 15);
        assert_eq!(set_partitions(3).len(), 5);
    }

    #[test]
    fn zero_theta_keeps_current_block() {
        let (x, p) = zero(3);
        let s = NetworkState::from_index(3, 0b1_0110_1011).unwrap();
        let sub = PlayerSubset::new(vec![2, 0], 3).unwrap();
        let b = best_response_block(0, &sub, &s, &x, &p).unwrap();
        assert_eq!(b, Block::read(&s, 0, &[2]));
        for k in 2..=3 {
            assert!(is_k_stable(&s, k, &x, &p).unwrap());
        }
    }

    #[test]
    fn positive_link_value_best_response() {
        let x = CovariateTable::uniform(2);
        let p = only(Statistic::LinkBaseline(PairCovariate::Constant), 1.0);
        let s = NetworkState::empty(2).unwrap();
        let sub = PlayerSubset::new(vec![0, 1], 2).unwrap();
        let b = best_response_block(0, &sub, &s, &x, &p).unwrap();
        assert!(b.bit(1));
        // action is payoff-irrelevant, so the current a_0 = 0 is kept
        assert!(!b.bit(0));
    }

    #[test]
    fn worked_example_best_block_is_smoke_and_link() {
        let p = ModelParams::from_pairs(&[
            (Statistic::ActionBaseline(crate::model::NodeCovariate::Constant), 1.0),
            (Statistic::AggregateExternality { per_capita: false }, 0.5),
            (Statistic::LocalExternality, 0.2),
            (Statistic::LinkBaseline(PairCovariate::Constant), 0.3),
            (Statistic::Reciprocity, 0.4),
        ])
        .unwrap();
        let s = NetworkState::from_parts(vec![false, true], vec![vec![false, false], vec![true, false]]).unwrap();
        let sub = PlayerSubset::new(vec![0, 1], 2).unwrap();
        assert_eq!(best_response_block(0, &sub, &s, &CovariateTable::uniform(2), &p).unwrap(), Block(3));
    }

    #[test]
    fn positive_link_value_stability() {
        let x = CovariateTable::uniform(2);
        let p = only(Statistic::LinkBaseline(PairCovariate::Constant), 1.0);
        for s in all_states(2) {
            let complete = s.link(0, 1) && s.link(1, 0);
            assert_eq!(is_k_stable(&s, 2, &x, &p).unwrap(), complete);
        }
    }

    #[test]
    fn k_out_of_range() {
        let (x, p) = zero(3);
        let s = NetworkState::empty(3).unwrap();
        assert!(is_k_stable(&s, 1, &x, &p).is_err());
        assert!(is_k_stable(&s, 4, &x, &p).is_err());
    }

    #[test]
    fn enumeration_small_cases() {
        let (x, p) = zero(2);
        assert_eq!(enumerate_k_stable(2, 2, &x, &p).unwrap().len(), 16);
        let p = only(Statistic::Reciprocity, 1.0);
        let set = enumerate_k_stable(2, 2, &x, &p).unwrap();
        assert_eq!(set.len(), 8);
        assert!(set.states.iter().all(|s| s.link(0, 1) == s.link(1, 0)));
    }

    #[test]
    fn enumeration_refuses_large_n() {
        let (x, p) = zero(5);
        assert!(matches!(enumerate_k_stable(2, 5, &x, &p), Err(Error::Capacity { n: 5, .. })));
        assert!(matches!(argmax_potential(5, &x, &p), Err(Error::Capacity { .. })));
    }

    #[test]
    fn reciprocal_mode() {
        let p = ModelParams::from_pairs(&[
            (Statistic::Reciprocity, 1.0),
            (Statistic::LinkBaseline(PairCovariate::Constant), -0.4),
        ])
        .unwrap();
        let x = CovariateTable::uniform(2);
        let modes = argmax_potential(2, &x, &p).unwrap();
        // the action bits are free, so four states tie
        assert_eq!(modes.len(), 4);
        for m in &modes {
            assert!(m.link(0, 1) && m.link(1, 0));
            assert!((potential(m, &x, &p).unwrap() - 0.2).abs() < 1e-12);
            assert!(is_k_stable(m, 2, &x, &p).unwrap());
            assert!(is_local_mode(m, &x, &p).unwrap());
        }
        let (x0, p0) = zero(2);
        assert_eq!(argmax_potential(2, &x0, &p0).unwrap().len(), 16);
    }

    #[test]
    fn neighbourhood_sizes() {
        let s = NetworkState::empty(2).unwrap();
        assert_eq!(neighborhood(&s).len(), 4);
        let s = NetworkState::from_index(3, 77).unwrap();
        let nb = neighborhood(&s);
        assert_eq!(nb.len(), 9);
        assert!(!nb.contains(&s));
        assert!(nb.iter().all(|t| t.hamming(&s) == 1));
    }

    #[test]
    fn partition_stability_with_indifference() {
        let (x, p) = zero(4);
        let s = NetworkState::from_index(4, 12345).unwrap();
        let part = Partition::new(vec![vec![0, 2], vec![1, 3]], 4).unwrap();
        assert!(is_partition_stable(&s, &part, &x, &p).unwrap());
    }
}
