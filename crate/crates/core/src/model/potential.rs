use super::covariates::CovariateTable;
use super::state::NetworkState;
use super::stats::{check_dims, sufficient_stats, ModelParams, Statistic};
use crate::error::{Error, Result};

/// A chooser's block: bit 0 is the action `a_i`, bit `t + 1` is the link
/// `g_{i, partners[t]}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Block(pub u32);

impl Block {
    /// Reads the current block of `i` towards `partners` from `s`.
    pub fn read(s: &NetworkState, i: usize, partners: &[usize]) -> Block {
        let mut b = s.action(i) as u32;
        for (t, &j) in partners.iter().enumerate() {
            b |= (s.link(i, j) as u32) << (t + 1);
        }
        Block(b)
    }

    /// Writes the block into `s`.
    pub fn write(self, s: &mut NetworkState, i: usize, partners: &[usize]) {
        s.set_action(i, self.0 & 1 == 1);
        for (t, &j) in partners.iter().enumerate() {
            s.set_link(i, j, self.0 >> (t + 1) & 1 == 1);
        }
    }

    #[inline]
    pub fn bit(self, b: usize) -> bool {
        self.0 >> b & 1 == 1
    }
}

/// Coefficients folded per node and per ordered pair so that local
/// potential differences cost `O(n)` or less.
///
/// The incremental formulas here are the closed-form differences of each
/// statistic; [`potential`] evaluates the statistics directly. Tests check
/// the two against each other.
#[derive(Clone, Debug)]
pub struct PotentialEvaluator {
    n: usize,
    node_value: Vec<f64>,
    link_value: Vec<f64>,
    agg: f64,
    local: f64,
    recip: f64,
    deg_sq: f64,
    cyc: f64,
    sym: f64,
}

impl PotentialEvaluator {
    pub fn new(x: &CovariateTable, p: &ModelParams) -> Self {
        let n = x.len();
        let mut ev = Self {
            n,
            node_value: vec![0.0; n],
            link_value: vec![0.0; n * n],
            agg: 0.0,
            local: 0.0,
            recip: 0.0,
            deg_sq: 0.0,
            cyc: 0.0,
            sym: 0.0,
        };
        for (&stat, &th) in p.stats.iter().zip(&p.theta) {
            if th == 0.0 {
                continue;
            }
            match stat {
                Statistic::ActionBaseline(c) => {
                    for i in 0..n {
                        ev.node_value[i] += th * c.eval(x.get(i));
                    }
                }
                Statistic::AggregateExternality { per_capita } => {
                    ev.agg += if per_capita { th / n as f64 } else { th };
                }
                Statistic::LocalExternality => ev.local += th,
                Statistic::LinkBaseline(c) => {
                    for i in 0..n {
                        for j in 0..n {
                            if i != j {
                                ev.link_value[i * n + j] += th * c.eval(x.get(i), x.get(j));
                            }
                        }
                    }
                }
                Statistic::Reciprocity => ev.recip += th,
                Statistic::DegreeSquared => ev.deg_sq += th,
                Statistic::CyclicTriangle => ev.cyc += th,
                Statistic::SymmetricTriangle => ev.sym += th,
            }
        }
        ev
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `v(X_i)` under the folded coefficients.
    pub fn baseline(&self, i: usize) -> f64 {
        self.node_value[i]
    }

    /// Adds a constant to the action difference of node `i`.
    pub fn add_action_offset(&mut self, i: usize, v: f64) {
        self.node_value[i] += v;
    }

    /// Zeroes the aggregate and local externality coefficients.
    pub fn disable_action_externalities(&mut self) {
        self.agg = 0.0;
        self.local = 0.0;
    }

    /// The aggregate and local externality parts of `i`'s action difference.
    pub fn action_externality(&self, s: &NetworkState, i: usize) -> f64 {
        let mut v = 0.0;
        if self.agg != 0.0 {
            let others = s.action_count() - s.action(i) as usize;
            v += self.agg * others as f64;
        }
        if self.local != 0.0 {
            let mut c = 0usize;
            for j in 0..self.n {
                if j != i && s.action(j) && s.link(i, j) && s.link(j, i) {
                    c += 1;
                }
            }
            v += self.local * c as f64;
        }
        v
    }

    /// `Phi(a_i = 1, S_-i) - Phi(a_i = 0, S_-i)`.
    #[inline]
    pub fn delta_action(&self, s: &NetworkState, i: usize) -> f64 {
        self.node_value[i] + self.action_externality(s, i)
    }

    /// `Phi(g_ij = 1, S_-ij) - Phi(g_ij = 0, S_-ij)`.
    pub fn delta_link(&self, s: &NetworkState, i: usize, j: usize) -> f64 {
        let n = self.n;
        let gji = s.link(j, i);
        let mut v = self.link_value[i * n + j];
        if gji {
            v += self.recip;
            if s.action(i) && s.action(j) {
                v += self.local;
            }
        }
        if self.deg_sq != 0.0 {
            let d = s.out_degree(i) - s.link(i, j) as usize;
            v += self.deg_sq * (2 * d + 1) as f64;
        }
        if self.cyc != 0.0 || self.sym != 0.0 {
            let mut cyc = 0usize;
            let mut sym = 0usize;
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let (gjk, gkj, gki, gik) = (s.link(j, k), s.link(k, j), s.link(k, i), s.link(i, k));
                cyc += (gjk && gki) as usize;
                sym += (gjk as usize + gkj as usize) * (gki as usize + gik as usize);
            }
            v += self.cyc * cyc as f64 + self.sym * sym as f64;
        }
        v
    }

    /// `Phi(S with cell (i, j) flipped) - Phi(S)`. Diagonal cells are actions.
    #[inline]
    pub fn flip_delta(&self, s: &NetworkState, i: usize, j: usize) -> f64 {
        if i == j {
            let d = self.delta_action(s, i);
            if s.action(i) {
                -d
            } else {
                d
            }
        } else {
            let d = self.delta_link(s, i, j);
            if s.link(i, j) {
                -d
            } else {
                d
            }
        }
    }

    /// Flips the cell and returns the potential change.
    #[inline]
    pub fn flip(&self, s: &mut NetworkState, i: usize, j: usize) -> f64 {
        let d = self.flip_delta(s, i, j);
        s.flip_cell(i, j);
        d
    }

    /// `Phi(new) - Phi(old)` for `i`'s block towards `partners`, computed by
    /// walking the differing bits one at a time. `s` is left holding `new`.
    pub fn move_block(&self, s: &mut NetworkState, i: usize, partners: &[usize], old: Block, new: Block) -> f64 {
        old.write(s, i, partners);
        let diff = old.0 ^ new.0;
        let mut total = 0.0;
        if diff & 1 == 1 {
            total += self.flip(s, i, i);
        }
        for (t, &j) in partners.iter().enumerate() {
            if diff >> (t + 1) & 1 == 1 {
                total += self.flip(s, i, j);
            }
        }
        total
    }

    /// Potential differences of all `2^k` blocks relative to block `0`,
    /// visited in Gray-code order (one flip per block). `s` is restored.
    pub fn block_potentials(&self, s: &mut NetworkState, i: usize, partners: &[usize], out: &mut Vec<f64>) {
        let width = partners.len() + 1;
        let original = Block::read(s, i, partners);
        Block(0).write(s, i, partners);
        out.clear();
        out.resize(1 << width, 0.0);
        let mut cur = 0.0;
        let mut code = 0u32;
        for step in 1u32..(1 << width) {
            let b = step.trailing_zeros() as usize;
            cur += if b == 0 { self.flip(s, i, i) } else { self.flip(s, i, partners[b - 1]) };
            code ^= 1 << b;
            out[code as usize] = cur;
        }
        original.write(s, i, partners);
    }
}

/// `Phi(S, X) = theta . w(S, X)`.
pub fn potential(s: &NetworkState, x: &CovariateTable, p: &ModelParams) -> Result<f64> {
    let w = sufficient_stats(s, x, &p.stats)?;
    Ok(w.iter().zip(&p.theta).map(|(a, b)| a * b).sum())
}

fn check_node(i: usize, n: usize) -> Result<()> {
    if i >= n {
        return Err(Error::invalid(format!("node {i} out of range for n = {n}")));
    }
    Ok(())
}

/// Player `i`'s payoff `u_i(S, X)`, all sums excluding `j = i`.
///
/// Triangle statistics contribute the part of the triad owned by `i`: the
/// directed cycles through `i`, and for the symmetric form the triad
/// product minus its value with `i`'s two out-links removed.
pub fn payoff(i: usize, s: &NetworkState, x: &CovariateTable, p: &ModelParams) -> Result<f64> {
    check_dims(s, x)?;
    let n = s.n();
    check_node(i, n)?;
    let ai = s.action(i);
    let g = |a: usize, b: usize| s.link(a, b) as u64;
    let mut u = 0.0;
    for (&stat, &th) in p.stats.iter().zip(&p.theta) {
        if th == 0.0 {
            continue;
        }
        let term = match stat {
            Statistic::ActionBaseline(c) => {
                if ai {
                    c.eval(x.get(i))
                } else {
                    0.0
                }
            }
            Statistic::AggregateExternality { per_capita } => {
                if !ai {
                    0.0
                } else {
                    let others = (0..n).filter(|&j| j != i && s.action(j)).count() as f64;
                    if per_capita {
                        others / n as f64
                    } else {
                        others
                    }
                }
            }
            Statistic::LocalExternality => {
                if !ai {
                    0.0
                } else {
                    (0..n).filter(|&j| j != i && s.action(j) && s.link(i, j) && s.link(j, i)).count() as f64
                }
            }
            Statistic::LinkBaseline(c) => (0..n)
                .filter(|&j| j != i && s.link(i, j))
                .map(|j| c.eval(x.get(i), x.get(j)))
                .sum(),
            Statistic::Reciprocity => (0..n).filter(|&j| j != i && s.link(i, j) && s.link(j, i)).count() as f64,
            Statistic::DegreeSquared => (s.out_degree(i) as f64).powi(2),
            Statistic::CyclicTriangle => {
                let mut c = 0u64;
                for j in 0..n {
                    if j == i || !s.link(i, j) {
                        continue;
                    }
                    for k in 0..n {
                        if k != i && k != j {
                            c += g(j, k) * g(k, i);
                        }
                    }
                }
                c as f64
            }
            Statistic::SymmetricTriangle => {
                let mut c = 0u64;
                for j in 0..n {
                    for k in j + 1..n {
                        if j == i || k == i {
                            continue;
                        }
                        let side = g(j, k) + g(k, j);
                        let full = (g(i, j) + g(j, i)) * (g(i, k) + g(k, i));
                        c += side * (full - g(j, i) * g(k, i));
                    }
                }
                c as f64
            }
        };
        u += th * term;
    }
    Ok(u)
}

/// `u_i(a_i = 1, S_-i) - u_i(a_i = 0, S_-i)`.
pub fn delta_action(i: usize, s: &NetworkState, x: &CovariateTable, p: &ModelParams) -> Result<f64> {
    check_dims(s, x)?;
    check_node(i, s.n())?;
    Ok(PotentialEvaluator::new(x, p).delta_action(s, i))
}

/// `u_i(g_ij = 1, S_-ij) - u_i(g_ij = 0, S_-ij)`.
pub fn delta_link(i: usize, j: usize, s: &NetworkState, x: &CovariateTable, p: &ModelParams) -> Result<f64> {
    check_dims(s, x)?;
    check_node(i, s.n())?;
    check_node(j, s.n())?;
    if i == j {
        return Err(Error::invalid("a link needs two distinct nodes"));
    }
    Ok(PotentialEvaluator::new(x, p).delta_link(s, i, j))
}

/// `Phi(new) - Phi(old)` where the blocks encode `(a_i, {g_ij}_{j in partners})`.
#[allow(clippy::too_many_arguments)]
pub fn block_potential_diff(
    i: usize,
    partners: &[usize],
    old_block: Block,
    new_block: Block,
    width: usize,
    s: &NetworkState,
    x: &CovariateTable,
    p: &ModelParams,
) -> Result<f64> {
    check_dims(s, x)?;
    check_node(i, s.n())?;
    if width != partners.len() + 1 {
        return Err(Error::invalid(format!(
            "block width {width} does not match {} partners + 1",
            partners.len()
        )));
    }
    if width > 31 || old_block.0 >> width != 0 || new_block.0 >> width != 0 {
        return Err(Error::invalid("block has bits beyond its width"));
    }
    for (t, &j) in partners.iter().enumerate() {
        check_node(j, s.n())?;
        if j == i || partners[..t].contains(&j) {
            return Err(Error::invalid("partners must be distinct and exclude the chooser"));
        }
    }
    let ev = PotentialEvaluator::new(x, p);
    let mut scratch = s.clone();
    Ok(ev.move_block(&mut scratch, i, partners, old_block, new_block))
}
