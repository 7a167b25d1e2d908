use std::fmt;
use std::str::FromStr;

use super::covariates::{CovariateTable, NodeCovariate, PairCovariate};
use super::state::NetworkState;
use crate::error::{Error, Result};

/// One sufficient statistic `w_r(S, X)` of the potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Statistic {
    /// `sum_i a_i c(X_i)`.
    ActionBaseline(NodeCovariate),
    /// `1/2 sum_{i != j} a_i a_j`, optionally divided by `n`.
    AggregateExternality { per_capita: bool },
    /// `1/2 sum_{i != j} a_i a_j g_ij g_ji`.
    LocalExternality,
    /// `sum_{i != j} g_ij w(X_i, X_j)`.
    LinkBaseline(PairCovariate),
    /// `1/2 sum_{i != j} g_ij g_ji`.
    Reciprocity,
    /// `sum_i (sum_j g_ij)^2`.
    DegreeSquared,
    /// Directed 3-cycles, `sum_{i,j,k} g_ij g_jk g_ki / 3`.
    CyclicTriangle,
    /// Over unordered triples, `(g_ij+g_ji)(g_jk+g_kj)(g_ki+g_ik)`.
    SymmetricTriangle,
}

impl Statistic {
    pub fn name(&self) -> String {
        self.to_string()
    }

    /// Every statistic the crate knows about, in a canonical order.
    pub fn catalogue() -> Vec<Statistic> {
        let mut v: Vec<Statistic> = NodeCovariate::ALL.iter().map(|&c| Statistic::ActionBaseline(c)).collect();
        v.push(Statistic::AggregateExternality { per_capita: false });
        v.push(Statistic::AggregateExternality { per_capita: true });
        v.push(Statistic::LocalExternality);
        v.extend(PairCovariate::ALL.iter().map(|&c| Statistic::LinkBaseline(c)));
        v.extend([
            Statistic::Reciprocity,
            Statistic::DegreeSquared,
            Statistic::CyclicTriangle,
            Statistic::SymmetricTriangle,
        ]);
        v
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::ActionBaseline(c) => write!(f, "action:{}", c.key()),
            Statistic::AggregateExternality { per_capita: false } => f.write_str("agg_ext"),
            Statistic::AggregateExternality { per_capita: true } => f.write_str("agg_ext_per_n"),
            Statistic::LocalExternality => f.write_str("local_ext"),
            Statistic::LinkBaseline(c) => write!(f, "link:{}", c.key()),
            Statistic::Reciprocity => f.write_str("reciprocity"),
            Statistic::DegreeSquared => f.write_str("degree_sq"),
            Statistic::CyclicTriangle => f.write_str("cyclic_tri"),
            Statistic::SymmetricTriangle => f.write_str("sym_tri"),
        }
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Statistic::catalogue()
            .into_iter()
            .find(|st| st.to_string() == s)
            .ok_or_else(|| Error::config(format!("unknown statistic {s:?}")))
    }
}

/// Ordered, duplicate-free list of statistics shared with [`ModelParams`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StatisticSet {
    stats: Vec<Statistic>,
}

impl StatisticSet {
    pub fn new(stats: Vec<Statistic>) -> Result<Self> {
        for (k, s) in stats.iter().enumerate() {
            if stats[..k].contains(s) {
                return Err(Error::config(format!("statistic {s} listed twice")));
            }
        }
        Ok(Self { stats })
    }

    pub fn parse_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        Self::new(names.iter().map(|n| n.as_ref().parse()).collect::<Result<_>>()?)
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Statistic> {
        self.stats.iter()
    }

    pub fn as_slice(&self) -> &[Statistic] {
        &self.stats
    }

    pub fn position(&self, s: Statistic) -> Option<usize> {
        self.stats.iter().position(|&t| t == s)
    }

    pub fn names(&self) -> Vec<String> {
        self.stats.iter().map(|s| s.to_string()).collect()
    }
}

/// Coefficients aligned with a [`StatisticSet`], plus the Gumbel scale.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub stats: StatisticSet,
    pub theta: Vec<f64>,
    /// Only `theta / beta` is identified; defaults to 1.
    pub beta: f64,
}

impl ModelParams {
    pub fn new(stats: StatisticSet, theta: Vec<f64>) -> Result<Self> {
        Self::with_beta(stats, theta, 1.0)
    }

    pub fn with_beta(stats: StatisticSet, theta: Vec<f64>, beta: f64) -> Result<Self> {
        if theta.len() != stats.len() {
            return Err(Error::config(format!(
                "theta has {} entries but the statistic set has {}",
                theta.len(),
                stats.len()
            )));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::config(format!("beta must be positive, got {beta}")));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::config("theta contains a non-finite coefficient"));
        }
        Ok(Self { stats, theta, beta })
    }

    /// Convenience constructor from `(statistic, coefficient)` pairs.
    pub fn from_pairs(pairs: &[(Statistic, f64)]) -> Result<Self> {
        let stats = StatisticSet::new(pairs.iter().map(|p| p.0).collect())?;
        Self::new(stats, pairs.iter().map(|p| p.1).collect())
    }

    /// Same statistics, new coefficients.
    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::with_beta(self.stats.clone(), theta, self.beta)
    }

    pub fn coefficient(&self, s: Statistic) -> f64 {
        self.stats.position(s).map_or(0.0, |k| self.theta[k])
    }

    pub fn is_zero(&self) -> bool {
        self.theta.iter().all(|&t| t == 0.0)
    }
}

pub(crate) fn check_dims(s: &NetworkState, x: &CovariateTable) -> Result<()> {
    if s.n() != x.len() {
        return Err(Error::config(format!(
            "state has {} nodes but the covariate table has {}",
            s.n(),
            x.len()
        )));
    }
    Ok(())
}

/// Evaluates one statistic on `(S, X)` straight from its definition.
pub fn statistic_value(stat: Statistic, s: &NetworkState, x: &CovariateTable) -> f64 {
    let n = s.n();
    let g = |i: usize, j: usize| s.link(i, j) as u64;
    let a = |i: usize| s.action(i) as u64;
    match stat {
        Statistic::ActionBaseline(c) => (0..n).filter(|&i| s.action(i)).map(|i| c.eval(x.get(i))).sum(),
        Statistic::AggregateExternality { per_capita } => {
            let k = s.action_count() as u64;
            // 1/2 sum_{i != j} a_i a_j = C(k, 2)
            let v = (k * k.saturating_sub(1) / 2) as f64;
            if per_capita {
                v / n as f64
            } else {
                v
            }
        }
        Statistic::LocalExternality => {
            let mut c = 0u64;
            for i in 0..n {
                for j in i + 1..n {
                    c += a(i) * a(j) * g(i, j) * g(j, i);
                }
            }
            c as f64
        }
        Statistic::LinkBaseline(c) => {
            let mut v = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j && s.link(i, j) {
                        v += c.eval(x.get(i), x.get(j));
                    }
                }
            }
            v
        }
        Statistic::Reciprocity => {
            let mut c = 0u64;
            for i in 0..n {
                for j in i + 1..n {
                    c += g(i, j) * g(j, i);
                }
            }
            c as f64
        }
        Statistic::DegreeSquared => (0..n).map(|i| (s.out_degree(i) as u64).pow(2)).sum::<u64>() as f64,
        Statistic::CyclicTriangle => {
            let mut c = 0u64;
            for i in 0..n {
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
            }
            debug_assert_eq!(c % 3, 0);
            (c / 3) as f64
        }
        Statistic::SymmetricTriangle => {
            let mut c = 0u64;
            for i in 0..n {
                for j in i + 1..n {
                    let gij = g(i, j) + g(j, i);
                    if gij == 0 {
                        continue;
                    }
                    for k in j + 1..n {
                        c += gij * (g(j, k) + g(k, j)) * (g(k, i) + g(i, k));
                    }
                }
            }
            c as f64
        }
    }
}

/// Sufficient statistics `w(S, X)` in the order of `set`.
pub fn sufficient_stats(s: &NetworkState, x: &CovariateTable, set: &StatisticSet) -> Result<Vec<f64>> {
    check_dims(s, x)?;
    Ok(set.iter().map(|&st| statistic_value(st, s, x)).collect())
}
