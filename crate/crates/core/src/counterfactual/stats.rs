use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_dims, CovariateTable, NetworkState};

/// Smoker / non-smoker nomination counts: `counts[a][b]` links from status
/// `a` to status `b` (index 1 = smoker).
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MixingMatrix {
    pub counts: [[u64; 2]; 2],
}

impl MixingMatrix {
    /// Row shares; an empty row gives zeros.
    pub fn row_shares(&self) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for (a, row) in self.counts.iter().enumerate() {
            let t = row[0] + row[1];
            if t > 0 {
                out[a] = [row[0] as f64 / t as f64, row[1] as f64 / t as f64];
            }
        }
        out
    }

    pub fn row_totals(&self) -> [u64; 2] {
        [self.counts[0][0] + self.counts[0][1], self.counts[1][0] + self.counts[1][1]]
    }
}

/// Behaviour and structure summaries of one network (or a disjoint union).
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct NetworkStats {
    pub nodes: usize,
    /// Ordered pairs available for links, `sum n (n - 1)`.
    pub dyads: usize,
    pub smokers: usize,
    pub links: usize,
    /// Links whose reverse is also present.
    pub reciprocated_links: usize,
    pub cyclic_triangles: usize,
    pub max_in_degree: usize,
    pub max_out_degree: usize,
    pub max_reciprocal_degree: usize,
    pub mixing: MixingMatrix,
}

impl NetworkStats {
    pub fn prevalence(&self) -> f64 {
        ratio(self.smokers, self.nodes)
    }

    pub fn density(&self) -> f64 {
        ratio(self.links, self.dyads)
    }

    /// Share of links that are reciprocated; 0 for an empty network (see
    /// [`Self::reciprocity_degenerate`]).
    pub fn reciprocity(&self) -> f64 {
        ratio(self.reciprocated_links, self.links)
    }

    pub fn reciprocity_degenerate(&self) -> bool {
        self.links == 0
    }

    pub fn average_degree(&self) -> f64 {
        ratio(self.links, self.nodes)
    }

    pub fn triangles_per_node(&self) -> f64 {
        ratio(self.cyclic_triangles, self.nodes)
    }

    /// Statistics of the disjoint union.
    pub fn merge(&mut self, other: &NetworkStats) {
        self.nodes += other.nodes;
        self.dyads += other.dyads;
        self.smokers += other.smokers;
        self.links += other.links;
        self.reciprocated_links += other.reciprocated_links;
        self.cyclic_triangles += other.cyclic_triangles;
        self.max_in_degree = self.max_in_degree.max(other.max_in_degree);
        self.max_out_degree = self.max_out_degree.max(other.max_out_degree);
        self.max_reciprocal_degree = self.max_reciprocal_degree.max(other.max_reciprocal_degree);
        for a in 0..2 {
            for b in 0..2 {
                self.mixing.counts[a][b] += other.mixing.counts[a][b];
            }
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn network_stats(s: &NetworkState, x: &CovariateTable) -> Result<NetworkStats> {
    check_dims(s, x)?;
    let n = s.n();
    if n < 2 {
        return Err(Error::invalid("network statistics need n >= 2"));
    }
    let mut st = NetworkStats {
        nodes: n,
        dyads: n * (n - 1),
        smokers: s.action_count(),
        ..Default::default()
    };
    for i in 0..n {
        let mut recip = 0;
        for j in 0..n {
            if i == j || !s.link(i, j) {
                continue;
            }
            st.links += 1;
            if s.link(j, i) {
                st.reciprocated_links += 1;
                recip += 1;
            }
            st.mixing.counts[s.action(i) as usize][s.action(j) as usize] += 1;
            for k in 0..n {
                if k != i && k != j && s.link(j, k) && s.link(k, i) {
                    st.cyclic_triangles += 1;
                }
            }
        }
        st.max_out_degree = st.max_out_degree.max(s.out_degree(i));
        st.max_in_degree = st.max_in_degree.max(s.in_degree(i));
        st.max_reciprocal_degree = st.max_reciprocal_degree.max(recip);
    }
    st.cyclic_triangles /= 3;
    Ok(st)
}

/// Expected number of cross-group links under random mixing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FsiBaseline {
    /// Links spread uniformly over all ordered pairs: `L * cross pairs / (n (n - 1))`.
    #[default]
    GroupSize,
    /// Senders and receivers matched in proportion to the groups' out- and
    /// in-link totals (two-group and general form).
    LinkMarginals,
}

/// `1 - observed / expected` cross-group links. Unclipped; 1 exactly when no
/// link crosses groups.
pub fn freeman_segregation_index(s: &NetworkState, groups: &[usize], baseline: FsiBaseline) -> Result<f64> {
    let n = s.n();
    if groups.len() != n {
        return Err(Error::invalid("grouping must assign every node"));
    }
    let g = groups.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; g];
    for &k in groups {
        sizes[k] += 1;
    }
    if sizes.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::invalid("segregation needs at least two nonempty groups"));
    }
    let mut links = 0usize;
    let mut cross = 0usize;
    let mut out_tot = vec![0usize; g];
    let mut in_tot = vec![0usize; g];
    for i in 0..n {
        for j in 0..n {
            if i != j && s.link(i, j) {
                links += 1;
                out_tot[groups[i]] += 1;
                in_tot[groups[j]] += 1;
                cross += (groups[i] != groups[j]) as usize;
            }
        }
    }
    let expected = match baseline {
        FsiBaseline::GroupSize => {
            let same: usize = sizes.iter().map(|&c| c * c.saturating_sub(1)).sum();
            let cross_pairs = n * (n - 1) - same;
            links as f64 * cross_pairs as f64 / (n * (n - 1)) as f64
        }
        FsiBaseline::LinkMarginals => {
            if links == 0 {
                0.0
            } else {
                let within: f64 = (0..g).map(|k| (out_tot[k] * in_tot[k]) as f64).sum::<f64>() / links as f64;
                links as f64 - within
            }
        }
    };
    if !(expected > 0.0) {
        return Err(Error::invalid("expected cross-group links is zero"));
    }
    Ok(1.0 - cross as f64 / expected)
}

/// Ratio of the simulated effect to the effect without spillovers.
pub fn multiplier(actual_effect: f64, proportional_effect: f64) -> Result<f64> {
    if proportional_effect == 0.0 {
        return Err(Error::invalid("proportional effect is zero"));
    }
    Ok(actual_effect / proportional_effect)
}
