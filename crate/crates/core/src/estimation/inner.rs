use rand::Rng;
use rayon::prelude::*;

use crate::dynamics::transition::{merge_entries, TransitionMatrix};
use crate::dynamics::{binomial, KDistribution, MeetingConfig, MeetingSampler};
use crate::equilibria::{for_each_subset, MAX_ENUM_N};
use crate::error::{Error, Result};
use crate::model::{cell_bit, check_dims, CovariateTable, ModelParams, NetworkState, PotentialEvaluator};

/// Largest meeting size the inner chain draws by default.
pub const DEFAULT_MAX_K: usize = 12;

/// `p_k` uniform on `{2, ..., min(n, 12)}`.
pub fn default_k_distribution(n: usize) -> Result<KDistribution> {
    KDistribution::uniform(2, n.min(DEFAULT_MAX_K))
}

/// Reusable Metropolis chain on networks: a random meeting, then a uniformly
/// drawn block for the chooser, accepted with `min(1, exp(dPhi))`.
#[derive(Clone, Debug)]
pub struct InnerSampler {
    meet: MeetingConfig,
    sampler: MeetingSampler,
    state: NetworkState,
    flipped: Vec<(usize, usize)>,
}

impl InnerSampler {
    pub fn new(n: usize, k_dist: KDistribution) -> Result<Self> {
        k_dist.validate_for(n)?;
        if k_dist.max_k() > 31 {
            return Err(Error::config("inner meeting size must stay below 32"));
        }
        Ok(Self {
            meet: MeetingConfig::uniform(k_dist),
            sampler: MeetingSampler::new(n),
            state: NetworkState::empty(n)?,
            flipped: Vec::with_capacity(32),
        })
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    /// Runs `steps` updates from `start`; returns the number of accepted
    /// proposals.
    pub fn run<R: Rng + ?Sized>(&mut self, start: &NetworkState, ev: &PotentialEvaluator, steps: usize, rng: &mut R) -> u64 {
        self.state.clone_from(start);
        let mut accepted = 0;
        for _ in 0..steps {
            accepted += self.step(ev, rng) as u64;
        }
        accepted
    }

    #[inline]
    fn step<R: Rng + ?Sized>(&mut self, ev: &PotentialEvaluator, rng: &mut R) -> bool {
        let i = self.sampler.draw(rng, &self.meet);
        let partners = self.sampler.partners();
        let width = partners.len() + 1;
        // a uniform new block is a uniform xor mask on the current one
        let diff = rng.random::<u32>() & ((1u32 << width) - 1);
        if diff == 0 {
            return true;
        }
        self.flipped.clear();
        let mut delta = 0.0;
        if diff & 1 == 1 {
            delta += ev.flip(&mut self.state, i, i);
            self.flipped.push((i, i));
        }
        for (t, &j) in partners.iter().enumerate() {
            if diff >> (t + 1) & 1 == 1 {
                delta += ev.flip(&mut self.state, i, j);
                self.flipped.push((i, j));
            }
        }
        if delta >= 0.0 || rng.random::<f64>() < delta.exp() {
            return true;
        }
        for &(a, b) in &self.flipped {
            self.state.flip_cell(a, b);
        }
        false
    }
}

/// Runs `r` inner steps at `p` from the observed state and returns `S^(R)`.
pub fn inner_sampler<R: Rng + ?Sized>(
    s_obs: &NetworkState,
    x: &CovariateTable,
    p: &ModelParams,
    r: usize,
    k_dist: &KDistribution,
    rng: &mut R,
) -> Result<NetworkState> {
    check_dims(s_obs, x)?;
    let mut inner = InnerSampler::new(s_obs.n(), k_dist.clone())?;
    inner.run(s_obs, &PotentialEvaluator::new(x, &unit_beta(p)?), r, rng);
    Ok(inner.state.clone())
}

fn unit_beta(p: &ModelParams) -> Result<ModelParams> {
    let theta = p.theta.iter().map(|t| t / p.beta).collect();
    ModelParams::new(p.stats.clone(), theta)
}

/// Acceptance probability of a proposed move from `s` to `t`.
pub fn inner_acceptance(s: &NetworkState, t: &NetworkState, x: &CovariateTable, p: &ModelParams) -> Result<f64> {
    let d = crate::model::potential(t, x, p)? - crate::model::potential(s, x, p)?;
    Ok((d / p.beta).exp().min(1.0))
}

/// Visits every meeting with its probability and the block cell bits.
fn for_each_meeting(n: usize, k_dist: &KDistribution, mut f: impl FnMut(usize, &[usize], &[usize], f64)) {
    for (k, pk) in k_dist.iter() {
        let pm = pk / (n as f64 * binomial(n - 1, k - 1));
        for i in 0..n {
            let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            for_each_subset(&others, k - 1, |partners| {
                let bits: Vec<usize> = std::iter::once(cell_bit(n, i, i))
                    .chain(partners.iter().map(|&j| cell_bit(n, i, j)))
                    .collect();
                f(i, partners, &bits, pm);
                true
            });
        }
    }
}

fn check_small(n: usize, k_dist: &KDistribution) -> Result<()> {
    if n > MAX_ENUM_N {
        return Err(Error::Capacity { n, limit: MAX_ENUM_N });
    }
    if n < 2 {
        return Err(Error::invalid("n must be at least 2"));
    }
    k_dist.validate_for(n)
}

/// Unconditional proposal `Q(S'|S)` of the inner chain, summed over `k` and
/// meetings.
pub fn inner_proposal_matrix(n: usize, k_dist: &KDistribution) -> Result<TransitionMatrix> {
    check_small(n, k_dist)?;
    let dim = 1u64 << (n * n);
    let rows = (0..dim)
        .into_par_iter()
        .map(|idx| {
            let mut entries = Vec::new();
            for_each_meeting(n, k_dist, |_, _, bits, pm| {
                let q = pm / (1u64 << bits.len()) as f64;
                for diff in 0..1usize << bits.len() {
                    let flip = bits.iter().enumerate().filter(|(t, _)| diff >> t & 1 == 1).fold(0u64, |m, (_, &b)| m | 1 << b);
                    entries.push(((idx ^ flip) as u32, q));
                }
            });
            merge_entries(entries)
        })
        .collect();
    Ok(TransitionMatrix::from_rows(rows))
}

/// Exact kernel `K(S'|S)` of the inner chain: proposal times acceptance,
/// rejected mass on the diagonal.
pub fn inner_kernel_matrix(n: usize, x: &CovariateTable, p: &ModelParams, k_dist: &KDistribution) -> Result<TransitionMatrix> {
    check_small(n, k_dist)?;
    check_dims(&NetworkState::empty(n)?, x)?;
    let phi = crate::dynamics::all_potentials(n, x, p)?;
    let dim = 1u64 << (n * n);
    let rows = (0..dim)
        .into_par_iter()
        .map(|idx| {
            let mut entries = Vec::new();
            let mut stay = 0.0;
            for_each_meeting(n, k_dist, |_, _, bits, pm| {
                let q = pm / (1u64 << bits.len()) as f64;
                for diff in 0..1usize << bits.len() {
                    let flip = bits.iter().enumerate().filter(|(t, _)| diff >> t & 1 == 1).fold(0u64, |m, (_, &b)| m | 1 << b);
                    let to = idx ^ flip;
                    let a = ((phi[to as usize] - phi[idx as usize]) / p.beta).exp().min(1.0);
                    entries.push((to as u32, q * a));
                    stay += q * (1.0 - a);
                }
            });
            entries.push((idx as u32, stay));
            merge_entries(entries)
        })
        .collect();
    Ok(TransitionMatrix::from_rows(rows))
}
