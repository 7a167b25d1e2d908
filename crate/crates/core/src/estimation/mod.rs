//! Bayesian estimation of `theta` with the varying-k double
//! Metropolis-Hastings sampler.
//!
//! The likelihood `exp(Phi_theta(S)) / Z(theta)` has an intractable
//! normaliser. Each outer step proposes `theta'`, runs a short inner chain at
//! `theta'` from every observed network, and uses the auxiliary draws to
//! cancel `Z`.

mod inner;
mod summary;
mod synthetic;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dynamics::KDistribution;
use crate::error::{Error, Result};
use crate::model::{check_dims, sufficient_stats, CovariateTable, ModelParams, NetworkState, PotentialEvaluator, StatisticSet};
use crate::rng::{stream, StreamRng};

pub use inner::{
    default_k_distribution, inner_acceptance, inner_kernel_matrix, inner_proposal_matrix, inner_sampler, InnerSampler,
    DEFAULT_MAX_K,
};
pub use summary::{
    logistic, posterior_summary, report_transforms, shortest_interval, CoefficientSummary, CredibleInterval,
    ReportedEffect, ReportedScale,
};
pub use synthetic::{default_burn_steps, simulate_networks, synthetic_covariates};

/// One observed school network.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedNetwork {
    pub state: NetworkState,
    pub covariates: CovariateTable,
}

impl ObservedNetwork {
    pub fn new(state: NetworkState, covariates: CovariateTable) -> Result<Self> {
        check_dims(&state, &covariates)?;
        Ok(Self { state, covariates })
    }
}

/// Independent networks sharing one parameter vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObservedSample {
    pub networks: Vec<ObservedNetwork>,
}

/// Independent normal prior per coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct Prior {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Prior {
    pub const DEFAULT_SD: f64 = 2.5;

    pub fn new(mean: Vec<f64>, sd: Vec<f64>) -> Result<Self> {
        if mean.len() != sd.len() {
            return Err(Error::config("prior mean and sd differ in length"));
        }
        if sd.iter().any(|&s| !(s > 0.0) || !s.is_finite()) || mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::config("prior sds must be positive and means finite"));
        }
        Ok(Self { mean, sd })
    }

    /// Mean 0, sd 2.5 for each of `d` coefficients.
    pub fn weak(d: usize) -> Self {
        Self {
            mean: vec![0.0; d],
            sd: vec![Self::DEFAULT_SD; d],
        }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Log density up to a constant.
    pub fn log_density(&self, theta: &[f64]) -> f64 {
        theta
            .iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(t, (m, s))| -0.5 * ((t - m) / s).powi(2))
            .sum()
    }
}

/// Burn-in adaptation of the random-walk scales.
#[derive(Clone, Debug, PartialEq)]
pub struct Tuning {
    /// Target outer acceptance rate.
    pub target: f64,
    /// Iterations per adaptation batch.
    pub batch: usize,
}

impl Default for Tuning {
    fn default() -> Self {
        Self { target: 0.25, batch: 100 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub stats: StatisticSet,
    /// Outer iterations `T`.
    pub outer_iters: usize,
    /// Inner steps `R` per network and outer iteration.
    pub inner_steps: usize,
    /// Random-walk standard deviation per coefficient.
    pub scales: Vec<f64>,
    /// `p_k` of the inner chain; `None` uses [`default_k_distribution`].
    pub k_dist: Option<KDistribution>,
    pub burn_frac: f64,
    pub thin: usize,
    pub seed: u64,
    /// Adapt scales during burn-in, then freeze them.
    pub tuning: Option<Tuning>,
    /// Starting point; defaults to the prior mean.
    pub initial: Option<Vec<f64>>,
    /// Stream index, for independent chains under one seed.
    pub chain: u32,
}

impl SamplerConfig {
    pub fn new(stats: StatisticSet, outer_iters: usize, inner_steps: usize, seed: u64) -> Self {
        let d = stats.len();
        Self {
            stats,
            outer_iters,
            inner_steps,
            scales: vec![0.1; d],
            k_dist: None,
            burn_frac: 0.2,
            thin: 1,
            seed,
            tuning: Some(Tuning::default()),
            initial: None,
            chain: 0,
        }
    }

    pub fn burn_in(&self) -> usize {
        (self.burn_frac * self.outer_iters as f64).floor() as usize
    }

    fn validate(&self, prior: &Prior) -> Result<()> {
        let d = self.stats.len();
        if d == 0 {
            return Err(Error::config("no statistics to estimate"));
        }
        if self.outer_iters == 0 || self.inner_steps == 0 {
            return Err(Error::config("T and R must be at least 1"));
        }
        if self.scales.len() != d || self.scales.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::config("proposal scales must be positive, one per coefficient"));
        }
        if !(0.0..1.0).contains(&self.burn_frac) {
            return Err(Error::config("burn-in fraction must lie in [0, 1)"));
        }
        if self.thin == 0 {
            return Err(Error::config("thin must be at least 1"));
        }
        if prior.len() != d {
            return Err(Error::config("prior length differs from the statistic set"));
        }
        if let Some(init) = &self.initial {
            if init.len() != d || init.iter().any(|t| !t.is_finite()) {
                return Err(Error::config("initial theta must be finite, one per coefficient"));
            }
        }
        if let Some(t) = &self.tuning {
            if !(t.target > 0.0 && t.target < 1.0) || t.batch == 0 {
                return Err(Error::config("tuning needs a target in (0, 1) and a positive batch"));
            }
        }
        Ok(())
    }
}

/// Retained outer draws and acceptance diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorDraws {
    pub names: Vec<String>,
    /// One row per retained draw.
    pub draws: Vec<Vec<f64>>,
    /// Acceptance rate after burn-in.
    pub outer_acceptance: f64,
    /// Per-network inner acceptance over the whole run.
    pub inner_acceptance: Vec<f64>,
    /// Proposal scales in force after burn-in.
    pub final_scales: Vec<f64>,
    pub warnings: Vec<String>,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws.iter().map(|r| r[j]).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        let n = self.draws.len().max(1) as f64;
        (0..self.names.len()).map(|j| self.draws.iter().map(|r| r[j]).sum::<f64>() / n).collect()
    }
}

struct NetworkWorker<'a> {
    obs: &'a ObservedNetwork,
    w_obs: Vec<f64>,
    inner: InnerSampler,
    rng: StreamRng,
    accepted: u64,
}

struct Adapter {
    tuning: Tuning,
    d: usize,
    base: Vec<f64>,
    factor: f64,
    batch_accepts: usize,
    batches: usize,
    history: Vec<Vec<f64>>,
    next_rescale: usize,
}

impl Adapter {
    fn new(tuning: Tuning, base: Vec<f64>) -> Self {
        Self {
            tuning,
            d: base.len(),
            base,
            factor: 1.0,
            batch_accepts: 0,
            batches: 0,
            history: Vec::new(),
            next_rescale: 4,
        }
    }

    fn scale(&self, j: usize) -> f64 {
        self.base[j] * self.factor
    }

    fn observe(&mut self, theta: &[f64], accepted: bool) {
        self.history.push(theta.to_vec());
        self.batch_accepts += accepted as usize;
        if self.history.len() % self.tuning.batch != 0 {
            return;
        }
        self.batches += 1;
        let rate = self.batch_accepts as f64 / self.tuning.batch as f64;
        self.batch_accepts = 0;
        self.factor *= ((rate + 0.02) / (self.tuning.target + 0.02)).clamp(0.5, 2.0);
        if self.batches == self.next_rescale {
            self.next_rescale *= 2;
            // scale each coordinate by its spread over the latter half of the history
            let recent = &self.history[self.history.len() / 2..];
            let m = recent.len() as f64;
            let opt = 2.38 / (self.d as f64).sqrt();
            for j in 0..self.d {
                let mean = recent.iter().map(|r| r[j]).sum::<f64>() / m;
                let sd = (recent.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
                if sd > 1e-8 {
                    self.base[j] = opt * sd;
                }
            }
            self.factor = 1.0;
        }
    }
}

/// Runs the outer chain. Inner chains for distinct networks run in
/// parallel, each on its own random stream, so results do not depend on the
/// thread count.
pub fn double_mh(data: &ObservedSample, prior: &Prior, cfg: &SamplerConfig) -> Result<PosteriorDraws> {
    if data.networks.is_empty() {
        return Err(Error::config("no observed networks"));
    }
    cfg.validate(prior)?;
    let d = cfg.stats.len();
    let mut warnings = Vec::new();
    let mut workers = data
        .networks
        .iter()
        .enumerate()
        .map(|(g, obs)| {
            let n = obs.state.n();
            let k_dist = match &cfg.k_dist {
                Some(k) => k.clone(),
                None => default_k_distribution(n)?,
            };
            if cfg.inner_steps < 10 * n * n {
                warnings.push(format!(
                    "network {g}: R = {} is below 10 n^2 = {}; the inner chain may mix poorly",
                    cfg.inner_steps,
                    10 * n * n
                ));
            }
            Ok(NetworkWorker {
                obs,
                w_obs: sufficient_stats(&obs.state, &obs.covariates, &cfg.stats)?,
                inner: InnerSampler::new(n, k_dist)?,
                rng: stream(cfg.seed, cfg.chain, g as u32 + 1),
                accepted: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rng = stream(cfg.seed, cfg.chain, 0);
    let mut theta = cfg.initial.clone().unwrap_or_else(|| prior.mean.clone());
    let mut log_prior = prior.log_density(&theta);
    let burn = cfg.burn_in();
    let mut adapter = cfg.tuning.clone().map(|t| Adapter::new(t, cfg.scales.clone()));
    let mut scales = cfg.scales.clone();
    let mut draws = Vec::with_capacity((cfg.outer_iters - burn) / cfg.thin);
    let mut kept_accepts = 0usize;

    for t in 0..cfg.outer_iters {
        if let Some(a) = &adapter {
            for (j, s) in scales.iter_mut().enumerate() {
                *s = a.scale(j);
            }
        }
        let proposal: Vec<f64> = theta
            .iter()
            .zip(&scales)
            .map(|(th, s)| th + s * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let params = ModelParams::new(cfg.stats.clone(), proposal.clone())?;
        let r = cfg.inner_steps;
        let contributions = workers
            .par_iter_mut()
            .map(|w| {
                let ev = PotentialEvaluator::new(&w.obs.covariates, &params);
                w.accepted += w.inner.run(&w.obs.state, &ev, r, &mut w.rng);
                let w_aux = sufficient_stats(w.inner.state(), &w.obs.covariates, &cfg.stats)?;
                Ok((0..d).map(|j| (theta[j] - proposal[j]) * (w_aux[j] - w.w_obs[j])).sum::<f64>())
            })
            .collect::<Result<Vec<f64>>>()?;
        let proposal_prior = prior.log_density(&proposal);
        let log_alpha = proposal_prior - log_prior + contributions.iter().sum::<f64>();
        if log_alpha.is_nan() {
            return Err(Error::Numerical(format!("non-finite acceptance ratio at iteration {t}, theta' = {proposal:?}")));
        }
        let accept = log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha;
        if accept {
            theta = proposal;
            log_prior = proposal_prior;
        }
        if t < burn {
            if let Some(a) = &mut adapter {
                a.observe(&theta, accept);
            }
        } else {
            if t == burn {
                adapter = None;
            }
            kept_accepts += accept as usize;
            if (t - burn + 1) % cfg.thin == 0 {
                draws.push(theta.clone());
            }
        }
    }

    let total_inner = (cfg.outer_iters * cfg.inner_steps) as f64;
    let kept = cfg.outer_iters - burn;
    Ok(PosteriorDraws {
        names: cfg.stats.names(),
        draws,
        outer_acceptance: if kept == 0 { 0.0 } else { kept_accepts as f64 / kept as f64 },
        inner_acceptance: workers.iter().map(|w| w.accepted as f64 / total_inner).collect(),
        final_scales: scales,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Statistic;

    fn tiny() -> (ObservedSample, StatisticSet) {
        let stats = StatisticSet::new(vec![Statistic::Reciprocity]).unwrap();
        let mut s = NetworkState::empty(3).unwrap();
        s.set_link(0, 1, true);
        s.set_link(1, 0, true);
        let obs = ObservedNetwork::new(s, CovariateTable::uniform(3)).unwrap();
        (ObservedSample { networks: vec![obs] }, stats)
    }

    #[test]
    fn draw_count_and_determinism() {
        let (data, stats) = tiny();
        let mut cfg = SamplerConfig::new(stats, 103, 50, 9);
        cfg.burn_frac = 0.3;
        cfg.thin = 4;
        let a = double_mh(&data, &Prior::weak(1), &cfg).unwrap();
        assert_eq!(a.len(), (103 - 30) / 4);
        assert_eq!(a, double_mh(&data, &Prior::weak(1), &cfg).unwrap());
        assert!((0.0..=1.0).contains(&a.outer_acceptance));
        assert!(a.inner_acceptance.iter().all(|r| (0.0..=1.0).contains(r)));
        assert_eq!(a.warnings.len(), 1);
    }

    #[test]
    fn config_errors() {
        let (data, stats) = tiny();
        let mut cfg = SamplerConfig::new(stats, 10, 10, 1);
        cfg.scales = vec![0.0];
        assert!(matches!(double_mh(&data, &Prior::weak(1), &cfg), Err(Error::Config(_))));
        cfg.scales = vec![0.1];
        cfg.burn_frac = 1.0;
        assert!(double_mh(&data, &Prior::weak(1), &cfg).is_err());
        cfg.burn_frac = 0.0;
        assert!(double_mh(&ObservedSample::default(), &Prior::weak(1), &cfg).is_err());
        assert!(Prior::new(vec![0.0], vec![-1.0]).is_err());
    }

    #[test]
    fn tight_prior_dominates() {
        let (data, stats) = tiny();
        let prior = Prior::new(vec![1.5], vec![0.01]).unwrap();
        let mut cfg = SamplerConfig::new(stats, 2000, 30, 3);
        cfg.scales = vec![0.01];
        let post = double_mh(&data, &prior, &cfg).unwrap();
        assert!((post.means()[0] - 1.5).abs() < 0.01);
    }
}
