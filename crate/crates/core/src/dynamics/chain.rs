use rand::Rng;

use super::meeting::{Meeting, MeetingConfig, MeetingSampler};
use crate::equilibria::{best_block_for, is_k_stable};
use crate::error::{Error, Result};
use crate::model::{check_dims, sufficient_stats, Block, CovariateTable, ModelParams, NetworkState, PotentialEvaluator};
use crate::rng::{stream, StreamRng};

/// Bits the dynamic may not touch.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Constraints {
    /// Every link bit keeps its starting value.
    pub freeze_links: bool,
    /// Per-node forced action; empty means no clamps.
    pub action_clamp: Vec<Option<bool>>,
}

impl Constraints {
    pub fn none() -> Self {
        Self::default()
    }

    #[inline]
    fn action_free(&self, i: usize) -> bool {
        self.action_clamp.get(i).is_none_or(Option::is_none)
    }

    fn apply(&self, s: &mut NetworkState) -> Result<()> {
        if !self.action_clamp.is_empty() {
            if self.action_clamp.len() != s.n() {
                return Err(Error::config("action clamp length differs from n"));
            }
            for (i, c) in self.action_clamp.iter().enumerate() {
                if let Some(a) = c {
                    s.set_action(i, *a);
                }
            }
        }
        Ok(())
    }

    /// Whether `s` honours the clamps and, when links are frozen, has the
    /// same links as `reference`.
    pub fn respected_by(&self, s: &NetworkState, reference: &NetworkState) -> bool {
        if self.freeze_links && !s.same_links(reference) {
            return false;
        }
        self.action_clamp
            .iter()
            .enumerate()
            .all(|(i, c)| c.is_none_or(|a| s.action(i) == a))
    }
}

#[derive(Clone, Debug, Default)]
struct LogitScratch {
    cells: Vec<(usize, usize)>,
    deltas: Vec<f64>,
}

/// Replaces the free bits of `i`'s block by a multinomial-logit draw with
/// weights `exp(Phi / beta)`.
#[allow(clippy::too_many_arguments)]
fn logit_block<R: Rng + ?Sized>(
    ev: &PotentialEvaluator,
    s: &mut NetworkState,
    i: usize,
    partners: &[usize],
    cons: &Constraints,
    inv_beta: f64,
    rng: &mut R,
    scratch: &mut LogitScratch,
) {
    let cells = &mut scratch.cells;
    cells.clear();
    if cons.action_free(i) {
        cells.push((i, i));
    }
    if !cons.freeze_links {
        cells.extend(partners.iter().map(|&j| (i, j)));
    }
    let m = cells.len();
    if m == 0 {
        return;
    }
    let deltas = &mut scratch.deltas;
    deltas.clear();
    deltas.resize(1 << m, 0.0);
    // Gray-code walk: one flip per alternative, potentials relative to now.
    let mut cur = 0.0;
    let mut code = 0usize;
    for step in 1usize..(1 << m) {
        let b = step.trailing_zeros() as usize;
        let (a, c) = cells[b];
        cur += ev.flip(s, a, c);
        code ^= 1 << b;
        deltas[code] = cur;
    }
    for (b, &(a, c)) in cells.iter().enumerate() {
        if code >> b & 1 == 1 {
            s.flip_cell(a, c);
        }
    }
    let max = deltas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for d in deltas.iter_mut() {
        *d = ((*d - max) * inv_beta).exp();
        total += *d;
    }
    let mut u = rng.random::<f64>() * total;
    let mut pick = deltas.len() - 1;
    for (c, &w) in deltas.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            pick = c;
            break;
        }
    }
    for (b, &(a, c)) in cells.iter().enumerate() {
        if pick >> b & 1 == 1 {
            s.flip_cell(a, c);
        }
    }
}

/// One perturbed update: the chooser redraws her whole block from the logit
/// distribution. Bits outside the block are untouched.
pub fn logit_update<R: Rng + ?Sized>(
    s: &NetworkState,
    meeting: &Meeting,
    x: &CovariateTable,
    p: &ModelParams,
    rng: &mut R,
) -> Result<NetworkState> {
    check_dims(s, x)?;
    let m = Meeting::new(meeting.chooser, meeting.partners.clone(), s.n())?;
    let ev = PotentialEvaluator::new(x, p);
    let mut out = s.clone();
    logit_block(&ev, &mut out, m.chooser, &m.partners, &Constraints::none(), 1.0 / p.beta, rng, &mut LogitScratch::default());
    Ok(out)
}

/// One unperturbed update: the chooser switches to her best block, with the
/// tie-break of [`crate::equilibria::best_response_block`].
pub fn best_response_update(s: &NetworkState, meeting: &Meeting, x: &CovariateTable, p: &ModelParams) -> Result<NetworkState> {
    check_dims(s, x)?;
    let m = Meeting::new(meeting.chooser, meeting.partners.clone(), s.n())?;
    let mut out = s.clone();
    let b = best_block_for(m.chooser, &m.partners, &mut out, x, p);
    b.write(&mut out, m.chooser, &m.partners);
    Ok(out)
}

/// A single k-player dynamic owning its state and random stream.
pub struct Chain<'a> {
    x: &'a CovariateTable,
    p: &'a ModelParams,
    meet: &'a MeetingConfig,
    ev: PotentialEvaluator,
    state: NetworkState,
    rng: StreamRng,
    sampler: MeetingSampler,
    constraints: Constraints,
    inv_beta: f64,
    scratch: LogitScratch,
    partners: Vec<usize>,
}

impl<'a> Chain<'a> {
    pub fn new(
        x: &'a CovariateTable,
        p: &'a ModelParams,
        meet: &'a MeetingConfig,
        start: NetworkState,
        rng: StreamRng,
    ) -> Result<Self> {
        check_dims(&start, x)?;
        meet.validate_for(start.n())?;
        Ok(Self {
            x,
            p,
            meet,
            ev: PotentialEvaluator::new(x, p),
            sampler: MeetingSampler::new(start.n()),
            state: start,
            rng,
            constraints: Constraints::none(),
            inv_beta: 1.0 / p.beta,
            scratch: LogitScratch::default(),
            partners: Vec::new(),
        })
    }

    /// Installs constraints and applies the action clamps to the state.
    pub fn with_constraints(mut self, c: Constraints) -> Result<Self> {
        c.apply(&mut self.state)?;
        self.constraints = c;
        Ok(self)
    }

    /// Replaces the folded potential used by logit steps.
    pub fn with_evaluator(mut self, ev: PotentialEvaluator) -> Self {
        self.ev = ev;
        self
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    pub fn into_state(self) -> NetworkState {
        self.state
    }

    /// One perturbed step.
    #[inline]
    pub fn step_logit(&mut self) {
        let i = self.sampler.draw(&mut self.rng, self.meet);
        logit_block(
            &self.ev,
            &mut self.state,
            i,
            self.sampler.partners(),
            &self.constraints,
            self.inv_beta,
            &mut self.rng,
            &mut self.scratch,
        );
    }

    /// One unperturbed step; returns whether the state changed.
    pub fn step_best_response(&mut self) -> bool {
        let i = self.sampler.draw(&mut self.rng, self.meet);
        self.partners.clear();
        self.partners.extend_from_slice(self.sampler.partners());
        self.partners.sort_unstable();
        let before = Block::read(&self.state, i, &self.partners);
        let b = best_block_for(i, &self.partners, &mut self.state, self.x, self.p);
        b.write(&mut self.state, i, &self.partners);
        b != before
    }
}

/// Length, thinning, seed and starting state of a simulated trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    pub steps: u64,
    pub thin: u64,
    pub seed: u64,
    pub start: NetworkState,
    /// Stream index, so parallel chains with one seed stay independent.
    pub chain: u32,
}

impl ChainConfig {
    pub fn new(steps: u64, thin: u64, seed: u64, start: NetworkState) -> Result<Self> {
        if thin == 0 {
            return Err(Error::config("thin must be at least 1"));
        }
        Ok(Self {
            steps,
            thin,
            seed,
            start,
            chain: 0,
        })
    }
}

/// Thinned trajectory of a chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainOutput {
    /// States after steps `thin, 2 thin, ...` (plus the terminal state of an
    /// absorbed unperturbed run).
    pub samples: Vec<NetworkState>,
    pub sample_steps: Vec<u64>,
    /// Sufficient statistics of each sample.
    pub stats: Vec<Vec<f64>>,
    /// Potential of each sample.
    pub potentials: Vec<f64>,
    pub final_state: NetworkState,
    pub steps_run: u64,
    /// Steps that changed the state.
    pub moves: u64,
    /// Step at which an unperturbed run was verified absorbing.
    pub absorbed_at: Option<u64>,
}

/// Runs the k-player dynamic. Perturbed runs use logit updates; unperturbed
/// runs use best responses and stop once a full stability check (every
/// `n C(n-1, k-1)` steps, `k` the largest meeting size) certifies the state
/// as absorbing.
pub fn run_chain(
    cfg: &ChainConfig,
    meet: &MeetingConfig,
    x: &CovariateTable,
    p: &ModelParams,
    perturbed: bool,
) -> Result<ChainOutput> {
    if cfg.thin == 0 {
        return Err(Error::config("thin must be at least 1"));
    }
    let n = cfg.start.n();
    let mut chain = Chain::new(x, p, meet, cfg.start.clone(), stream(cfg.seed, cfg.chain, 0))?;
    let kmax = meet.k_dist.max_k();
    let period = (n as f64 * super::meeting::binomial(n - 1, kmax - 1)).round() as u64;
    let mut out = ChainOutput {
        samples: Vec::new(),
        sample_steps: Vec::new(),
        stats: Vec::new(),
        potentials: Vec::new(),
        final_state: cfg.start.clone(),
        steps_run: 0,
        moves: 0,
        absorbed_at: None,
    };
    let record = |out: &mut ChainOutput, s: &NetworkState, t: u64| -> Result<()> {
        let w = sufficient_stats(s, x, &p.stats)?;
        out.potentials.push(w.iter().zip(&p.theta).map(|(a, b)| a * b).sum());
        out.stats.push(w);
        out.samples.push(s.clone());
        out.sample_steps.push(t);
        Ok(())
    };
    for t in 1..=cfg.steps {
        if !perturbed && (t - 1) % period == 0 && is_k_stable(chain.state(), kmax, x, p)? {
            out.absorbed_at = Some(t - 1);
            if out.sample_steps.last() != Some(&(t - 1)) {
                record(&mut out, chain.state(), t - 1)?;
            }
            break;
        }
        let changed = if perturbed {
            let before = chain.state().clone();
            chain.step_logit();
            *chain.state() != before
        } else {
            chain.step_best_response()
        };
        out.moves += changed as u64;
        out.steps_run = t;
        if t % cfg.thin == 0 {
            record(&mut out, chain.state(), t)?;
        }
    }
    if !perturbed && out.absorbed_at.is_none() && is_k_stable(chain.state(), kmax, x, p)? {
        let t = out.steps_run;
        out.absorbed_at = Some(t);
        if out.sample_steps.last() != Some(&t) {
            record(&mut out, chain.state(), t)?;
        }
    }
    out.final_state = chain.into_state();
    Ok(out)
}

/// Mean of `series` and its batch-means standard error over `batches`
/// equal batches (trailing remainder dropped).
pub fn batch_means(series: &[f64], batches: usize) -> Result<(f64, f64)> {
    if batches < 2 || series.len() < batches {
        return Err(Error::invalid("need at least two nonempty batches"));
    }
    let len = series.len() / batches;
    let means: Vec<f64> = series
        .chunks_exact(len)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / len as f64)
        .collect();
    let mean = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Ok((mean, (var / batches as f64).sqrt()))
}
