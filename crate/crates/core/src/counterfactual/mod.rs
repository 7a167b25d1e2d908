//! Policy experiments: price changes, composition swaps and treated-subset
//! clamps, simulated under the full dynamic, with the network held fixed, or
//! with peer effects frozen at their observed values.

mod stats;

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{Chain, Constraints, KDistribution, MeetingConfig};
use crate::error::{Error, Result};
use crate::estimation::ObservedNetwork;
use crate::model::{ModelParams, NetworkState, PotentialEvaluator};
use crate::rng::{stream, StreamRng};

pub use stats::{freeman_segregation_index, multiplier, network_stats, FsiBaseline, MixingMatrix, NetworkStats};

/// Nodes are addressed by their position in the concatenation of all
/// networks, in data order.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Treated {
    Nodes(Vec<usize>),
    /// A uniformly drawn share of all nodes, rounded down.
    Fraction(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScenarioKind {
    /// Adds `cents` to every node's price.
    PriceDelta { cents: f64 },
    /// Exchanges the covariates (school included) of `floor(fraction *
    /// min(|a|, |b|))` random pairs drawn from the two groups. Each student
    /// takes over the other's position, including its starting links.
    Swap {
        group_a: Vec<usize>,
        group_b: Vec<usize>,
        fraction: f64,
    },
    /// Freezes the treated nodes' actions at `forced_action`.
    Clamp { treated: Treated, forced_action: bool },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Every bit updates.
    #[default]
    Full,
    /// Links stay at the observed network; only actions update.
    FixedNetwork,
    /// Links stay observed and each node's peer terms are evaluated at the
    /// observed actions, so there is no feedback between decisions.
    PeOff,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(Mode::Full),
            "fixed_network" => Ok(Mode::FixedNetwork),
            "pe_off" => Ok(Mode::PeOff),
            other => Err(Error::config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub mode: Mode,
    pub replications: usize,
    /// Steps before the first sample; defaults to `50 n^2` per network.
    pub burn: Option<u64>,
    /// Steps between samples; defaults to `n^2`.
    pub thin: Option<u64>,
    /// Samples per replication.
    pub samples: usize,
    /// Meeting sizes; defaults to `k = 2`.
    pub k_dist: Option<KDistribution>,
    pub seed: u64,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, mode: Mode, replications: usize, seed: u64) -> Self {
        Self {
            kind,
            mode,
            replications,
            burn: None,
            thin: None,
            samples: 20,
            k_dist: None,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::config("replications must be at least 1"));
        }
        if self.samples == 0 || self.thin == Some(0) {
            return Err(Error::config("samples and thin must be at least 1"));
        }
        match &self.kind {
            ScenarioKind::PriceDelta { cents } if !cents.is_finite() => Err(Error::config("price delta must be finite")),
            ScenarioKind::Swap { fraction, .. } | ScenarioKind::Clamp { treated: Treated::Fraction(fraction), .. }
                if !(0.0..=1.0).contains(fraction) =>
            {
                Err(Error::config(format!("fraction {fraction} outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

/// Data and constraints after a scenario has been applied.
#[derive(Clone, Debug, PartialEq)]
pub struct AppliedScenario {
    pub networks: Vec<ObservedNetwork>,
    pub constraints: Vec<Constraints>,
    pub swapped_pairs: usize,
    /// Global indices of clamped nodes, ascending.
    pub treated: Vec<usize>,
    pub notes: Vec<String>,
}

fn locate(offsets: &[usize], global: usize) -> (usize, usize) {
    let g = offsets.partition_point(|&o| o <= global) - 1;
    (g, global - offsets[g])
}

/// Applies the scenario's data changes and builds per-network constraints
/// for its kind and mode.
pub fn apply_scenario(data: &[ObservedNetwork], sc: &Scenario, rng: &mut StreamRng) -> Result<AppliedScenario> {
    sc.validate()?;
    let mut networks = data.to_vec();
    let mut offsets = vec![0];
    for o in data {
        offsets.push(offsets.last().unwrap() + o.state.n());
    }
    let total = *offsets.last().unwrap();
    let freeze = matches!(sc.mode, Mode::FixedNetwork | Mode::PeOff);
    let mut constraints: Vec<Constraints> = data
        .iter()
        .map(|_| Constraints {
            freeze_links: freeze,
            action_clamp: Vec::new(),
        })
        .collect();
    let mut out = AppliedScenario {
        networks: Vec::new(),
        constraints: Vec::new(),
        swapped_pairs: 0,
        treated: Vec::new(),
        notes: Vec::new(),
    };
    let check = |set: &[usize]| -> Result<()> {
        if let Some(&v) = set.iter().find(|&&v| v >= total) {
            return Err(Error::config(format!("node {v} out of range ({total} nodes)")));
        }
        Ok(())
    };
    match &sc.kind {
        ScenarioKind::PriceDelta { cents } => {
            for o in &mut networks {
                for node in o.covariates.nodes_mut() {
                    node.price += cents;
                    if !(node.price > 0.0) {
                        return Err(Error::config(format!("price change of {cents} makes a price nonpositive")));
                    }
                }
            }
        }
        ScenarioKind::Swap { group_a, group_b, fraction } => {
            check(group_a)?;
            check(group_b)?;
            if group_a.iter().any(|v| group_b.contains(v)) {
                return Err(Error::config("swap groups overlap"));
            }
            let want = fraction * group_a.len().min(group_b.len()) as f64;
            let m = want.floor() as usize;
            if want != m as f64 {
                out.notes.push(format!("swap count {want} rounded down to {m}"));
            }
            let pick_a = sample(rng, group_a.len(), m).into_vec();
            let pick_b = sample(rng, group_b.len(), m).into_vec();
            for (&ia, &ib) in pick_a.iter().zip(&pick_b) {
                let (ga, la) = locate(&offsets, group_a[ia]);
                let (gb, lb) = locate(&offsets, group_b[ib]);
                let a = networks[ga].covariates.get(la).clone();
                let b = networks[gb].covariates.get(lb).clone();
                networks[ga].covariates.nodes_mut()[la] = b;
                networks[gb].covariates.nodes_mut()[lb] = a;
            }
            out.swapped_pairs = m;
        }
        ScenarioKind::Clamp { treated, forced_action } => {
            let mut set = match treated {
                Treated::Nodes(v) => {
                    check(v)?;
                    v.clone()
                }
                Treated::Fraction(f) => {
                    let want = f * total as f64;
                    let m = want.floor() as usize;
                    if want != m as f64 {
                        out.notes.push(format!("treated count {want} rounded down to {m}"));
                    }
                    sample(rng, total, m).into_vec()
                }
            };
            set.sort_unstable();
            set.dedup();
            for &v in &set {
                let (g, i) = locate(&offsets, v);
                let c = &mut constraints[g];
                if c.action_clamp.is_empty() {
                    c.action_clamp = vec![None; data[g].state.n()];
                }
                c.action_clamp[i] = Some(*forced_action);
            }
            out.treated = set;
        }
    }
    out.networks = networks;
    out.constraints = constraints;
    Ok(out)
}

/// Mean of each metric over replications with its Monte Carlo error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// `None` with a single replication.
    pub se: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaSummary {
    pub mean: f64,
    pub se: Option<f64>,
    pub ci95: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplicationResult {
    pub baseline: BTreeMap<String, f64>,
    pub scenario: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioEcho {
    pub kind: ScenarioKind,
    pub mode: Mode,
    pub replications: usize,
    pub burn: Option<u64>,
    pub thin: Option<u64>,
    pub samples: usize,
    pub k_support: Vec<usize>,
    pub k_probs: Vec<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationReport {
    pub scenario: ScenarioEcho,
    pub baseline: BTreeMap<String, MetricSummary>,
    pub result: BTreeMap<String, MetricSummary>,
    /// Scenario minus baseline, paired by replication.
    pub deltas: BTreeMap<String, DeltaSummary>,
    pub replications: Vec<ReplicationResult>,
    /// Sampled states checked against the freeze and clamp contracts.
    pub constraint_checks: u64,
    pub constraint_violations: u64,
    pub swapped_pairs: usize,
    pub treated: usize,
    pub notes: Vec<String>,
}

#[derive(Default)]
struct Accumulator {
    sums: BTreeMap<&'static str, (f64, usize)>,
}

impl Accumulator {
    fn add(&mut self, name: &'static str, v: f64) {
        let e = self.sums.entry(name).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }

    fn finish(self) -> BTreeMap<String, f64> {
        self.sums.into_iter().map(|(k, (s, c))| (k.to_string(), s / c as f64)).collect()
    }
}

fn sample_metrics(states: &[NetworkState], networks: &[ObservedNetwork], acc: &mut Accumulator) -> Result<()> {
    let mut pooled = NetworkStats::default();
    let mut fsi: [(f64, usize); 4] = [(0.0, 0); 4];
    for (s, o) in states.iter().zip(networks) {
        pooled.merge(&network_stats(s, &o.covariates)?);
        let x = o.covariates.nodes();
        let groupings: [Vec<usize>; 4] = [
            x.iter().map(|v| v.sex as usize).collect(),
            x.iter().map(|v| v.grade as usize).collect(),
            x.iter().map(|v| v.race as usize).collect(),
            (0..s.n()).map(|i| s.action(i) as usize).collect(),
        ];
        for (slot, g) in fsi.iter_mut().zip(&groupings) {
            if let Ok(v) = freeman_segregation_index(s, g, FsiBaseline::GroupSize) {
                slot.0 += v;
                slot.1 += 1;
            }
        }
    }
    acc.add("prevalence", pooled.prevalence());
    acc.add("density", pooled.density());
    acc.add("reciprocity", pooled.reciprocity());
    acc.add("avg_degree", pooled.average_degree());
    acc.add("max_in_degree", pooled.max_in_degree as f64);
    acc.add("max_out_degree", pooled.max_out_degree as f64);
    acc.add("max_reciprocal_degree", pooled.max_reciprocal_degree as f64);
    acc.add("triangles_per_node", pooled.triangles_per_node());
    let shares = pooled.mixing.row_shares();
    acc.add("mixing_nonsmoker_to_smoker", shares[0][1]);
    acc.add("mixing_smoker_to_smoker", shares[1][1]);
    for (name, (s, c)) in ["fsi_sex", "fsi_grade", "fsi_race", "fsi_smoking"].into_iter().zip(fsi) {
        if c > 0 {
            acc.add(name, s / c as f64);
        }
    }
    Ok(())
}

/// The report metrics of one joint state of `networks` (pooled counts,
/// segregation indices averaged over networks where they are defined).
pub fn network_metrics(states: &[NetworkState], networks: &[ObservedNetwork]) -> Result<BTreeMap<String, f64>> {
    if states.len() != networks.len() {
        return Err(Error::invalid("one state per network expected"));
    }
    let mut acc = Accumulator::default();
    sample_metrics(states, networks, &mut acc)?;
    Ok(acc.finish())
}

struct Arm<'a> {
    networks: &'a [ObservedNetwork],
    constraints: &'a [Constraints],
}

/// Runs one replication of one arm; returns metrics, checks and violations.
fn run_arm(model: &ModelParams, arm: &Arm, sc: &Scenario, meet: &MeetingConfig, rep: u32) -> Result<(BTreeMap<String, f64>, u64, u64)> {
    let mut per_sample: Vec<Vec<NetworkState>> = vec![Vec::with_capacity(arm.networks.len()); sc.samples];
    let (mut checks, mut violations) = (0u64, 0u64);
    for (g, (o, cons)) in arm.networks.iter().zip(arm.constraints).enumerate() {
        let n = o.state.n();
        let mut chain = Chain::new(&o.covariates, model, meet, o.state.clone(), stream(sc.seed, g as u32 + 2, rep))?
            .with_constraints(cons.clone())?;
        if sc.mode == Mode::PeOff {
            let mut ev = PotentialEvaluator::new(&o.covariates, model);
            let offsets: Vec<f64> = (0..n).map(|i| ev.action_externality(&o.state, i)).collect();
            ev.disable_action_externalities();
            for (i, v) in offsets.into_iter().enumerate() {
                ev.add_action_offset(i, v);
            }
            chain = chain.with_evaluator(ev);
        }
        let mut reference = o.state.clone();
        for (i, c) in cons.action_clamp.iter().enumerate() {
            if let Some(a) = c {
                reference.set_action(i, *a);
            }
        }
        let burn = sc.burn.unwrap_or(50 * (n * n) as u64);
        let thin = sc.thin.unwrap_or((n * n) as u64);
        for _ in 0..burn {
            chain.step_logit();
        }
        for slot in per_sample.iter_mut() {
            for _ in 0..thin {
                chain.step_logit();
            }
            checks += 1;
            violations += (!cons.respected_by(chain.state(), &reference)) as u64;
            slot.push(chain.state().clone());
        }
    }
    let mut acc = Accumulator::default();
    for states in &per_sample {
        sample_metrics(states, arm.networks, &mut acc)?;
    }
    Ok((acc.finish(), checks, violations))
}

fn mean_se(values: &[f64]) -> (f64, Option<f64>) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, Some((var / m).sqrt()))
}

/// Runs every replication of the scenario against the null scenario in the
/// same mode, with common random numbers: both arms of replication `r` on
/// network `g` share one random stream.
pub fn simulate_policy(model: &ModelParams, data: &[ObservedNetwork], sc: &Scenario) -> Result<SimulationReport> {
    if data.is_empty() {
        return Err(Error::config("no networks to simulate"));
    }
    sc.validate()?;
    let k_dist = match &sc.k_dist {
        Some(k) => k.clone(),
        None => KDistribution::fixed(2)?,
    };
    let meet = MeetingConfig::uniform(k_dist.clone());
    let null = Scenario {
        kind: ScenarioKind::PriceDelta { cents: 0.0 },
        ..sc.clone()
    };
    let runs = (0..sc.replications as u32)
        .into_par_iter()
        .map(|rep| {
            let base = apply_scenario(data, &null, &mut stream(sc.seed, 1, rep))?;
            let applied = apply_scenario(data, sc, &mut stream(sc.seed, 1, rep))?;
            let b = run_arm(model, &Arm { networks: &base.networks, constraints: &base.constraints }, sc, &meet, rep)?;
            let s = run_arm(
                model,
                &Arm {
                    networks: &applied.networks,
                    constraints: &applied.constraints,
                },
                sc,
                &meet,
                rep,
            )?;
            Ok((b, s, applied))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut replications = Vec::with_capacity(runs.len());
    let (mut checks, mut violations) = (0, 0);
    for ((b, bc, bv), (s, scc, sv), _) in &runs {
        checks += bc + scc;
        violations += bv + sv;
        replications.push(ReplicationResult {
            baseline: b.clone(),
            scenario: s.clone(),
        });
    }
    let summarize = |pick: &dyn Fn(&ReplicationResult) -> &BTreeMap<String, f64>| {
        let mut out = BTreeMap::new();
        for key in pick(&replications[0]).keys() {
            let vals: Vec<f64> = replications.iter().filter_map(|r| pick(r).get(key).copied()).collect();
            let (mean, se) = mean_se(&vals);
            out.insert(key.clone(), MetricSummary { mean, se });
        }
        out
    };
    let baseline = summarize(&|r| &r.baseline);
    let result = summarize(&|r| &r.scenario);
    let mut deltas = BTreeMap::new();
    for key in baseline.keys() {
        let vals: Vec<f64> = replications
            .iter()
            .filter_map(|r| Some(r.scenario.get(key)? - r.baseline.get(key)?))
            .collect();
        if vals.is_empty() {
            continue;
        }
        let (mean, se) = mean_se(&vals);
        deltas.insert(
            key.clone(),
            DeltaSummary {
                mean,
                se,
                ci95: se.map(|e| (mean - 1.96 * e, mean + 1.96 * e)),
            },
        );
    }
    let first = &runs[0].2;
    Ok(SimulationReport {
        scenario: ScenarioEcho {
            kind: sc.kind.clone(),
            mode: sc.mode,
            replications: sc.replications,
            burn: sc.burn,
            thin: sc.thin,
            samples: sc.samples,
            k_support: k_dist.support().to_vec(),
            k_probs: k_dist.probs().to_vec(),
            seed: sc.seed,
        },
        baseline,
        result,
        deltas,
        replications,
        constraint_checks: checks,
        constraint_violations: violations,
        swapped_pairs: first.swapped_pairs,
        treated: first.treated.len(),
        notes: first.notes.clone(),
    })
}
