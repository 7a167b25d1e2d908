//! Command-line surface. Every JSON report carries the tool version and the
//! full set of arguments it was produced from; stochastic commands require
//! `--seed`, and a repeated invocation rewrites identical bytes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::counterfactual::{network_metrics, network_stats, simulate_policy, NetworkStats, SimulationReport};
use crate::dynamics::{
    analytic_spectrum, batch_means, exact_stationary, reversible_spectrum, run_chain, second_largest_modulus,
    stationary_by_linear_solve, stationary_by_power, transition_matrix, tv_distance, walsh_spectrum, ChainConfig,
    KDistribution, MeetingConfig, MAX_DENSE_N,
};
use crate::equilibria::{argmax_potential, enumerate_k_stable, is_k_stable, is_local_mode, MAX_ENUM_N};
use crate::error::{Error, Result};
use crate::estimation::{
    double_mh, posterior_summary, report_transforms, simulate_networks, synthetic_covariates, CoefficientSummary,
    ObservedNetwork, ObservedSample, Prior, ReportedScale, SamplerConfig,
};
use crate::io::{load_data, read_prior, read_scenario, read_theta, write_data, write_json, write_table};
use crate::model::{all_states, potential, CovariateTable, ModelParams, NetworkState, NodeCovariates, StatisticSet};
use crate::rng::stream;

#[derive(Debug, Parser)]
#[command(name = "netgame", version, about = "Simulate, analyse and estimate network formation games with behaviour")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the k-player dynamic and write thinned states and a summary.
    Simulate(SimulateArgs),
    /// Exact stationary distributions for small networks (n <= 4).
    Exact(ExactArgs),
    /// Enumerate k-player Nash stable networks (n <= 4).
    Enumerate(EnumerateArgs),
    /// Analytic and numerical second eigenvalue of the dynamic.
    Spectrum(SpectrumArgs),
    /// Posterior draws of theta by double Metropolis-Hastings.
    Estimate(EstimateArgs),
    /// Simulate a policy scenario against the baseline.
    Counterfactual(CounterfactualArgs),
    /// Descriptive statistics of a data set.
    Netstats(NetstatsArgs),
    /// Draw synthetic networks from the model and write data files.
    GenSynthetic(GenSyntheticArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Nodes CSV (`id,school,sex,grade,race,hh_smokes,mom_edu,price,smokes`).
    #[arg(long)]
    pub nodes: PathBuf,
    /// Edges CSV (`src,dst`).
    #[arg(long)]
    pub edges: PathBuf,
}

/// Where the networks come from: a data set, or `n` identical default nodes.
#[derive(Debug, Clone, Args, Serialize)]
pub struct NetworkSource {
    /// Network size; every node gets the default covariates.
    #[arg(long, required_unless_present = "nodes", conflicts_with = "nodes")]
    pub n: Option<usize>,
    #[arg(long, requires = "edges")]
    pub nodes: Option<PathBuf>,
    #[arg(long, requires = "nodes")]
    pub edges: Option<PathBuf>,
}

impl NetworkSource {
    fn networks(&self) -> Result<Vec<ObservedNetwork>> {
        match (self.n, &self.nodes, &self.edges) {
            (Some(n), _, _) => Ok(vec![ObservedNetwork::new(NetworkState::empty(n)?, CovariateTable::uniform(n))?]),
            (None, Some(nodes), Some(edges)) => Ok(load_data(nodes, edges)?.sample.networks),
            _ => Err(Error::config("give --n or both --nodes and --edges")),
        }
    }

    fn single(&self) -> Result<ObservedNetwork> {
        let mut v = self.networks()?;
        if v.len() != 1 {
            return Err(Error::config(format!("expected a single network, the data has {}", v.len())));
        }
        Ok(v.remove(0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    Empty,
    Observed,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Coefficients, one `statistic = value` per line.
    #[arg(long)]
    pub theta_file: PathBuf,
    #[command(flatten)]
    pub source: NetworkSource,
    /// Meeting size; repeat for a uniform mixture (default 2).
    #[arg(long = "k")]
    pub k: Vec<usize>,
    #[arg(long)]
    pub steps: u64,
    #[arg(long, default_value_t = 1)]
    pub thin: u64,
    #[arg(long)]
    pub seed: u64,
    /// Independent chains per network.
    #[arg(long, default_value_t = 1)]
    pub chains: u32,
    /// Deterministic best responses, stopping once absorbed.
    #[arg(long)]
    pub best_response: bool,
    /// Starting network (default: observed for data, empty otherwise).
    #[arg(long, value_enum)]
    pub start: Option<Start>,
    /// Output directory for `states.csv` and `report.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExactArgs {
    #[arg(long)]
    pub theta_file: PathBuf,
    #[command(flatten)]
    pub source: NetworkSource,
    /// Meeting sizes to solve for, one pure-k dynamic each (default 2).
    #[arg(long = "k")]
    pub k: Vec<usize>,
    /// Most probable states listed in the report.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub theta_file: PathBuf,
    #[command(flatten)]
    pub source: NetworkSource,
    /// Coalition sizes (default 2 to n).
    #[arg(long = "k")]
    pub k: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub n: usize,
    /// Meeting size; repeat for a uniform mixture (default 2).
    #[arg(long = "k")]
    pub k: Vec<usize>,
    /// Non-constant potential (n <= 3): reports the numerical spectrum only.
    #[arg(long)]
    pub theta_file: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Normal prior, one `statistic = mean, sd` per line.
    #[arg(long, conflicts_with = "stats", required_unless_present = "stats")]
    pub prior_file: Option<PathBuf>,
    /// Comma-separated statistics, with a weak N(0, 2.5^2) prior.
    #[arg(long, value_delimiter = ',')]
    pub stats: Vec<String>,
    /// Outer iterations T.
    #[arg(long)]
    pub iters: usize,
    /// Inner steps R per network and iteration.
    #[arg(long)]
    pub inner: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.2)]
    pub burn_frac: f64,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    /// Initial random-walk standard deviation of every coefficient.
    #[arg(long, default_value_t = 0.1)]
    pub scale: f64,
    /// Keep the proposal scales fixed during burn-in.
    #[arg(long)]
    pub no_tune: bool,
    /// Inner meeting sizes, drawn uniformly (default 2 to min(n, 12)).
    #[arg(long = "k")]
    pub k: Vec<usize>,
    /// Output directory for `draws.csv` and `summary.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CounterfactualArgs {
    #[arg(long)]
    pub theta_file: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Scenario file (`key = value` lines).
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NetstatsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenSyntheticArgs {
    #[arg(long)]
    pub theta_file: PathBuf,
    /// Number of schools.
    #[arg(long)]
    pub networks: usize,
    /// Students per school.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Logit steps per network (default 500 n^2).
    #[arg(long)]
    pub burn: Option<u64>,
    /// Meeting size; repeat for a uniform mixture (default 2).
    #[arg(long = "k")]
    pub k: Vec<usize>,
    /// Output directory for `nodes.csv`, `edges.csv` and `config.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Report<'a, C, R> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a C,
    result: R,
}

fn emit<C: Serialize, R: Serialize>(command: &'static str, config: &C, result: R, out: Option<&Path>) -> Result<()> {
    let report = Report {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        result,
    };
    match out {
        Some(path) => write_json(path, &report),
        None => {
            let mut text = serde_json::to_string_pretty(&report)?;
            text.push('\n');
            match std::io::stdout().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
                _ => Ok(()),
            }
        }
    }
}

fn uniform_k(ks: &[usize], default: usize) -> Result<KDistribution> {
    if ks.is_empty() {
        return KDistribution::fixed(default);
    }
    let w = 1.0 / ks.len() as f64;
    KDistribution::new(ks.iter().map(|&k| (k, w)).collect())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Exact(a) => exact(&a),
        Command::Enumerate(a) => enumerate(&a),
        Command::Spectrum(a) => spectrum(&a),
        Command::Estimate(a) => estimate(&a),
        Command::Counterfactual(a) => counterfactual(&a),
        Command::Netstats(a) => netstats(&a),
        Command::GenSynthetic(a) => gen_synthetic(&a),
    }
}

#[derive(Serialize)]
struct ChainSummary {
    chain: u32,
    network: usize,
    n: usize,
    steps_run: u64,
    moves: u64,
    absorbed_at: Option<u64>,
    samples: usize,
    final_potential: f64,
    /// Whether the final state is stable for the largest meeting size.
    final_stable: Option<bool>,
    stat_means: BTreeMap<String, f64>,
    /// Batch-means standard errors (10 batches), given at least 20 samples.
    stat_se: Option<BTreeMap<String, f64>>,
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let p = read_theta(&a.theta_file)?;
    let networks = a.source.networks()?;
    let meet = MeetingConfig::uniform(uniform_k(&a.k, 2)?);
    let start = a.start.unwrap_or(if a.source.n.is_some() { Start::Empty } else { Start::Observed });
    let g_count = networks.len();
    let jobs: Vec<(u32, usize)> = (0..a.chains).flat_map(|c| (0..g_count).map(move |g| (c, g))).collect();
    let runs = jobs
        .par_iter()
        .map(|&(c, g)| {
            let o = &networks[g];
            let s0 = match start {
                Start::Empty => NetworkState::empty(o.state.n())?,
                Start::Observed => o.state.clone(),
            };
            let mut cfg = ChainConfig::new(a.steps, a.thin, a.seed, s0)?;
            cfg.chain = c * g_count as u32 + g as u32;
            run_chain(&cfg, &meet, &o.covariates, &p, !a.best_response)
        })
        .collect::<Result<Vec<_>>>()?;
    let names = p.stats.names();
    let mut header: Vec<String> = ["chain", "network", "step", "potential"].map(String::from).to_vec();
    header.extend(names.iter().cloned());
    header.push("state".into());
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (&(c, g), out) in jobs.iter().zip(&runs) {
        for (((s, t), w), phi) in out.samples.iter().zip(&out.sample_steps).zip(&out.stats).zip(&out.potentials) {
            let mut r = vec![c.to_string(), g.to_string(), t.to_string(), phi.to_string()];
            r.extend(w.iter().map(f64::to_string));
            r.push(s.to_string());
            rows.push(r);
        }
        let m = out.stats.len();
        let mut means = BTreeMap::new();
        let mut ses = BTreeMap::new();
        for (j, name) in names.iter().enumerate() {
            let col: Vec<f64> = out.stats.iter().map(|w| w[j]).collect();
            means.insert(name.clone(), if m == 0 { 0.0 } else { col.iter().sum::<f64>() / m as f64 });
            if m >= 20 {
                ses.insert(name.clone(), batch_means(&col, 10)?.1);
            }
        }
        let x = &networks[g].covariates;
        summaries.push(ChainSummary {
            chain: c,
            network: g,
            n: out.final_state.n(),
            steps_run: out.steps_run,
            moves: out.moves,
            absorbed_at: out.absorbed_at,
            samples: m,
            final_potential: potential(&out.final_state, x, &p)?,
            final_stable: if a.best_response {
                Some(is_k_stable(&out.final_state, meet.k_dist.max_k(), x, &p)?)
            } else {
                None
            },
            stat_means: means,
            stat_se: (m >= 20).then_some(ses),
        });
    }
    write_table(&a.out.join("states.csv"), &header, rows)?;
    emit("simulate", a, &summaries, Some(&a.out.join("report.json")))?;
    println!("wrote {} chains to {}", summaries.len(), a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct KSolution {
    k: usize,
    /// TV between the solved stationary law and the closed form.
    tv_to_closed_form: f64,
    /// `max |pi T - pi|` for the closed form.
    closed_form_residual: f64,
}

#[derive(Serialize)]
struct PairwiseTv {
    k_a: usize,
    k_b: usize,
    tv: f64,
}

#[derive(Serialize)]
struct RankedState {
    index: u64,
    state: String,
    potential: f64,
    probability: f64,
}

#[derive(Serialize)]
struct ExactResult {
    n: usize,
    beta: f64,
    states: usize,
    solutions: Vec<KSolution>,
    pairwise: Vec<PairwiseTv>,
    max_tv: f64,
    top_states: Vec<RankedState>,
}

fn exact(a: &ExactArgs) -> Result<()> {
    let p = read_theta(&a.theta_file)?;
    let o = a.source.single()?;
    let n = o.state.n();
    let x = &o.covariates;
    if n > MAX_ENUM_N {
        return Err(Error::Capacity { n, limit: MAX_ENUM_N });
    }
    let ks = if a.k.is_empty() { vec![2] } else { a.k.clone() };
    let closed = exact_stationary(n, x, &p)?;
    let mut solved = Vec::new();
    let mut solutions = Vec::new();
    for &k in &ks {
        let t = transition_matrix(n, x, &p, &MeetingConfig::fixed_k(k)?)?;
        let pi = if n <= MAX_DENSE_N {
            stationary_by_linear_solve(&t)?
        } else {
            stationary_by_power(&t, 1e-15, 1_000_000)?
        };
        let moved = t.left_multiply(&closed);
        let residual = moved.iter().zip(&closed).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        solutions.push(KSolution {
            k,
            tv_to_closed_form: tv_distance(&pi, &closed),
            closed_form_residual: residual,
        });
        solved.push(pi);
    }
    let mut pairwise = Vec::new();
    for i in 0..ks.len() {
        for j in i + 1..ks.len() {
            pairwise.push(PairwiseTv {
                k_a: ks[i],
                k_b: ks[j],
                tv: tv_distance(&solved[i], &solved[j]),
            });
        }
    }
    let max_tv = pairwise
        .iter()
        .map(|q| q.tv)
        .chain(solutions.iter().map(|s| s.tv_to_closed_form))
        .fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..closed.len()).collect();
    order.sort_by(|&u, &v| closed[v].total_cmp(&closed[u]).then(u.cmp(&v)));
    let top_states = order
        .into_iter()
        .take(a.top)
        .map(|idx| {
            let s = NetworkState::from_index(n, idx as u64)?;
            Ok(RankedState {
                index: idx as u64,
                state: s.to_string(),
                potential: potential(&s, x, &p)?,
                probability: closed[idx],
            })
        })
        .collect::<Result<_>>()?;
    let result = ExactResult {
        n,
        beta: p.beta,
        states: closed.len(),
        solutions,
        pairwise,
        max_tv,
        top_states,
    };
    if a.out.is_some() {
        eprintln!("max TV across k and the closed form: {:e}", result.max_tv);
    }
    emit("exact", a, result, a.out.as_deref())
}

#[derive(Serialize)]
struct StableEntry {
    index: u64,
    state: String,
    potential: f64,
}

#[derive(Serialize)]
struct StableSetReport {
    k: usize,
    count: usize,
    states: Vec<StableEntry>,
}

#[derive(Serialize)]
struct EnumerateResult {
    n: usize,
    sets: Vec<StableSetReport>,
    /// Each listed set contains the next (larger k).
    nested: bool,
    argmax: Vec<StableEntry>,
    local_modes: usize,
}

fn enumerate(a: &EnumerateArgs) -> Result<()> {
    let p = read_theta(&a.theta_file)?;
    let o = a.source.single()?;
    let n = o.state.n();
    let x = &o.covariates;
    if n > MAX_ENUM_N {
        return Err(Error::Capacity { n, limit: MAX_ENUM_N });
    }
    let ks = if a.k.is_empty() { (2..=n).collect() } else { a.k.clone() };
    let entry = |s: &NetworkState| -> Result<StableEntry> {
        Ok(StableEntry {
            index: s.index(),
            state: s.to_string(),
            potential: potential(s, x, &p)?,
        })
    };
    let sets = ks
        .iter()
        .map(|&k| enumerate_k_stable(k, n, x, &p))
        .collect::<Result<Vec<_>>>()?;
    let mut nested = true;
    for w in sets.windows(2) {
        if w[0].k < w[1].k {
            nested &= w[1].is_subset_of(&w[0]);
        } else {
            nested &= w[0].is_subset_of(&w[1]);
        }
    }
    let mut local_modes = 0;
    for s in all_states(n) {
        local_modes += is_local_mode(&s, x, &p)? as usize;
    }
    let result = EnumerateResult {
        n,
        sets: sets
            .iter()
            .map(|set| {
                Ok(StableSetReport {
                    k: set.k,
                    count: set.len(),
                    states: set.states.iter().map(entry).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?,
        nested,
        argmax: argmax_potential(n, x, &p)?.iter().map(entry).collect::<Result<_>>()?,
        local_modes,
    };
    emit("enumerate", a, result, a.out.as_deref())
}

/// `p/q` with the smallest `q <= 100000` reproducing `v` to 1e-12.
fn as_fraction(v: f64) -> Option<(i64, i64)> {
    (1..=100_000i64).find_map(|q| {
        let p = (v * q as f64).round();
        ((p / q as f64 - v).abs() < 1e-12).then_some((p as i64, q))
    })
}

#[derive(Serialize)]
struct SpectrumResult {
    n: usize,
    k_support: Vec<usize>,
    k_probs: Vec<f64>,
    analytic_second: Option<f64>,
    analytic_fraction: Option<String>,
    numerical_second: f64,
    /// Largest eigenvalue-wise deviation between the two sorted spectra.
    max_deviation: Option<f64>,
    matches: Option<bool>,
}

fn spectrum(a: &SpectrumArgs) -> Result<()> {
    let n = a.n;
    if n > MAX_ENUM_N {
        return Err(Error::Capacity { n, limit: MAX_ENUM_N });
    }
    let kd = uniform_k(&a.k, 2)?;
    let meet = MeetingConfig::uniform(kd.clone());
    let x = CovariateTable::uniform(n);
    let result = match &a.theta_file {
        None => {
            let zero = ModelParams::new(StatisticSet::new(vec![])?, vec![])?;
            let analytic = analytic_spectrum(n, &kd)?;
            let numerical = walsh_spectrum(&transition_matrix(n, &x, &zero, &meet)?)?;
            let dev = analytic
                .iter()
                .zip(&numerical)
                .map(|(u, v)| (u - v).abs())
                .fold(0.0, f64::max);
            let second = analytic[1];
            SpectrumResult {
                n,
                k_support: kd.support().to_vec(),
                k_probs: kd.probs().to_vec(),
                analytic_second: Some(second),
                analytic_fraction: as_fraction(second).map(|(p, q)| format!("{p}/{q}")),
                numerical_second: numerical[1],
                max_deviation: Some(dev),
                matches: Some(dev <= 1e-10),
            }
        }
        Some(path) => {
            let p = read_theta(path)?;
            if n > MAX_DENSE_N {
                return Err(Error::Capacity { n, limit: MAX_DENSE_N });
            }
            let t = transition_matrix(n, &x, &p, &meet)?;
            let eigs = reversible_spectrum(&t, &exact_stationary(n, &x, &p)?)?;
            SpectrumResult {
                n,
                k_support: kd.support().to_vec(),
                k_probs: kd.probs().to_vec(),
                analytic_second: None,
                analytic_fraction: None,
                numerical_second: second_largest_modulus(&eigs)?,
                max_deviation: None,
                matches: None,
            }
        }
    };
    if let Some(v) = result.analytic_second {
        let frac = result.analytic_fraction.as_deref().map(|f| format!(" ({f})")).unwrap_or_default();
        println!("analytic second eigenvalue: {v}{frac}");
        println!("numerical second eigenvalue: {}", result.numerical_second);
        println!(
            "spectra {} (max deviation {:e})",
            if result.matches == Some(true) { "match" } else { "differ" },
            result.max_deviation.unwrap_or(f64::NAN)
        );
    } else {
        println!("numerical second-largest modulus: {}", result.numerical_second);
    }
    match &a.out {
        Some(path) => emit("spectrum", a, result, Some(path)),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct EstimateResult {
    networks: usize,
    draws: usize,
    coefficients: Vec<CoefficientSummary>,
    outer_acceptance: f64,
    inner_acceptance: Vec<f64>,
    final_scales: Vec<f64>,
    warnings: Vec<String>,
    /// Posterior means on the probability scale at a default student.
    probability_scale: ReportedScale,
}

fn estimate(a: &EstimateArgs) -> Result<()> {
    let data = load_data(&a.data.nodes, &a.data.edges)?;
    let (stats, prior) = match &a.prior_file {
        Some(path) => read_prior(path)?,
        None => {
            let set = StatisticSet::parse_names(&a.stats)?;
            let prior = Prior::weak(set.len());
            (set, prior)
        }
    };
    let mut cfg = SamplerConfig::new(stats.clone(), a.iters, a.inner, a.seed);
    cfg.burn_frac = a.burn_frac;
    cfg.thin = a.thin;
    cfg.scales = vec![a.scale; stats.len()];
    if a.no_tune {
        cfg.tuning = None;
    }
    if !a.k.is_empty() {
        cfg.k_dist = Some(uniform_k(&a.k, 2)?);
    }
    let draws = double_mh(&data.sample, &prior, &cfg)?;
    let coefficients = posterior_summary(&draws, &[0.9, 0.95, 0.99])?;
    let means = ModelParams::new(stats, draws.means())?;
    write_table(
        &a.out.join("draws.csv"),
        &draws.names,
        draws.draws.iter().map(|r| r.iter().map(f64::to_string).collect()),
    )?;
    for w in &draws.warnings {
        eprintln!("warning: {w}");
    }
    let result = EstimateResult {
        networks: data.sample.networks.len(),
        draws: draws.len(),
        coefficients,
        outer_acceptance: draws.outer_acceptance,
        inner_acceptance: draws.inner_acceptance.clone(),
        final_scales: draws.final_scales.clone(),
        warnings: draws.warnings.clone(),
        probability_scale: report_transforms(&means, &NodeCovariates::default()),
    };
    emit("estimate", a, result, Some(&a.out.join("summary.json")))?;
    println!(
        "{} draws, outer acceptance {:.3}; wrote {}",
        draws.len(),
        draws.outer_acceptance,
        a.out.display()
    );
    Ok(())
}

fn counterfactual(a: &CounterfactualArgs) -> Result<()> {
    let p = read_theta(&a.theta_file)?;
    let data = load_data(&a.data.nodes, &a.data.edges)?;
    let sc = read_scenario(&a.scenario, &data, a.seed)?;
    let report: SimulationReport = simulate_policy(&p, &data.sample.networks, &sc)?;
    if a.out.is_some() {
        if let Some(d) = report.deltas.get("prevalence") {
            eprintln!("prevalence change: {:+.6}", d.mean);
        }
    }
    emit("counterfactual", a, report, a.out.as_deref())
}

#[derive(Serialize)]
struct SchoolStats {
    school: u32,
    counts: NetworkStats,
    metrics: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct NetstatsResult {
    schools: Vec<SchoolStats>,
    pooled: BTreeMap<String, f64>,
}

fn netstats(a: &NetstatsArgs) -> Result<()> {
    let data = load_data(&a.data.nodes, &a.data.edges)?;
    let nets = &data.sample.networks;
    let schools = nets
        .iter()
        .zip(&data.schools)
        .map(|(o, &school)| {
            Ok(SchoolStats {
                school,
                counts: network_stats(&o.state, &o.covariates)?,
                metrics: network_metrics(std::slice::from_ref(&o.state), std::slice::from_ref(o))?,
            })
        })
        .collect::<Result<_>>()?;
    let states: Vec<NetworkState> = nets.iter().map(|o| o.state.clone()).collect();
    let result = NetstatsResult {
        schools,
        pooled: network_metrics(&states, nets)?,
    };
    emit("netstats", a, result, a.out.as_deref())
}

#[derive(Serialize)]
struct GenResult {
    networks: usize,
    nodes: usize,
    links: usize,
    smokers: usize,
}

fn gen_synthetic(a: &GenSyntheticArgs) -> Result<()> {
    if a.networks == 0 || a.n < 2 {
        return Err(Error::config("need at least one network of two or more students"));
    }
    let p = read_theta(&a.theta_file)?;
    let tables = (0..a.networks)
        .map(|g| synthetic_covariates(a.n, g as u32 + 1, &mut stream(a.seed, 1, g as u32)))
        .collect::<Result<Vec<_>>>()?;
    let kd = (!a.k.is_empty()).then(|| uniform_k(&a.k, 2)).transpose()?;
    let sample: ObservedSample = simulate_networks(&p, &tables, a.burn, kd.as_ref(), a.seed)?;
    write_data(&sample, None, &a.out.join("nodes.csv"), &a.out.join("edges.csv"))?;
    let result = GenResult {
        networks: sample.networks.len(),
        nodes: sample.networks.iter().map(|o| o.state.n()).sum(),
        links: sample.networks.iter().map(|o| o.state.link_count()).sum(),
        smokers: sample.networks.iter().map(|o| o.state.action_count()).sum(),
    };
    emit("gen-synthetic", a, &result, Some(&a.out.join("config.json")))?;
    println!(
        "wrote {} networks ({} nodes, {} links) to {}",
        result.networks,
        result.nodes,
        result.links,
        a.out.display()
    );
    Ok(())
}
