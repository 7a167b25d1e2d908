use serde::Serialize;

use super::PosteriorDraws;
use crate::error::{Error, Result};
use crate::model::{ModelParams, NodeCovariates, PairCovariate, Statistic};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CredibleInterval {
    pub level: f64,
    pub lo: f64,
    pub hi: f64,
    pub excludes_zero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub intervals: Vec<CredibleInterval>,
}

/// Narrowest window of sorted draws spanning `round(N * level)` gaps; ties
/// go to the leftmost window.
pub fn shortest_interval(draws: &[f64], level: f64) -> Result<(f64, f64)> {
    if draws.is_empty() {
        return Err(Error::invalid("no draws"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("credible level {level} outside (0, 1)")));
    }
    if draws.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite draw".into()));
    }
    let mut x = draws.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    if n == 1 {
        return Ok((x[0], x[0]));
    }
    let gap = ((n as f64 * level).round() as usize).clamp(1, n - 1);
    let mut best = 0;
    for i in 1..n - gap {
        if x[i + gap] - x[i] < x[best + gap] - x[best] {
            best = i;
        }
    }
    Ok((x[best], x[best + gap]))
}

/// Mean, sd and shortest credible intervals of every coefficient.
pub fn posterior_summary(draws: &PosteriorDraws, levels: &[f64]) -> Result<Vec<CoefficientSummary>> {
    if draws.is_empty() {
        return Err(Error::invalid("no posterior draws"));
    }
    let m = draws.len() as f64;
    draws
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col = draws.column(j);
            let mean = col.iter().sum::<f64>() / m;
            let sd = if col.len() > 1 {
                (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
            } else {
                0.0
            };
            let intervals = levels
                .iter()
                .map(|&level| {
                    let (lo, hi) = shortest_interval(&col, level)?;
                    Ok(CredibleInterval {
                        level,
                        lo,
                        hi,
                        excludes_zero: lo > 0.0 || hi < 0.0,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(CoefficientSummary {
                name: name.clone(),
                mean,
                sd,
                intervals,
            })
        })
        .collect()
}

pub fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Marginal effect of one coefficient on its equation's choice probability.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportedEffect {
    pub name: String,
    /// `logistic(v0 + coef) - logistic(v0)`.
    pub mp: f64,
    /// `mp` relative to the baseline probability.
    pub mp_pct: f64,
}

/// Coefficients on the probability scale at a reference node.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportedScale {
    /// `logistic(v0)`, `v0` the action utility of the reference node.
    pub action_baseline: f64,
    /// `logistic(w0)`, `w0` the link utility between two reference nodes.
    pub link_baseline: f64,
    pub effects: Vec<ReportedEffect>,
}

fn is_link_equation(s: Statistic) -> bool {
    matches!(
        s,
        Statistic::LinkBaseline(_)
            | Statistic::Reciprocity
            | Statistic::DegreeSquared
            | Statistic::CyclicTriangle
            | Statistic::SymmetricTriangle
    )
}

/// Baseline and marginal probabilities. Action-equation effects are measured
/// against the action baseline, link-equation effects against the link
/// baseline; the constant terms are folded into the baselines.
pub fn report_transforms(p: &ModelParams, reference: &NodeCovariates) -> ReportedScale {
    let mut v0 = 0.0;
    let mut w0 = 0.0;
    for (&s, &th) in p.stats.iter().zip(&p.theta) {
        match s {
            Statistic::ActionBaseline(c) => v0 += th * c.eval(reference),
            Statistic::LinkBaseline(c) => w0 += th * c.eval(reference, reference),
            _ => {}
        }
    }
    let (action_baseline, link_baseline) = (logistic(v0), logistic(w0));
    let effects = p
        .stats
        .iter()
        .zip(&p.theta)
        .filter(|(s, _)| {
            !matches!(
                s,
                Statistic::ActionBaseline(crate::model::NodeCovariate::Constant) | Statistic::LinkBaseline(PairCovariate::Constant)
            )
        })
        .map(|(&s, &th)| {
            let (base, v) = if is_link_equation(s) { (link_baseline, w0) } else { (action_baseline, v0) };
            let mp = logistic(v + th) - base;
            ReportedEffect {
                name: s.to_string(),
                mp,
                mp_pct: mp / base,
            }
        })
        .collect();
    ReportedScale {
        action_baseline,
        link_baseline,
        effects,
    }
}
