use rand::Rng;
use rayon::prelude::*;

use super::{ObservedNetwork, ObservedSample};
use crate::dynamics::{Chain, KDistribution, MeetingConfig};
use crate::error::{Error, Result};
use crate::model::{CovariateTable, ModelParams, NetworkState, NodeCovariates, Race, Sex};
use crate::rng::stream;

/// Random students for school `school_id`: grades 7 to 12, 30% smoking
/// households, prices uniform on 50 to 300 cents (rounded to the cent).
pub fn synthetic_covariates<R: Rng + ?Sized>(n: usize, school_id: u32, rng: &mut R) -> Result<CovariateTable> {
    const RACES: [Race; 5] = [Race::White, Race::Black, Race::Hispanic, Race::Asian, Race::Other];
    let nodes = (0..n)
        .map(|_| NodeCovariates {
            sex: if rng.random_bool(0.5) { Sex::Male } else { Sex::Female },
            grade: rng.random_range(7..=12),
            race: RACES[rng.random_range(0..RACES.len())],
            hh_smokes: rng.random_bool(0.3),
            mom_edu: rng.random_bool(0.5),
            price: (rng.random_range(50.0..300.0f64) * 100.0).round() / 100.0,
            school_id,
        })
        .collect();
    CovariateTable::new(nodes)
}

/// `500 n^2` logit steps.
pub fn default_burn_steps(n: usize) -> u64 {
    500 * (n * n) as u64
}

/// Draws one network per covariate table from a long perturbed chain started
/// at the empty network. Table `g` uses stream `g` of `seed`; `burn_steps`
/// defaults to [`default_burn_steps`] and `k_dist` to `k = 2`.
pub fn simulate_networks(
    p: &ModelParams,
    tables: &[CovariateTable],
    burn_steps: Option<u64>,
    k_dist: Option<&KDistribution>,
    seed: u64,
) -> Result<ObservedSample> {
    if tables.is_empty() {
        return Err(Error::config("no covariate tables to simulate"));
    }
    let networks = tables
        .par_iter()
        .enumerate()
        .map(|(g, x)| {
            let n = x.len();
            let meet = MeetingConfig::uniform(match k_dist {
                Some(k) => k.clone(),
                None => KDistribution::fixed(2)?,
            });
            let mut chain = Chain::new(x, p, &meet, NetworkState::empty(n)?, stream(seed, 0, g as u32))?;
            for _ in 0..burn_steps.unwrap_or_else(|| default_burn_steps(n)) {
                chain.step_logit();
            }
            ObservedNetwork::new(chain.into_state(), x.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ObservedSample { networks })
}
