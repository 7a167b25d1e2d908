//! Network states, covariates, sufficient statistics and the potential.

mod covariates;
mod potential;
mod state;
mod stats;

pub use covariates::{CovariateTable, NodeCovariate, NodeCovariates, PairCovariate, Race, Sex};
pub use potential::{
    block_potential_diff, delta_action, delta_link, payoff, potential, Block, PotentialEvaluator,
};
pub use state::{all_states, bit_cell, cell_bit, NetworkState};
pub use stats::{statistic_value, sufficient_stats, ModelParams, Statistic, StatisticSet};
pub(crate) use stats::check_dims;
