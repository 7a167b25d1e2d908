//! The k-player dynamic.
//!
//! Each period a chooser and `k - 1` partners meet; the chooser redraws her
//! action and her links to the partners. Perturbed updates draw the block
//! from a multinomial logit in the potential, unperturbed ones take a best
//! response. For `n <= 4` the exact kernel, its stationary law and (for a
//! constant potential) its spectrum are available.

mod chain;
mod meeting;
mod spectrum;
pub(crate) mod transition;

pub use chain::{batch_means, best_response_update, logit_update, run_chain, Chain, ChainConfig, ChainOutput, Constraints};
pub use meeting::{
    binomial, draw_meeting, uniform_meeting_probability, KDistribution, Meeting, MeetingConfig, MeetingLaw,
    MeetingSampler,
};
pub use spectrum::{
    analytic_spectrum, eigenfunction_value, eigenvalue_formula, eigenvalue_mixture, reversible_spectrum,
    second_eigenvalue, second_largest_modulus, walsh_hadamard, walsh_spectrum, IndexSet,
};
pub use transition::{
    all_potentials, beta_ranking_probe, exact_stationary, exact_stationary_for, stationary_by_linear_solve,
    stationary_by_power, transition_matrix, tv_distance, TransitionMatrix, MAX_DENSE_N,
};
