//! Joint friendship-link and binary-action games on directed networks.
//!
//! Players choose an action and their outgoing links. Payoffs admit an exact
//! potential, so the k-player logit dynamic has the closed-form stationary
//! law `exp(Phi / beta)` for every meeting size `k`. The crate covers:
//!
//! * [`model`]: states, covariates, statistics, payoffs and the potential;
//! * [`equilibria`]: k-player and partition Nash stability, modes;
//! * [`dynamics`]: meetings, logit and best-response updates, exact
//!   transition matrices, stationary laws and spectra;
//! * [`estimation`]: the varying-k double Metropolis-Hastings sampler;
//! * [`counterfactual`]: policy scenarios and network statistics;
//! * [`io`] and [`cli`]: data files, configuration and the command line.

pub mod error;
pub mod equilibria;
pub mod estimation;
pub mod io;
pub mod cli;
pub mod counterfactual;
pub mod dynamics;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
