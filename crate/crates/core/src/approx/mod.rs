//! Posterior approximations used inside the Gibbs sampler.

pub mod b4p;
pub mod skewnormal;

pub use b4p::{fit_b4p, fit_b4p_for_unit, log_unnorm_posterior_y, sample_y_conditional, B4PConfig, B4PProposal};
pub use skewnormal::{fit_skewnormal, match_skewnormal, sample_theta_conditional, SNApprox};
