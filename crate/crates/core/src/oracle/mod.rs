//! Brute-force reference implementations used to check the fast code paths.
//!
//! Nothing here calls the closed-form divergences, the closure builder or
//! the samplers it is meant to check, except the comparisons in [`battery`].

mod battery;
mod numeric;
mod support;

pub use battery::{battery, check_divergence_grad, random_dag, random_gaussian, rel_close, OracleCheck};
pub use numeric::{
    fd_grad, mc_kl, quad_elk_1d, quad_kl_1d, quad_renyi_1d, strict_encapsulation_check,
    EncapsulationCheck, McEstimate, MC_MIN_SAMPLES, QUAD_DEFAULT_INTERVALS, QUAD_REFINE_TOL,
};
pub use support::{
    brute_closure, enumerate_sampler_support, SupportQuery, BRUTE_MAX_NODES, ENUM_MAX_NODES,
};
