//! Laboratory for online matching with multi-channel traffic: online
//! policies (AC, MSVV, GPG, CP/SCP/RC baselines, AC-R under a cascade),
//! adversarial hard-instance generators, clairvoyant benchmarks (exact DP,
//! D-LP upper bound), numeric competitive-ratio bound curves, and a seeded
//! Monte-Carlo harness.

pub mod benchmark;
pub mod instances;
pub mod bounds;
pub mod model;
pub mod policies;

pub use model::{
    compute_efet, compute_mcpr, psi, validate_instance, CascadeParams, Instance, InstanceMeta,
    ModelError, Opportunity, RunResult, SamplePath, Violation, Volunteer,
};
pub use policies::{simulate_run, Policy, PolicyError, PolicyState, Recommendation};
