//! Simulator and optimization toolkit for the energy efficiency of an
//! uplink smart-grid neighbourhood network in which paired transmitters
//! share opportunistically sensed channels through power-domain
//! superposition.
//!
//! The crate models a disc of transmitters reporting to one collector,
//! per-user channel availability, and two-user clusters in which the
//! stronger transmitter's signal is decoded first. On top of that it
//! provides:
//!
//! - closed-form and preset power splits ([`power`]),
//! - benchmark pairings and a metaheuristic pairing/assignment search
//!   built on a zebra-herd optimizer ([`pairing`], [`zoa`]),
//! - a joint power-split search over all clusters ([`power::zouppa`]),
//! - an exhaustive small-instance oracle ([`oracle`]),
//! - a Monte-Carlo sweep harness with resumable CSV output ([`sim`]).
//!
//! Replications are paired: every scheme sees the same seeded topology and
//! availability draw, and all randomness flows from explicit seeds, so
//! every number is reproducible from the command line that produced it.
//!
//! The harness runs replications in parallel by default; build with
//! `--no-default-features` to force the sequential fallback (results are
//! identical either way — parallelism only affects wall clock).

pub mod availability;
pub mod error;
pub mod matching;
pub mod oracle;
pub mod pairing;
pub mod power;
pub mod rates;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod topology;
pub mod zoa;

pub use availability::{generate_availability, AvailabilityMatrix};
pub use error::{Error, Result};
pub use oracle::{exhaustive_pairing, grid_delta_search, OracleResult};
pub use pairing::{
    adjacent_pairing, decode_pairing, evaluate_pairing, oma_baseline, random_pairing,
    upwo_pairing, validate_pairing, zoup, Pairing, ZoupResult,
};
pub use power::{bpa, fpa, zouppa, PairPower, PowerAllocation, PowerRule, ZouppaResult};
pub use rates::{eval_pair, log2_1p, network_ee, noma_strong_rate, noma_weak_rate, oma_rate, PairEval};
pub use scenario::Scenario;
pub use sim::{
    convergence_trace, mix_seed, oracle_gap_study, run_batch, run_pipeline_detail,
    run_replication, run_sweep, Axis, ExperimentSpec, Scheme, SweepSummary, Tuning,
};
pub use topology::{generate_topology, Topology};
pub use zoa::{optimize, optimize_seeded, ZoaConfig, ZoaResult};
