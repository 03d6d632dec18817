//! Opportunistic spectrum access policies for reactive primary users.
//!
//! A secondary user (SU) shares `N` licensed channels with primary users
//! (PUs) that back off after collisions: each channel follows a four-state
//! Markov chain with a high-access Level 0 and a reduced-access Level 1. In
//! every slot the SU senses one channel at a chosen operating point of an
//! energy-detection ROC curve and decides whether to transmit; it only
//! learns whether its own transmission succeeded. The crate provides:
//!
//! - the channel occupancy model and its transition kernels ([`pu_model`]);
//! - the energy-detection ROC curve and its inversion ([`sensor_roc`]);
//! - belief tracking and per-slot expected rewards ([`belief`]);
//! - the exact policy under a per-slot collision probability cap, built on a
//!   separation principle and finite-horizon dynamic programming
//!   ([`policy_sccp`]);
//! - a schedule that guarantees each PU its long-term benchmark throughput
//!   by steering a deterministic equivalent process between per-slot
//!   mis-detection bounds ([`policy_lput`]);
//! - exact belief-tree and seeded Monte Carlo evaluation ([`evaluator`]).

pub mod belief;
pub mod error;
pub mod evaluator;
pub mod policy_lput;
pub mod policy_sccp;
pub mod pu_model;
pub mod sensor_roc;

pub use belief::{
    expected_pu_reward_slot, expected_su_reward, AccessPair, ActionTriple, BeliefMatrix, BeliefRow,
    Observation, BRANCH_PRUNE_PROB, SIMPLEX_TOL,
};
pub use error::{OsaError, Result};
pub use evaluator::{
    exact_evaluate, exact_evaluate_from, exact_pu_throughput, exact_report, exact_su_value,
    monte_carlo, su_upper_bound, EvalMethod, EvaluationReport, ExactEvaluation, PolicySchedule,
    StandardErrors,
};
pub use policy_lput::{
    build_schedule, mdp_pu_reward, mdp_step, multi_channel_policy, pm_lower, pm_upper,
    pomdp_mdp_consistency, requirement_recursion, tighten_final_slot, LputSchedule, LputSlot,
    MCoefficients, MdpState, MultiChannelPolicy,
};
pub use policy_sccp::{
    q_value, sccp_sigma, search_node_bound, solve_sccp, SccpAction, SccpSolution, SensingNode,
    SensingPolicyTree, DEFAULT_NODE_BUDGET,
};
pub use pu_model::{ChannelParams, PuState, Scenario, STATE_COUNT};
pub use sensor_roc::{
    regularized_lower_gamma, regularized_upper_gamma, EnergyDetectorParams, OperatingPoint,
    RocCurve, ROC_FEASIBILITY_TOL,
};
