//! Mean-payoff and energy games solved by iterated potential reduction.
//!
//! The solver ([`solver::solve`]) repeatedly reweights a simple game with a
//! potential until every edge condition of a reduced game holds, then reads
//! energies, dual energies and mean-payoff signs off the accumulated
//! potential. [`baselines`] holds independent engines used to cross-check it,
//! [`layers`] re-derives the progress measures of each round from a trace,
//! [`gen`] builds seeded instances and [`io`] handles the text and JSON
//! formats.

pub mod baselines;
pub mod game;
pub mod gen;
pub mod io;
pub mod layers;
pub mod solver;

pub use game::{
    apply_potential, extremal_weight, lift_to_simple, modified_weight, sign_sets, Edge, EdgeId, ExtendedInt,
    GameError, GameGraph, MpSign, Owner, Potential, SignSets, ValueVector, VertexId, VertexSet, MAX_ABS_WEIGHT,
};
pub use layers::{alternation_depths, verify_result, verify_trace, IterationRecord, VerificationReport};
pub use solver::{
    check_certificate, compute_deltas, compute_partition, gkk_step, is_reduced, solve, DeltaBundle, Mode,
    SignPartition, SolveError, SolveResult,
};
