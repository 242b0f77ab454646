//! Ground-truth engines the solver is checked against.
//!
//! * [`brute`]: exhaustive positional-strategy evaluation for tiny games, plus
//!   the naive partition oracle, the simple-cycle checker and the
//!   optimal-strategy path property.
//! * [`value_iteration`]: ascending Kleene iteration for energies, usable on
//!   games of any size.

pub mod brute;
pub mod value_iteration;

use thiserror::Error;

pub use brute::{
    check_optimal_paths, check_simple, oracle_partition, oracle_solve, oracle_values, Lasso, MeanPayoff,
    OracleSolution, DEFAULT_N_LIMIT, MAX_STRATEGY_PAIRS, SIMPLE_CHECK_N_LIMIT,
};
pub use value_iteration::{
    value_iteration_en_minus, value_iteration_en_minus_counted, value_iteration_en_plus,
    value_iteration_en_plus_counted,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("game has {n} vertices, above the oracle limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("{pairs} positional strategy pairs exceed the enumeration budget of {limit}")]
    TooManyStrategies { pairs: u128, limit: u128 },
    #[error("vertex {0} has mean payoff zero, so the game is not simple")]
    ZeroMpInSimpleMode(usize),
    #[error("integer overflow while {0}")]
    Overflow(&'static str),
}
