//! Signal temporal logic over discrete-time state trajectories: parsing,
//! printing and quantitative (robustness) evaluation.

mod ast;
mod monitor;
mod parser;
mod robustness;

pub use ast::{
    format_number, Bound, Comparator, Formula, Interval, Predicate, Robustness, State, Term, Trajectory,
};
pub use monitor::{LeafTable, Monitor};
pub use parser::{expand_aliases, parse_stl};
pub use robustness::{horizon, robustness, truncate_horizon, Horizon};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StlError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unknown variable `{name}` at line {line}, column {column}")]
    UnknownVariable { name: String, line: usize, column: usize },
    #[error("malformed bound at line {line}, column {column}: {message}")]
    MalformedBound { line: usize, column: usize, message: String },
    #[error("empty window [{lo},{hi})")]
    EmptyWindow { lo: usize, hi: usize },
    #[error("predicate has no nonzero coefficient")]
    DegeneratePredicate,
    #[error("state has {found} variables but the formula needs {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("formula horizon {horizon} at time {time} runs past a trajectory of {len} samples")]
    HorizonExceedsTrajectory { horizon: usize, time: usize, len: usize },
    #[error("unbounded temporal operator must be truncated before evaluation")]
    Unbounded,
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("truncation length must be at least one sample")]
    InvalidTruncation,
    #[error("alias definitions refer to each other cyclically")]
    AliasCycle,
}

/// Robustness of `f` over `traj` after clipping its windows to the
/// trajectory length. This is the reward an option earns for the trajectory
/// it produced.
pub fn lumped_reward(traj: &Trajectory, f: &Formula) -> Result<Robustness, StlError> {
    let clipped = truncate_horizon(f, traj.len())?;
    robustness(traj, &clipped, 0)
}
