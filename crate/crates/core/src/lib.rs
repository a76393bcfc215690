//! Hierarchical reinforcement learning driven by signal temporal logic.
//!
//! A task is written as an STL formula. Its temporal-operator-free pieces
//! become primitive options, sequences of those become combined options, and
//! robustness of the trajectories they produce is the only reward signal.

pub mod env;
pub mod harness;
pub mod learn;
pub mod options;
pub mod rng;
pub mod stl;
