//! Time-consistent coherent risk evaluation for continuous-time Markov
//! chains on finite state spaces.
//!
//! The crate evaluates `v_t(x)`, the risk of the running cost `c` plus the
//! terminal cost `f` accumulated from state `x` at time `t`, in two ways:
//!
//! * [`solver::solve_ode`] integrates the backward system
//!   `dv/dt = -c_t(x) - s_t(x, v)`, `v_T = f`, where `s_t(x, ·)` is the
//!   support function of the risk multigenerator built from the chain's
//!   generator and the transition risk mapping;
//! * [`dp::dp_recursion`] applies the transition risk mapping to the
//!   discrete-time chain observed on a uniform grid.
//!
//! [`dp::convergence_study`] compares the two.

pub mod dp;
pub mod error;
pub mod markov;
pub mod model;
pub mod multigen;
pub mod risk;
pub mod solver;

pub use error::{Error, Result};
pub use markov::{
    transition_matrix, validate_generator, CostSpec, GeneratorSchedule, PathSample, SignedKernel,
    StateSpace, StochasticKernel,
};
pub use model::MarkovModel;
pub use risk::{sigma_eval, ProbMeasure, RiskMapping};

pub use solver::{Scheme, SolverConfig, TimeGrid, ValueFunction};
