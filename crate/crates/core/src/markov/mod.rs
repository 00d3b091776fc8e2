//! Finite state spaces, piecewise-constant generators, transition kernels,
//! signed-kernel calculus and path simulation.

mod cost;
mod generator;
mod kernel;
mod simulate;

pub use cost::CostSpec;
pub(crate) use generator::{check_interval, expm_scaled};
pub use generator::{
    transition_matrix, validate_generator, GeneratorRule, GeneratorSchedule, GeneratorViolation,
};
pub(crate) use kernel::matrix_from_rows;
pub use kernel::{
    stochastic_violation, ConeViolation, SignedKernel, StochasticKernel, ROW_SUM_REL_TOL,
    STOCHASTIC_TOL,
};
pub use simulate::{
    monte_carlo_cost, sample_costs, simulate_path, simulate_path_with, summarize,
    MonteCarloEstimate, PathSample,
};

use crate::error::{Error, Result};

/// Ordered, distinct state labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    labels: Vec<String>,
}

impl StateSpace {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Invalid(
                "state space must have at least one state".into(),
            ));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Invalid(format!("duplicate state label {l:?}")));
            }
        }
        Ok(StateSpace { labels })
    }

    /// States labelled `"0"`, `"1"`, ….
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}
