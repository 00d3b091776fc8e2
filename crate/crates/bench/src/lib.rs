//! Fixtures shared by the criterion benches in `benches/`.

use markov_risk::{MarkovModel, RiskMapping};

/// Random `n`-state model with a fixed seed, under the given mapping.
pub fn fixture(n: usize, risk: fn(usize) -> RiskMapping) -> MarkovModel {
    MarkovModel::random(n, 7)
        .and_then(|m| m.with_risk(risk(n)))
        .expect("fixture model")
}

pub fn expectation(_: usize) -> RiskMapping {
    RiskMapping::Expectation
}

pub fn avar(n: usize) -> RiskMapping {
    RiskMapping::avar_uniform(0.5, n).expect("alpha in range")
}

pub fn semideviation(n: usize) -> RiskMapping {
    RiskMapping::semideviation_uniform(0.5, 1.0, n).expect("kappa in range")
}
