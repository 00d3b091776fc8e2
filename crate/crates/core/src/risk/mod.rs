//! Coherent transition risk mappings `σ(x, m, v)`.
//!
//! A mapping takes the current state `x`, the distribution `m` of the next
//! state and the next-state values `v`, and returns the risk-adjusted value.
//! Three families are supported by the whole toolchain (expectation, Average
//! Value at Risk, mean–semideviation); the worst-case mapping is available
//! for primal evaluation and diagnostics only.

mod coherence;
mod dual;

pub use coherence::{coherence_check, Axiom, CoherenceReport};
pub use dual::{dual_feasible, dual_support_bruteforce, DualSupport, DUAL_ORACLE_MAX_STATES};

use crate::error::{Error, Result};

/// Smallest admissible AVaR level; `1 - ALPHA_MARGIN` is the largest.
pub const ALPHA_MARGIN: f64 = 1e-6;

/// Tolerance for probability-measure normalization.
pub const MEASURE_TOL: f64 = 1e-10;

/// Which transition risk mapping is applied, with per-state parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum RiskMapping {
    Expectation,
    /// `σ = min_η { η + α(x)^{-1} Σ m(y) (v(y) - η)_+ }`.
    AverageValueAtRisk {
        alpha: Vec<f64>,
    },
    /// `σ = E_m v + κ(x) ‖(v - E_m v)_+‖_{p,m}`.
    MeanSemideviation {
        kappa: Vec<f64>,
        p: f64,
    },
    /// `σ = max_{m(y) > 0} v(y)`. Coherent, but without a risk
    /// multigenerator.
    WorstCase,
}

impl RiskMapping {
    pub fn avar(alpha: Vec<f64>) -> Result<Self> {
        let spec = RiskMapping::AverageValueAtRisk { alpha };
        spec.check_parameters()?;
        Ok(spec)
    }

    pub fn avar_uniform(alpha: f64, n: usize) -> Result<Self> {
        Self::avar(vec![alpha; n])
    }

    pub fn semideviation(kappa: Vec<f64>, p: f64) -> Result<Self> {
        let spec = RiskMapping::MeanSemideviation { kappa, p };
        spec.check_parameters()?;
        Ok(spec)
    }

    pub fn semideviation_uniform(kappa: f64, p: f64, n: usize) -> Result<Self> {
        Self::semideviation(vec![kappa; n], p)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RiskMapping::Expectation => "expectation",
            RiskMapping::AverageValueAtRisk { .. } => "avar",
            RiskMapping::MeanSemideviation { .. } => "semideviation",
            RiskMapping::WorstCase => "worst_case",
        }
    }

    fn check_parameters(&self) -> Result<()> {
        match self {
            RiskMapping::AverageValueAtRisk { alpha } => {
                if let Some((x, a)) = alpha
                    .iter()
                    .enumerate()
                    .find(|(_, a)| !(**a >= ALPHA_MARGIN && **a <= 1.0 - ALPHA_MARGIN))
                {
                    return Err(Error::Config(format!(
                        "alpha[{x}] = {a} must lie in [{ALPHA_MARGIN}, {}]",
                        1.0 - ALPHA_MARGIN
                    )));
                }
            }
            RiskMapping::MeanSemideviation { kappa, p } => {
                if let Some((x, k)) = kappa
                    .iter()
                    .enumerate()
                    .find(|(_, k)| !(**k >= 0.0 && **k <= 1.0))
                {
                    return Err(Error::Config(format!(
                        "kappa[{x}] = {k} must lie in [0, 1]"
                    )));
                }
                if !(p.is_finite() && *p >= 1.0) {
                    return Err(Error::Config(format!(
                        "semideviation order p = {p} must be >= 1"
                    )));
                }
            }
            RiskMapping::Expectation | RiskMapping::WorstCase => {}
        }
        Ok(())
    }

    /// Checks parameter ranges and that per-state vectors cover `n` states.
    pub fn validate(&self, n: usize) -> Result<()> {
        self.check_parameters()?;
        let len = match self {
            RiskMapping::AverageValueAtRisk { alpha } => alpha.len(),
            RiskMapping::MeanSemideviation { kappa, .. } => kappa.len(),
            _ => return Ok(()),
        };
        if len != n {
            return Err(Error::Config(format!(
                "{} parameters given for {len} states, model has {n}",
                self.kind()
            )));
        }
        Ok(())
    }

    /// True when the backward ODE has a closed-form right-hand side for this
    /// mapping.
    pub fn has_multigenerator(&self) -> bool {
        match self {
            RiskMapping::Expectation | RiskMapping::AverageValueAtRisk { .. } => true,
            RiskMapping::MeanSemideviation { p, .. } => *p == 1.0,
            RiskMapping::WorstCase => false,
        }
    }

    pub(crate) fn alpha_at(&self, x: usize) -> f64 {
        match self {
            RiskMapping::AverageValueAtRisk { alpha } => alpha[x],
            _ => unreachable!("alpha requested from a non-AVaR mapping"),
        }
    }
}

/// A probability measure over the state space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMeasure(Vec<f64>);

impl ProbMeasure {
    /// Accepts nonnegative weights summing to one within [`MEASURE_TOL`];
    /// negative entries within the tolerance (rounding noise from matrix
    /// exponentials) are set to zero.
    pub fn new(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Dimension("empty probability measure".into()));
        }
        let mut sum = 0.0;
        for (y, w) in weights.iter_mut().enumerate() {
            if !w.is_finite() || *w < -MEASURE_TOL {
                return Err(Error::Domain(format!(
                    "weight {y} = {w} is not a probability"
                )));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
            sum += *w;
        }
        if (sum - 1.0).abs() > MEASURE_TOL {
            return Err(Error::Domain(format!("weights sum to {sum}, not 1")));
        }
        Ok(ProbMeasure(weights))
    }

    pub fn dirac(n: usize, x: usize) -> Self {
        let mut w = vec![0.0; n];
        w[x] = 1.0;
        ProbMeasure(w)
    }

    pub fn uniform(n: usize) -> Self {
        ProbMeasure(vec![1.0 / n as f64; n])
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn mean(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(m, v)| m * v).sum()
    }
}

fn check_args(spec: &RiskMapping, x: usize, m: &ProbMeasure, v: &[f64]) -> Result<()> {
    let n = m.n();
    if v.len() != n {
        return Err(Error::Dimension(format!(
            "value vector has {} entries, measure {n}",
            v.len()
        )));
    }
    if x >= n {
        return Err(Error::Domain(format!("state {x} outside 0..{n}")));
    }
    spec.validate(n)
}

/// Evaluates `σ(x, m, v)`.
pub fn sigma_eval(spec: &RiskMapping, x: usize, m: &ProbMeasure, v: &[f64]) -> Result<f64> {
    check_args(spec, x, m, v)?;
    if let Some(bad) = v.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("value {bad} is not finite")));
    }
    Ok(sigma_unchecked(spec, x, m.weights(), v))
}

pub(crate) fn sigma_unchecked(spec: &RiskMapping, x: usize, m: &[f64], v: &[f64]) -> f64 {
    match spec {
        RiskMapping::Expectation => m.iter().zip(v).map(|(m, v)| m * v).sum(),
        RiskMapping::AverageValueAtRisk { alpha } => avar(alpha[x], m, v),
        RiskMapping::MeanSemideviation { kappa, p } => semideviation(kappa[x], *p, m, v),
        RiskMapping::WorstCase => m
            .iter()
            .zip(v)
            .filter(|(m, _)| **m > 0.0)
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

/// The objective `η ↦ η + α^{-1} Σ m (v - η)_+` is convex and piecewise
/// linear with kinks at the values of `v`, so its minimum is attained at one
/// of them.
fn avar(alpha: f64, m: &[f64], v: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, &eta) in v.iter().enumerate() {
        if v[..i].contains(&eta) {
            continue;
        }
        let excess: f64 = m.iter().zip(v).map(|(m, v)| m * (v - eta).max(0.0)).sum();
        best = best.min(eta + excess / alpha);
    }
    best
}

fn semideviation(kappa: f64, p: f64, m: &[f64], v: &[f64]) -> f64 {
    let mean: f64 = m.iter().zip(v).map(|(m, v)| m * v).sum();
    let dev = if p == 1.0 {
        m.iter()
            .zip(v)
            .map(|(m, v)| m * (v - mean).max(0.0))
            .sum::<f64>()
    } else {
        m.iter()
            .zip(v)
            .map(|(m, v)| m * (v - mean).max(0.0).powf(p))
            .sum::<f64>()
            .max(0.0)
            .powf(p.recip())
    };
    mean + kappa * dev
}
