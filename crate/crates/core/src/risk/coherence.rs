use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_args, sigma_unchecked, ProbMeasure, RiskMapping};
use crate::error::Result;

/// Relative tolerance for the randomized axiom checks.
pub const COHERENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axiom {
    Monotonicity,
    Translation,
    PositiveHomogeneity,
    Convexity,
    Normalization,
}

impl Axiom {
    pub const ALL: [Axiom; 5] = [
        Axiom::Monotonicity,
        Axiom::Translation,
        Axiom::PositiveHomogeneity,
        Axiom::Convexity,
        Axiom::Normalization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axiom::Monotonicity => "monotonicity",
            Axiom::Translation => "translation",
            Axiom::PositiveHomogeneity => "positive_homogeneity",
            Axiom::Convexity => "convexity",
            Axiom::Normalization => "normalization",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomOutcome {
    pub axiom: Axiom,
    pub checks: usize,
    pub failures: usize,
    pub first_counterexample: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport {
    pub outcomes: Vec<AxiomOutcome>,
}

impl CoherenceReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.failures == 0)
    }

    pub fn outcome(&self, axiom: Axiom) -> &AxiomOutcome {
        self.outcomes
            .iter()
            .find(|o| o.axiom == axiom)
            .expect("every axiom is checked")
    }
}

fn slack(a: f64, b: f64) -> f64 {
    COHERENCE_TOL * 1f64.max(a.abs()).max(b.abs())
}

/// Randomized check of monotonicity, translation invariance, positive
/// homogeneity and convexity of `v ↦ σ(x, m, v)`, `samples` draws per
/// axiom, plus `σ(x, m, 0) = 0`.
pub fn coherence_check(
    spec: &RiskMapping,
    x: usize,
    m: &ProbMeasure,
    samples: usize,
    seed: u64,
) -> Result<CoherenceReport> {
    let n = m.n();
    check_args(spec, x, m, &vec![0.0; n])?;
    let w = m.weights();
    Ok(check_axioms(n, samples, seed, |v| {
        sigma_unchecked(spec, x, w, v)
    }))
}

/// Axiom checks for an arbitrary functional on `R^n`.
pub(crate) fn check_axioms(
    n: usize,
    samples: usize,
    seed: u64,
    sigma: impl Fn(&[f64]) -> f64,
) -> CoherenceReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        // sometimes reuse values to exercise ties
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        if n > 1 && rng.gen_bool(0.2) {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            v[a] = v[b];
        }
        v
    };

    let mut outcomes = Vec::new();
    let mut record = |axiom: Axiom, failures: Vec<String>, checks: usize| {
        outcomes.push(AxiomOutcome {
            axiom,
            checks,
            failures: failures.len(),
            first_counterexample: failures.into_iter().next(),
        });
    };

    let mut fails = Vec::new();
    for _ in 0..samples {
        let v = draw(&mut rng);
        let w: Vec<f64> = v
            .iter()
            .map(|v| {
                if rng.gen_bool(0.3) {
                    *v
                } else {
                    v + rng.gen_range(0.0..5.0)
                }
            })
            .collect();
        let (sv, sw) = (sigma(&v), sigma(&w));
        if sv > sw + slack(sv, sw) {
            fails.push(format!("v={v:?} <= w={w:?} but σ(v)={sv} > σ(w)={sw}"));
        }
    }
    record(Axiom::Monotonicity, fails, samples);

    let mut fails = Vec::new();
    for _ in 0..samples {
        let v = draw(&mut rng);
        let a = rng.gen_range(-10.0..10.0);
        let shifted: Vec<f64> = v.iter().map(|v| v + a).collect();
        let (lhs, rhs) = (sigma(&shifted), sigma(&v) + a);
        if (lhs - rhs).abs() > slack(lhs, rhs) {
            fails.push(format!("v={v:?}, a={a}: σ(v+a)={lhs} ≠ σ(v)+a={rhs}"));
        }
    }
    record(Axiom::Translation, fails, samples);

    let mut fails = Vec::new();
    for _ in 0..samples {
        let v = draw(&mut rng);
        let gamma = rng.gen_range(0.0..10.0);
        let scaled: Vec<f64> = v.iter().map(|v| gamma * v).collect();
        let (lhs, rhs) = (sigma(&scaled), gamma * sigma(&v));
        if (lhs - rhs).abs() > slack(lhs, rhs) {
            fails.push(format!("v={v:?}, γ={gamma}: σ(γv)={lhs} ≠ γσ(v)={rhs}"));
        }
    }
    record(Axiom::PositiveHomogeneity, fails, samples);

    let mut fails = Vec::new();
    for _ in 0..samples {
        let v = draw(&mut rng);
        let w = draw(&mut rng);
        let lambda: f64 = rng.gen_range(0.0..=1.0);
        let mix: Vec<f64> = v
            .iter()
            .zip(&w)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        let (lhs, rhs) = (sigma(&mix), lambda * sigma(&v) + (1.0 - lambda) * sigma(&w));
        if lhs > rhs + slack(lhs, rhs) {
            fails.push(format!("v={v:?}, w={w:?}, λ={lambda}: {lhs} > {rhs}"));
        }
    }
    record(Axiom::Convexity, fails, samples);

    let zero = sigma(&vec![0.0; n]);
    let fails = if zero == 0.0 {
        Vec::new()
    } else {
        vec![format!("σ(0) = {zero}")]
    };
    record(Axiom::Normalization, fails, 1);

    CoherenceReport { outcomes }
}
