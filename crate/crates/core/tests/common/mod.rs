#![allow(dead_code)]

use std::path::PathBuf;

use markov_risk::{MarkovModel, ProbMeasure, RiskMapping};
use rand::Rng;

pub fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

pub fn load(name: &str) -> MarkovModel {
    MarkovModel::from_path(models_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// The three shipped models used for convergence and time-consistency.
pub fn example_models() -> Vec<(&'static str, MarkovModel)> {
    ["two_state.json", "random4.json", "time_dependent.json"]
        .into_iter()
        .map(|name| (name, load(name)))
        .collect()
}

/// A probability vector, sometimes with null states.
pub fn random_measure<R: Rng>(rng: &mut R, n: usize) -> ProbMeasure {
    loop {
        let mut w: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.2) {
                    0.0
                } else {
                    rng.gen_range(0.0..1.0)
                }
            })
            .collect();
        let s: f64 = w.iter().sum();
        if s <= 0.0 {
            continue;
        }
        w.iter_mut().for_each(|v| *v /= s);
        // renormalize the largest entry so the sum is 1 up to one rounding
        let resid = 1.0 - w.iter().sum::<f64>();
        let top = (0..n).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
        w[top] += resid;
        return ProbMeasure::new(w).unwrap();
    }
}

/// Values in `[-5, 5)`, with a tie now and then.
pub fn random_values<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    if n > 1 && rng.gen_bool(0.25) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        v[a] = v[b];
    }
    v
}

/// A tangent-cone row at `x`: nonnegative off-diagonal rates (some zero),
/// diagonal balancing the row.
pub fn random_direction<R: Rng>(rng: &mut R, n: usize, x: usize) -> Vec<f64> {
    let mut k: Vec<f64> = (0..n)
        .map(|y| {
            if y == x || rng.gen_bool(0.2) {
                0.0
            } else {
                rng.gen_range(0.0..3.0)
            }
        })
        .collect();
    k[x] = -k.iter().sum::<f64>();
    k
}

pub fn random_avar<R: Rng>(rng: &mut R, n: usize) -> RiskMapping {
    RiskMapping::avar((0..n).map(|_| rng.gen_range(0.05..0.95)).collect()).unwrap()
}

pub fn random_semideviation<R: Rng>(rng: &mut R, n: usize, p: f64) -> RiskMapping {
    RiskMapping::semideviation((0..n).map(|_| rng.gen_range(0.0..=1.0)).collect(), p).unwrap()
}

/// A valid generator with rates in `[0, scale)`.
pub fn random_generator<R: Rng>(rng: &mut R, n: usize, scale: f64) -> nalgebra::DMatrix<f64> {
    let mut g = nalgebra::DMatrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            if x != y {
                g[(x, y)] = rng.gen_range(0.0..scale);
            }
        }
        let out: f64 = (0..n).filter(|&y| y != x).map(|y| g[(x, y)]).sum();
        g[(x, x)] = -out;
    }
    g
}
