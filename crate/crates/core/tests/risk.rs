mod common;

use markov_risk::risk::{coherence_check, dual_feasible, dual_support_bruteforce, Axiom};
use markov_risk::{sigma_eval, ProbMeasure, RiskMapping};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

/// AVaR by direct tail integration of the sorted distribution: the upper
/// `α`-tail average of `v` under `m`.
fn avar_by_tail(alpha: f64, m: &[f64], v: &[f64]) -> f64 {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
    let mut budget = alpha;
    let mut acc = 0.0;
    for y in idx {
        let take = m[y].min(budget);
        acc += take * v[y];
        budget -= take;
        if budget <= 0.0 {
            break;
        }
    }
    acc / alpha
}

fn semideviation_direct(kappa: f64, p: f64, m: &[f64], v: &[f64]) -> f64 {
    let mean: f64 = m.iter().zip(v).map(|(a, b)| a * b).sum();
    let dev: f64 = m
        .iter()
        .zip(v)
        .map(|(a, b)| a * (b - mean).max(0.0).powf(p))
        .sum();
    mean + kappa * dev.powf(1.0 / p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn avar_matches_tail_average(seed in any::<u64>(), n in 1usize..=6, x in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = x % n;
        let m = random_measure(&mut rng, n);
        let v = random_values(&mut rng, n);
        let spec = random_avar(&mut rng, n);
        let RiskMapping::AverageValueAtRisk { alpha } = &spec else { unreachable!() };
        let got = sigma_eval(&spec, x, &m, &v).unwrap();
        prop_assert!((got - avar_by_tail(alpha[x], m.weights(), &v)).abs() <= 1e-10);
    }

    #[test]
    fn semideviation_matches_definition(seed in any::<u64>(), n in 1usize..=6, p in 1.0..5.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_measure(&mut rng, n);
        let v = random_values(&mut rng, n);
        let spec = random_semideviation(&mut rng, n, p);
        let RiskMapping::MeanSemideviation { kappa, .. } = &spec else { unreachable!() };
        let got = sigma_eval(&spec, 0, &m, &v).unwrap();
        prop_assert!((got - semideviation_direct(kappa[0], p, m.weights(), &v)).abs() <= 1e-10);
    }

    #[test]
    fn primal_bounds_numerical_dual_for_higher_order(seed in any::<u64>(), n in 1usize..=4, p in 1.2..4.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_measure(&mut rng, n);
        let v = random_values(&mut rng, n);
        let spec = random_semideviation(&mut rng, n, p);
        let primal = sigma_eval(&spec, 0, &m, &v).unwrap();
        let dual = dual_support_bruteforce(&spec, 0, &m, &v).unwrap();
        prop_assert!(dual.value <= primal + 1e-6);
        prop_assert!(dual.value >= primal - 1e-4);
    }

    #[test]
    fn law_invariance_under_permutation(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_measure(&mut rng, n);
        let v = random_values(&mut rng, n);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let mp = ProbMeasure::new(perm.iter().map(|&i| m.weights()[i]).collect()).unwrap();
        let vp: Vec<f64> = perm.iter().map(|&i| v[i]).collect();
        let (a, k) = (rng.gen_range(0.05..0.95), rng.gen_range(0.0..1.0));
        for spec in [
            RiskMapping::Expectation,
            RiskMapping::avar_uniform(a, n).unwrap(),
            RiskMapping::semideviation_uniform(k, 1.0, n).unwrap(),
            RiskMapping::semideviation_uniform(k, 2.5, n).unwrap(),
        ] {
            let lhs = sigma_eval(&spec, 0, &m, &v).unwrap();
            let rhs = sigma_eval(&spec, 0, &mp, &vp).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn monotone_in_risk_parameters(seed in any::<u64>(), n in 1usize..=6, a in 0.05..0.95f64, b in 0.05..0.95f64, p in 1.0..4.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_measure(&mut rng, n);
        let v = random_values(&mut rng, n);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let avar = |al| sigma_eval(&RiskMapping::avar_uniform(al, n).unwrap(), 0, &m, &v).unwrap();
        prop_assert!(avar(hi) <= avar(lo) + 1e-12);
        let semi = |k| sigma_eval(&RiskMapping::semideviation_uniform(k, p, n).unwrap(), 0, &m, &v).unwrap();
        prop_assert!(semi(lo) <= semi(hi) + 1e-12);
    }

    #[test]
    fn dual_maximizers_are_feasible(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_measure(&mut rng, n);
        let v = random_values(&mut rng, n);
        for spec in [random_avar(&mut rng, n), random_semideviation(&mut rng, n, 1.0)] {
            let dual = dual_support_bruteforce(&spec, 0, &m, &v).unwrap();
            let mu = ProbMeasure::new(dual.maximizer.clone()).unwrap();
            prop_assert!(dual_feasible(&spec, 0, &m, &mu).unwrap());
        }
    }
}

#[test]
fn dual_oracle_rejects_large_instances() {
    let m = ProbMeasure::uniform(7);
    let spec = RiskMapping::avar_uniform(0.5, 7).unwrap();
    assert!(dual_support_bruteforce(&spec, 0, &m, &[0.0; 7]).is_err());
}

#[test]
fn coherence_holds_for_every_family_and_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in 1..=5 {
        let m = random_measure(&mut rng, n);
        for spec in [
            RiskMapping::Expectation,
            random_avar(&mut rng, n),
            random_semideviation(&mut rng, n, 1.0),
            random_semideviation(&mut rng, n, 3.0),
        ] {
            for x in 0..n {
                let r = coherence_check(&spec, x, &m, 500, x as u64).unwrap();
                assert!(r.passed(), "{} n={n} x={x}: {:?}", spec.kind(), r);
                assert_eq!(r.outcome(Axiom::Normalization).failures, 0);
            }
        }
    }
}

#[test]
fn avar_at_two_point_measure() {
    let m = ProbMeasure::new(vec![0.5, 0.5]).unwrap();
    let spec = RiskMapping::avar_uniform(0.5, 2).unwrap();
    assert_eq!(sigma_eval(&spec, 0, &m, &[0.0, 1.0]).unwrap(), 1.0);
    let spec = RiskMapping::avar_uniform(0.75, 2).unwrap();
    assert!((sigma_eval(&spec, 0, &m, &[0.0, 1.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
}
