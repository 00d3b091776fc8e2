//! Exit criteria, one check per criterion. Run with
//! `cargo test -p markov-risk --test acceptance -- --nocapture` to see the
//! pass/fail lines.

mod common;

use markov_risk::dp::{convergence_study, reference_solution};
use markov_risk::markov::monte_carlo_cost;
use markov_risk::multigen::{
    semi_derivative_fd_check, support_avar, support_bruteforce, support_semidev_p1,
};
use markov_risk::risk::{coherence_check, dual_support_bruteforce, sigma_eval, Axiom};
use markov_risk::solver::{semigroup_check, solve_ode};
use markov_risk::{ProbMeasure, RiskMapping, Scheme, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = fn() -> Outcome;

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

const EXACT_EXPECTATION: f64 = 0.432_332_358_381_693_6; // (1 - e^{-2}) / 2

fn kolmogorov_reduction() -> Outcome {
    let model = load("two_state.json");
    let v = solve_ode(
        &model,
        &RiskMapping::Expectation,
        &SolverConfig::new(Scheme::Rk4, 1000),
    )
    .unwrap();
    let exact = (1.0 - (-2.0_f64).exp()) / 2.0;
    assert!((exact - EXACT_EXPECTATION).abs() < 1e-15);
    let err = (v.initial()[0] - exact).abs();
    outcome(
        err <= 1e-6,
        format!("|v_0(1) - (1-e^-2)/2| = {err:.3e} (tol 1e-6)"),
    )
}

fn avar_closed_form() -> Outcome {
    let model = load("two_state_avar.json");
    let v = solve_ode(&model, &model.risk, &SolverConfig::new(Scheme::Rk4, 1000)).unwrap();
    let err0 = (v.initial()[0] - (1.0 - (-2.0_f64).exp())).abs();
    let err2 = v
        .values
        .iter()
        .map(|row| (row[1] - 1.0).abs())
        .fold(0.0, f64::max);
    outcome(
        err0 <= 1e-6 && err2 <= 1e-9,
        format!("|v_0(1) - (1-e^-2)| = {err0:.3e} (tol 1e-6), max_t |v_t(2) - 1| = {err2:.3e} (tol 1e-9)"),
    )
}

fn primal_equals_dual() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=5);
        let m = random_measure(&mut rng, n);
        let v = random_values(&mut rng, n);
        let x = rng.gen_range(0..n);
        for spec in [
            RiskMapping::Expectation,
            random_avar(&mut rng, n),
            random_semideviation(&mut rng, n, 1.0),
        ] {
            let primal = sigma_eval(&spec, x, &m, &v).unwrap();
            let dual = dual_support_bruteforce(&spec, x, &m, &v).unwrap();
            assert!(dual.exact);
            worst = worst.max((primal - dual.value).abs());
        }
    }
    outcome(
        worst <= 1e-8,
        format!("max |σ - dual| = {worst:.3e} over 3x1000 instances (tol 1e-8)"),
    )
}

fn state_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=6);
        let x = rng.gen_range(0..n);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1e3..1e3)).collect();
        let dirac = ProbMeasure::dirac(n, x);
        let p = rng.gen_range(1.0..6.0);
        for spec in [
            RiskMapping::Expectation,
            random_avar(&mut rng, n),
            random_semideviation(&mut rng, n, 1.0),
            random_semideviation(&mut rng, n, p),
        ] {
            let s = sigma_eval(&spec, x, &dirac, &v).unwrap();
            worst = worst.max((s - v[x]).abs());
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max |σ(x, δ_x, v) - v(x)| = {worst:.3e} (tol 1e-12)"),
    )
}

fn multigenerator_closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_avar, mut worst_semi): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=5);
        let x = rng.gen_range(0..n);
        let k = random_direction(&mut rng, n, x);
        let v = random_values(&mut rng, n);
        let avar = random_avar(&mut rng, n);
        let semi = random_semideviation(&mut rng, n, 1.0);
        worst_avar = worst_avar.max(
            (support_avar(&avar, x, &k, &v).unwrap()
                - support_bruteforce(&avar, x, &k, &v).unwrap())
            .abs(),
        );
        worst_semi = worst_semi.max(
            (support_semidev_p1(&semi, x, &k, &v).unwrap()
                - support_bruteforce(&semi, x, &k, &v).unwrap())
            .abs(),
        );
    }
    outcome(
        worst_avar <= 1e-10 && worst_semi <= 1e-10,
        format!("max deviation: AVaR {worst_avar:.3e}, semideviation {worst_semi:.3e} (tol 1e-10)"),
    )
}

fn semi_derivative_limit() -> Outcome {
    let ladder = [1e-2, 1e-3, 1e-4, 1e-5];
    let k = [-1.0, 1.0];
    let v = [0.0, 1.0];
    let mut failures = Vec::new();
    let mut worst_final: f64 = 0.0;
    let mut check = |spec: &RiskMapping, x: usize, k: &[f64], v: &[f64], label: &str| {
        let r = semi_derivative_fd_check(spec, x, k, v, &ladder).unwrap();
        worst_final = worst_final.max(r.rows.last().unwrap().abs_error.unwrap());
        if !r.converged {
            failures.push(label.to_string());
        }
    };
    check(
        &RiskMapping::avar_uniform(0.5, 2).unwrap(),
        0,
        &k,
        &v,
        "avar fixed",
    );
    check(
        &RiskMapping::semideviation_uniform(0.5, 1.0, 2).unwrap(),
        0,
        &k,
        &v,
        "semideviation fixed",
    );
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..200 {
        let n = rng.gen_range(2..=5);
        let x = rng.gen_range(0..n);
        // unit scale: the semideviation quotient error is first order with
        // constant 2κ|K(x|x)||Kv|, so the 1e-4 target at ε = 1e-5 needs it O(1)
        let mut k = random_direction(&mut rng, n, x);
        let out = -k[x];
        if out > 1.0 {
            k.iter_mut().for_each(|e| *e /= out);
        }
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        check(
            &random_avar(&mut rng, n),
            x,
            &k,
            &v,
            &format!("avar random #{i}"),
        );
        check(
            &random_semideviation(&mut rng, n, 1.0),
            x,
            &k,
            &v,
            &format!("semideviation random #{i}"),
        );
    }
    let worst_case = semi_derivative_fd_check(&RiskMapping::WorstCase, 0, &k, &v, &ladder).unwrap();
    outcome(
        failures.is_empty() && !worst_case.converged,
        format!(
            "402 ladders converge: {} (worst final error {worst_final:.3e}, tol 1e-4); worst-case mapping flagged divergent: {}",
            if failures.is_empty() { "yes".to_string() } else { format!("no, {failures:?}") },
            !worst_case.converged
        ),
    )
}

fn coherence_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 4;
    let m = random_measure(&mut rng, n);
    let mut lines = Vec::new();
    let mut pass = true;
    for spec in [
        RiskMapping::Expectation,
        random_avar(&mut rng, n),
        random_semideviation(&mut rng, n, 1.0),
        random_semideviation(&mut rng, n, 2.0),
    ] {
        let r = coherence_check(&spec, 1, &m, 10_000, 77).unwrap();
        let failures: usize = r.outcomes.iter().map(|o| o.failures).sum();
        pass &= r.passed() && r.outcome(Axiom::Convexity).checks == 10_000;
        lines.push(format!("{} {failures}", spec.kind()));
    }
    outcome(
        pass,
        format!(
            "counterexamples per family over 4x10^4 checks: {}",
            lines.join(", ")
        ),
    )
}

fn dp_convergence() -> Outcome {
    let ladder = [10, 20, 40, 80, 160];
    let mut pass = true;
    let mut lines = Vec::new();
    for (name, model) in example_models() {
        let avar = match &model.risk {
            spec @ RiskMapping::AverageValueAtRisk { .. } => spec.clone(),
            _ => RiskMapping::avar_uniform(0.5, model.n()).unwrap(),
        };
        for spec in [RiskMapping::Expectation, avar] {
            let reference = reference_solution(&model, &spec, &ladder).unwrap();
            let report = convergence_study(&model, &spec, &ladder, &reference).unwrap();
            let ok = report.strictly_decreasing()
                && (name != "two_state.json" || report.final_error() <= 1e-3);
            pass &= ok;
            lines.push(format!(
                "{name}/{}: {}",
                spec.kind(),
                report
                    .errors
                    .iter()
                    .map(|e| format!("{e:.2e}"))
                    .collect::<Vec<_>>()
                    .join(" > ")
            ));
        }
    }
    outcome(pass, lines.join("; "))
}

fn time_consistency() -> Outcome {
    let config = SolverConfig::new(Scheme::Rk4, 2000);
    let mut worst: f64 = 0.0;
    for (_, model) in example_models() {
        let avar = RiskMapping::avar_uniform(0.5, model.n()).unwrap();
        for spec in [RiskMapping::Expectation, avar, model.risk.clone()] {
            worst = worst.max(semigroup_check(&model, &spec, &config, 0.3, 0.7).unwrap());
        }
    }
    outcome(
        worst <= 1e-6,
        format!("max restart discrepancy {worst:.3e} (tol 1e-6)"),
    )
}

fn monte_carlo() -> Outcome {
    let model = load("two_state.json");
    let v = solve_ode(&model, &RiskMapping::Expectation, &SolverConfig::default()).unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    for x in 0..model.n() {
        let est = monte_carlo_cost(
            &model.generator,
            &model.cost,
            0.0,
            x,
            100_000,
            10 + x as u64,
        )
        .unwrap();
        let z = (est.mean - v.initial()[x]).abs() / est.std_error;
        pass &= z <= 3.0;
        lines.push(format!(
            "state {}: mean {:.5} vs {:.5} ({z:.2} se)",
            model.states.label(x),
            est.mean,
            v.initial()[x]
        ));
    }
    outcome(pass, lines.join(", "))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, Criterion); 10] = [
        ("1 Kolmogorov reduction", kolmogorov_reduction),
        ("2 AVaR ODE closed form", avar_closed_form),
        ("3 primal = dual", primal_equals_dual),
        ("4 state consistency", state_consistency),
        ("5 multigenerator closed forms", multigenerator_closed_forms),
        ("6 semi-derivative limit", semi_derivative_limit),
        ("7 coherence axioms", coherence_axioms),
        ("8 DP convergence", dp_convergence),
        ("9 time consistency", time_consistency),
        ("10 Monte Carlo cross-check", monte_carlo),
    ];
    let mut failed = Vec::new();
    println!();
    for (name, check) in criteria {
        let o = check();
        println!(
            "[{}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
