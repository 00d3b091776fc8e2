//! Property suites behind `markov-risk check`, run per state against the
//! model's risk mapping. The measure at state `x` is the row `Q_{0,T}(x)`.

use markov_risk::multigen::{semi_derivative_fd_check, FdReport};
use markov_risk::risk::{coherence_check, dual_support_bruteforce, DUAL_ORACLE_MAX_STATES};
use markov_risk::{sigma_eval, transition_matrix, MarkovModel, ProbMeasure, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMAL_DUAL_TOL: f64 = 1e-8;
const STATE_CONSISTENCY_TOL: f64 = 1e-12;
/// The numerical dual for `p > 1` is a lower bound up to its own tolerance.
const ASCENT_UPPER_TOL: f64 = 1e-6;
const ASCENT_LOWER_TOL: f64 = 1e-4;
const ASCENT_MAX_SAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Not applicable to this model: skipped oracle, or a mapping without a
    /// multigenerator whose quotients are only reported.
    Info,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Info => "n/a",
        }
    }
}

pub struct Line {
    pub suite: String,
    pub state: usize,
    pub checks: usize,
    pub failures: usize,
    pub max_error: Option<f64>,
    pub verdict: Verdict,
}

pub struct Outcome {
    pub lines: Vec<Line>,
    /// Per-state finite-difference ladders.
    pub fd: Vec<(usize, FdReport)>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.verdict != Verdict::Fail)
    }
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

pub fn run(model: &MarkovModel, samples: usize, seed: u64, ladder: &[f64]) -> Result<Outcome> {
    let n = model.n();
    let spec = &model.risk;
    let q = transition_matrix(&model.generator, 0.0, model.horizon())?;
    let mut lines = Vec::new();
    let mut fd = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw =
        |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect() };

    for x in 0..n {
        let m = ProbMeasure::new(q.row(x))?;

        let report = coherence_check(spec, x, &m, samples, seed.wrapping_add(x as u64))?;
        for o in &report.outcomes {
            lines.push(Line {
                suite: format!("coherence/{}", o.axiom.name()),
                state: x,
                checks: o.checks,
                failures: o.failures,
                max_error: None,
                verdict: verdict(o.failures == 0),
            });
        }

        let dirac = ProbMeasure::dirac(n, x);
        let (mut worst, mut failures): (f64, usize) = (0.0, 0);
        for _ in 0..samples {
            let v = draw(&mut rng);
            let err = (sigma_eval(spec, x, &dirac, &v)? - v[x]).abs();
            worst = worst.max(err);
            failures += usize::from(err > STATE_CONSISTENCY_TOL);
        }
        lines.push(Line {
            suite: "state_consistency".into(),
            state: x,
            checks: samples,
            failures,
            max_error: Some(worst),
            verdict: verdict(failures == 0),
        });

        if n > DUAL_ORACLE_MAX_STATES {
            lines.push(Line {
                suite: "primal_dual".into(),
                state: x,
                checks: 0,
                failures: 0,
                max_error: None,
                verdict: Verdict::Info,
            });
        } else {
            let exact_dual = spec.has_multigenerator();
            let count = if exact_dual {
                samples
            } else {
                samples.min(ASCENT_MAX_SAMPLES)
            };
            let (mut worst, mut failures): (f64, usize) = (0.0, 0);
            for _ in 0..count {
                let v = draw(&mut rng);
                let primal = sigma_eval(spec, x, &m, &v)?;
                let dual = dual_support_bruteforce(spec, x, &m, &v)?.value;
                worst = worst.max((primal - dual).abs());
                let ok = if exact_dual {
                    (primal - dual).abs() <= PRIMAL_DUAL_TOL
                } else {
                    dual <= primal + ASCENT_UPPER_TOL && dual >= primal - ASCENT_LOWER_TOL
                };
                failures += usize::from(!ok);
            }
            lines.push(Line {
                suite: "primal_dual".into(),
                state: x,
                checks: count,
                failures,
                max_error: Some(worst),
                verdict: verdict(failures == 0),
            });
        }

        let k: Vec<f64> = (0..n)
            .map(|y| model.generator.piece_at(0.0)[(x, y)])
            .collect();
        let report = semi_derivative_fd_check(spec, x, &k, model.cost.terminal(), ladder)?;
        let last = report.rows.last().and_then(|r| r.abs_error);
        lines.push(Line {
            suite: "semi_derivative".into(),
            state: x,
            checks: report.rows.len(),
            failures: usize::from(!report.converged),
            max_error: last,
            verdict: if spec.has_multigenerator() {
                verdict(report.converged)
            } else {
                Verdict::Info
            },
        });
        fd.push((x, report));
    }
    Ok(Outcome { lines, fd })
}
