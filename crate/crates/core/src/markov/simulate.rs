use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cost::CostSpec;
use super::generator::{check_interval, GeneratorSchedule};
use crate::error::{Error, Result};

/// One sampled trajectory of the chain on `[t, r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub start: usize,
    /// Strictly increasing jump times inside `(t, r]`.
    pub jump_times: Vec<f64>,
    /// `states[0] == start`; `states[k + 1]` is entered at `jump_times[k]`.
    pub states: Vec<usize>,
    /// `∫_t^r c_τ(X_τ) dτ` along the path (terminal cost excluded).
    pub running_cost: f64,
}

impl PathSample {
    pub fn final_state(&self) -> usize {
        *self.states.last().expect("path holds its start state")
    }
}

/// Samples a path with exponential holding times. Within each generator
/// piece, events are proposed at the piece's maximal exit rate and accepted
/// as jumps with probability `exit(x) / Λ` (thinning).
pub fn simulate_path_with<R: Rng + ?Sized>(
    schedule: &GeneratorSchedule,
    cost: &CostSpec,
    t: f64,
    r: f64,
    start: usize,
    rng: &mut R,
) -> Result<PathSample> {
    let (t, r) = check_interval(schedule.horizon(), t, r)?;
    let n = schedule.n();
    if start >= n {
        return Err(Error::Domain(format!("state {start} outside 0..{n}")));
    }
    let mut path = PathSample {
        start,
        jump_times: Vec::new(),
        states: vec![start],
        running_cost: 0.0,
    };
    let mut now = t;
    let mut state = start;
    let mut sojourn_start = t;
    while now < r {
        let k = schedule.piece_index_at(now);
        let end = schedule
            .breakpoints()
            .get(k + 1)
            .copied()
            .unwrap_or(r)
            .min(r);
        let g = &schedule.pieces()[k];
        let lambda = (0..n).map(|x| -g[(x, x)]).fold(0.0, f64::max);
        if lambda <= 0.0 {
            now = end;
            continue;
        }
        loop {
            // 1 - U lies in (0, 1], so the log is finite
            let u: f64 = rng.gen();
            let proposal = now - (1.0 - u).ln() / lambda;
            if proposal >= end {
                now = end;
                break;
            }
            now = proposal;
            let mut pick = rng.gen::<f64>() * lambda;
            let mut target = None;
            for y in (0..n).filter(|&y| y != state) {
                let rate = g[(state, y)];
                if pick < rate {
                    target = Some(y);
                    break;
                }
                pick -= rate;
            }
            if let Some(y) = target {
                path.running_cost += cost.integral(state, sojourn_start, now);
                path.jump_times.push(now);
                path.states.push(y);
                state = y;
                sojourn_start = now;
            }
        }
    }
    path.running_cost += cost.integral(state, sojourn_start, r);
    Ok(path)
}

/// [`simulate_path_with`] driven by a ChaCha8 stream seeded from `seed`.
pub fn simulate_path(
    schedule: &GeneratorSchedule,
    cost: &CostSpec,
    t: f64,
    r: f64,
    start: usize,
    seed: u64,
) -> Result<PathSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_path_with(schedule, cost, t, r, start, &mut rng)
}

/// Sample mean and standard error of `running cost + f(X_r)` over
/// `samples` paths started from `start` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

pub fn monte_carlo_cost(
    schedule: &GeneratorSchedule,
    cost: &CostSpec,
    t: f64,
    start: usize,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    let totals = sample_costs(schedule, cost, t, start, samples, seed)?;
    Ok(summarize(&totals))
}

/// Total costs (running plus terminal) of `samples` independent paths.
pub fn sample_costs(
    schedule: &GeneratorSchedule,
    cost: &CostSpec,
    t: f64,
    start: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(Error::Config("sample count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = schedule.horizon();
    (0..samples)
        .map(|_| {
            simulate_path_with(schedule, cost, t, r, start, &mut rng)
                .map(|p| p.running_cost + cost.terminal()[p.final_state()])
        })
        .collect()
}

pub fn summarize(totals: &[f64]) -> MonteCarloEstimate {
    let m = totals.len() as f64;
    let mean = totals.iter().sum::<f64>() / m;
    let var = if totals.len() > 1 {
        totals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    MonteCarloEstimate {
        mean,
        std_error: (var / m).sqrt(),
        samples: totals.len(),
    }
}
