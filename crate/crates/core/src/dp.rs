//! Discrete-time dynamic programming on the chain observed at
//! `t_i = i T / N`, and its convergence to the backward ODE solution.

use crate::error::{Error, Result};
use crate::markov::{transition_matrix, StochasticKernel};
use crate::model::MarkovModel;
use crate::risk::{sigma_unchecked, ProbMeasure, RiskMapping};
use crate::solver::{solve_ode, Scheme, SolverConfig, ValueFunction};

/// Values `v^N_{t_i}(x)` of the discrete-time recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct DPResult {
    pub steps: usize,
    pub times: Vec<f64>,
    /// `values[i][x]` at `times[i]`.
    pub values: Vec<Vec<f64>>,
}

impl DPResult {
    pub fn step(&self) -> f64 {
        (self.times[self.steps] - self.times[0]) / self.steps as f64
    }

    /// Linear interpolation in time between the bracketing grid values.
    pub fn interpolate(&self, t: f64) -> Result<Vec<f64>> {
        let (lo, hi) = (self.times[0], self.times[self.steps]);
        let slack = 1e-12 * hi.abs().max(1.0);
        if !(t >= lo - slack && t <= hi + slack) {
            return Err(Error::Domain(format!("time {t} outside [{lo}, {hi}]")));
        }
        let t = t.clamp(lo, hi);
        let i = (self.times.partition_point(|&s| s <= t).max(1) - 1).min(self.steps - 1);
        let (a, b) = (self.times[i], self.times[i + 1]);
        if t == a {
            return Ok(self.values[i].clone());
        }
        if t == b {
            return Ok(self.values[i + 1].clone());
        }
        let w = (t - a) / (b - a);
        Ok(self.values[i]
            .iter()
            .zip(&self.values[i + 1])
            .map(|(u, v)| (1.0 - w) * u + w * v)
            .collect())
    }

    /// `max_i ‖v_{t_{i+1}} - v_{t_i}‖_∞ / ε`, the Lipschitz constant of the
    /// interpolant in time.
    pub fn time_lipschitz(&self) -> f64 {
        let eps = self.step();
        self.values
            .windows(2)
            .map(|w| {
                w[0].iter()
                    .zip(&w[1])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
            / eps
    }
}

/// `v_{t_i}(x) = ε c_{t_i}(x) + σ(x, Q_{t_i, t_{i+1}}(x), v_{t_{i+1}})`,
/// `v_T = f`. Any risk mapping is accepted.
pub fn dp_recursion(model: &MarkovModel, spec: &RiskMapping, steps: usize) -> Result<DPResult> {
    if steps == 0 {
        return Err(Error::Config("step count must be at least 1".into()));
    }
    spec.validate(model.n())?;
    model.ensure_valid()?;
    let n = model.n();
    let horizon = model.horizon();
    let eps = horizon / steps as f64;
    let mut times: Vec<f64> = (0..=steps).map(|i| i as f64 * eps).collect();
    times[steps] = horizon;

    let mut values = vec![Vec::new(); steps + 1];
    values[steps] = model.cost.terminal().to_vec();
    // steps inside a single generator piece share their transition kernel
    let mut cached: Option<(usize, StochasticKernel)> = None;
    for i in (0..steps).rev() {
        let (a, b) = (times[i], times[i + 1]);
        let ka = model.generator.piece_index_at(a);
        let single_piece = model.generator.interior_breakpoints(a, b).next().is_none();
        let q = match &cached {
            Some((k, q)) if single_piece && *k == ka => q.clone(),
            _ => {
                let q = transition_matrix(&model.generator, a, b)?;
                if single_piece {
                    cached = Some((ka, q.clone()));
                }
                q
            }
        };
        let next = &values[i + 1];
        let mut row = Vec::with_capacity(n);
        for x in 0..n {
            let m = ProbMeasure::new(q.row(x))?;
            row.push(eps * model.cost.rate(a, x) + sigma_unchecked(spec, x, m.weights(), next));
        }
        values[i] = row;
    }
    Ok(DPResult {
        steps,
        times,
        values,
    })
}

/// Sup-norm errors of the interpolated recursion against a reference
/// solution along a ladder of step counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub ladder: Vec<usize>,
    pub errors: Vec<f64>,
    /// `log(err_{k-1} / err_k) / log(N_k / N_{k-1})`; `None` on the first
    /// rung or when an error vanishes.
    pub orders: Vec<Option<f64>>,
}

impl ConvergenceReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }

    pub fn final_error(&self) -> f64 {
        *self.errors.last().expect("nonempty ladder")
    }
}

/// Evaluates `max_{j, x} |v^N_{t_j}(x) - v_{t_j}(x)|` over the reference
/// nodes `t_j` for every `N` in the ladder.
pub fn convergence_study(
    model: &MarkovModel,
    spec: &RiskMapping,
    ladder: &[usize],
    reference: &ValueFunction,
) -> Result<ConvergenceReport> {
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] <= w[0]) || ladder[0] == 0 {
        return Err(Error::Config(
            "ladder must be a strictly increasing list of positive step counts".into(),
        ));
    }
    if reference.values.first().map_or(0, Vec::len) != model.n() {
        return Err(Error::Dimension(
            "reference solution does not match the model".into(),
        ));
    }
    let mut errors = Vec::with_capacity(ladder.len());
    for &steps in ladder {
        let dp = dp_recursion(model, spec, steps)?;
        let mut worst: f64 = 0.0;
        for (j, &t) in reference.grid.nodes().iter().enumerate() {
            let approx = dp.interpolate(t)?;
            for (a, b) in approx.iter().zip(&reference.values[j]) {
                worst = worst.max((a - b).abs());
            }
        }
        errors.push(worst);
    }
    let mut orders = vec![None];
    for k in 1..ladder.len() {
        let (e0, e1) = (errors[k - 1], errors[k]);
        let ratio = ladder[k] as f64 / ladder[k - 1] as f64;
        orders.push((e0 > 0.0 && e1 > 0.0).then(|| (e0 / e1).ln() / ratio.ln()));
    }
    Ok(ConvergenceReport {
        ladder: ladder.to_vec(),
        errors,
        orders,
    })
}

/// Reference resolution used by [`reference_solution`], relative to the
/// finest ladder entry.
pub const REFERENCE_REFINEMENT: usize = 16;

/// RK4 solution at `REFERENCE_REFINEMENT ×` the finest ladder resolution.
pub fn reference_solution(
    model: &MarkovModel,
    spec: &RiskMapping,
    ladder: &[usize],
) -> Result<ValueFunction> {
    let finest = ladder.iter().copied().max().unwrap_or(1);
    solve_ode(
        model,
        spec,
        &SolverConfig::new(Scheme::Rk4, REFERENCE_REFINEMENT * finest),
    )
}
