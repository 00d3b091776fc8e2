//! Backward integration of `dv_t(x)/dt = -c_t(x) - s_t(x, v_t)`, `v_T = f`.
//!
//! `s_t(x, ·)` is the support function of the risk multigenerator built
//! from row `x` of the generator piece active at `t`. In the risk-neutral
//! case this is the classical backward Kolmogorov system, whose exact
//! solution [`kolmogorov_reference`] computes independently.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::markov::{check_interval, expm_scaled};
use crate::model::MarkovModel;
use crate::multigen::support_unchecked;
use crate::risk::RiskMapping;

/// Subintervals per smooth segment in the Simpson quadrature of
/// [`kolmogorov_reference`].
const SIMPSON_PANELS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    Rk4,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Scheme::Euler),
            "rk4" => Ok(Scheme::Rk4),
            other => Err(Error::Config(format!(
                "unknown scheme {other:?} (expected euler or rk4)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Number of uniform steps over the horizon, before breakpoints are
    /// inserted.
    pub steps: usize,
    /// Lipschitz constant of the one-step risk functional, needed only by
    /// [`delta_bound`].
    pub lipschitz: Option<f64>,
    /// Integrability order `p >= 1` used by [`delta_bound`].
    pub order: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            scheme: Scheme::Rk4,
            steps: 1000,
            lipschitz: None,
            order: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn new(scheme: Scheme, steps: usize) -> Self {
        SolverConfig {
            scheme,
            steps,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("step count must be at least 1".into()));
        }
        if let Some(l) = self.lipschitz {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::Config(format!(
                    "Lipschitz constant {l} must be positive"
                )));
            }
        }
        if !(self.order.is_finite() && self.order >= 1.0) {
            return Err(Error::Config(format!(
                "order p = {} must be >= 1",
                self.order
            )));
        }
        Ok(())
    }
}

/// Strictly increasing integration nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    uniform: bool,
}

impl TimeGrid {
    pub fn uniform(start: f64, end: f64, steps: usize) -> Result<Self> {
        Self::with_breakpoints(start, end, steps, std::iter::empty())
    }

    /// A uniform grid with `extra` points inserted. Points within
    /// `1e-9` steps of an existing node replace that node.
    pub fn with_breakpoints(
        start: f64,
        end: f64,
        steps: usize,
        extra: impl IntoIterator<Item = f64>,
    ) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Config("grid needs at least one step".into()));
        }
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(Error::Domain(format!(
                "invalid grid interval [{start}, {end}]"
            )));
        }
        let h = (end - start) / steps as f64;
        let mut nodes: Vec<f64> = (0..=steps).map(|i| start + i as f64 * h).collect();
        nodes[steps] = end;
        let mut uniform = true;
        for b in extra {
            if !(b > start && b < end) {
                continue;
            }
            let i = nodes.partition_point(|&t| t < b);
            let snap = 1e-9 * h;
            if (nodes[i] - b).abs() <= snap {
                nodes[i] = b;
            } else if i > 0 && (b - nodes[i - 1]).abs() <= snap {
                nodes[i - 1] = b;
            } else {
                nodes.insert(i, b);
                uniform = false;
            }
        }
        Ok(TimeGrid { nodes, uniform })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// The common step, for uniform grids.
    pub fn step(&self) -> Option<f64> {
        self.uniform
            .then(|| (self.end() - self.start()) / (self.nodes.len() - 1) as f64)
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        *self.nodes.last().expect("grid has nodes")
    }

    /// Index of the node equal to `t` up to `1e-12` relative rounding.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * self.end().abs().max(1.0);
        let i = self.nodes.partition_point(|&s| s < t - tol);
        (i < self.nodes.len() && (self.nodes[i] - t).abs() <= tol).then_some(i)
    }
}

/// `v_t(x)` on a grid; `values[i][x]` belongs to node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub grid: TimeGrid,
    pub values: Vec<Vec<f64>>,
}

impl ValueFunction {
    pub fn at_node(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn initial(&self) -> &[f64] {
        &self.values[0]
    }

    pub fn terminal(&self) -> &[f64] {
        self.values.last().expect("value function has nodes")
    }

    pub fn at_time(&self, t: f64) -> Option<&[f64]> {
        self.grid.index_of(t).map(|i| self.at_node(i))
    }

    pub fn sup_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0, |a, v| a.max(v.abs()))
    }
}

fn check_spec(model: &MarkovModel, spec: &RiskMapping) -> Result<()> {
    spec.validate(model.n())?;
    if !spec.has_multigenerator() {
        return Err(Error::Config(format!(
            "the backward ODE needs a multigenerator; {} mapping{} has none, \
             use the discrete-time recursion (dp) instead",
            spec.kind(),
            match spec {
                RiskMapping::MeanSemideviation { p, .. } => format!(" of order p = {p}"),
                _ => String::new(),
            }
        )));
    }
    model.ensure_valid()
}

/// Solves the backward system on `[0, T]` from `v_T = f`.
pub fn solve_ode(
    model: &MarkovModel,
    spec: &RiskMapping,
    config: &SolverConfig,
) -> Result<ValueFunction> {
    config.validate()?;
    check_spec(model, spec)?;
    let grid = TimeGrid::with_breakpoints(
        0.0,
        model.horizon(),
        config.steps,
        model.generator.breakpoints().iter().copied(),
    )?;
    integrate(model, spec, config.scheme, grid, model.cost.terminal())
}

/// Solves the backward system on `[t, r]` from `v_r = terminal`, with
/// `config.steps` uniform steps on that interval.
pub fn solve_on_interval(
    model: &MarkovModel,
    spec: &RiskMapping,
    config: &SolverConfig,
    t: f64,
    r: f64,
    terminal: &[f64],
) -> Result<ValueFunction> {
    config.validate()?;
    check_spec(model, spec)?;
    let (t, r) = check_interval(model.horizon(), t, r)?;
    if terminal.len() != model.n() {
        return Err(Error::Dimension(format!(
            "terminal data has {} entries, model has {} states",
            terminal.len(),
            model.n()
        )));
    }
    let grid = TimeGrid::with_breakpoints(
        t,
        r,
        config.steps,
        model.generator.interior_breakpoints(t, r),
    )?;
    integrate(model, spec, config.scheme, grid, terminal)
}

/// Right-hand side of the time-reversed system: `c_t(x) + s(x, G_x, v)`.
struct Rhs<'a> {
    model: &'a MarkovModel,
    spec: &'a RiskMapping,
    rows: Vec<Vec<f64>>,
}

impl Rhs<'_> {
    fn eval(&self, t: f64, v: &[f64], out: &mut [f64]) {
        for (x, o) in out.iter_mut().enumerate() {
            let s =
                support_unchecked(self.spec, x, &self.rows[x], v).expect("spec checked by caller");
            *o = self.model.cost.rate(t, x) + s;
        }
    }
}

fn integrate(
    model: &MarkovModel,
    spec: &RiskMapping,
    scheme: Scheme,
    grid: TimeGrid,
    terminal: &[f64],
) -> Result<ValueFunction> {
    let n = model.n();
    let nodes = grid.nodes().to_vec();
    let mut values = vec![Vec::new(); nodes.len()];
    let last = nodes.len() - 1;
    values[last] = terminal.to_vec();

    let piece_rows = |k: usize| -> Vec<Vec<f64>> {
        let g = &model.generator.pieces()[k];
        g.row_iter().map(|r| r.iter().copied().collect()).collect()
    };
    let mut current_piece = usize::MAX;
    let mut rhs = Rhs {
        model,
        spec,
        rows: Vec::new(),
    };

    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for i in (0..last).rev() {
        let (a, b) = (nodes[i], nodes[i + 1]);
        let h = b - a;
        let piece = model.generator.piece_index_at(0.5 * (a + b));
        if piece != current_piece {
            rhs.rows = piece_rows(piece);
            current_piece = piece;
        }
        let v = &values[i + 1];
        let next: Vec<f64> = match scheme {
            Scheme::Euler => {
                rhs.eval(b, v, &mut k1);
                v.iter().zip(&k1).map(|(v, k)| v + h * k).collect()
            }
            Scheme::Rk4 => {
                let mid = b - 0.5 * h;
                rhs.eval(b, v, &mut k1);
                for x in 0..n {
                    tmp[x] = v[x] + 0.5 * h * k1[x];
                }
                rhs.eval(mid, &tmp, &mut k2);
                for x in 0..n {
                    tmp[x] = v[x] + 0.5 * h * k2[x];
                }
                rhs.eval(mid, &tmp, &mut k3);
                for x in 0..n {
                    tmp[x] = v[x] + h * k3[x];
                }
                rhs.eval(a, &tmp, &mut k4);
                (0..n)
                    .map(|x| v[x] + h / 6.0 * (k1[x] + 2.0 * k2[x] + 2.0 * k3[x] + k4[x]))
                    .collect()
            }
        };
        if let Some(bad) = next.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "solution became non-finite ({bad}) at t = {a}"
            )));
        }
        values[i] = next;
    }
    Ok(ValueFunction { grid, values })
}

/// Exact risk-neutral value `Q_{t,T} f + ∫_t^T Q_{t,τ} c_τ dτ`, using matrix
/// exponentials and composite Simpson quadrature on each interval where
/// both the generator and the running-cost slope are constant.
pub fn kolmogorov_reference(model: &MarkovModel, t: f64) -> Result<Vec<f64>> {
    model.ensure_valid()?;
    let horizon = model.horizon();
    let (t, _) = check_interval(horizon, t, horizon)?;
    let n = model.n();

    let mut cuts: Vec<f64> = vec![t, horizon];
    cuts.extend(model.generator.interior_breakpoints(t, horizon));
    cuts.extend(
        model
            .cost
            .times()
            .iter()
            .copied()
            .filter(|&s| s > t && s < horizon),
    );
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut q = nalgebra::DMatrix::<f64>::identity(n, n);
    let mut integral = vec![0.0; n];
    let apply = |q: &nalgebra::DMatrix<f64>, c: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|x| (0..n).map(|y| q[(x, y)] * c[y]).sum())
            .collect()
    };
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let g = model.generator.piece_at(0.5 * (a + b));
        let h = (b - a) / SIMPSON_PANELS as f64;
        let step = expm_scaled(g, h);
        for j in 0..=SIMPSON_PANELS {
            let weight = if j == 0 || j == SIMPSON_PANELS {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let tau = if j == SIMPSON_PANELS {
                b
            } else {
                a + j as f64 * h
            };
            let qc = apply(&q, &model.cost.rates(tau));
            for x in 0..n {
                integral[x] += weight * h / 3.0 * qc[x];
            }
            if j < SIMPSON_PANELS {
                q = &q * &step;
            }
        }
    }
    let qf = apply(&q, model.cost.terminal());
    Ok((0..n).map(|x| qf[x] + integral[x]).collect())
}

/// `max_x |v_t(x) - w_t(x)|`, where `v` is the full-horizon solution and
/// `w` restarts on `[t, r]` from `v_r`, discretized independently with
/// `config.steps` steps on the shorter interval.
pub fn semigroup_check(
    model: &MarkovModel,
    spec: &RiskMapping,
    config: &SolverConfig,
    t: f64,
    r: f64,
) -> Result<f64> {
    config.validate()?;
    check_spec(model, spec)?;
    let (t, r) = check_interval(model.horizon(), t, r)?;
    if t == r {
        return Ok(0.0);
    }
    let grid = TimeGrid::with_breakpoints(
        0.0,
        model.horizon(),
        config.steps,
        model.generator.breakpoints().iter().copied().chain([t, r]),
    )?;
    let full = integrate(model, spec, config.scheme, grid, model.cost.terminal())?;
    let v_r = full.at_time(r).expect("r inserted into grid").to_vec();
    let v_t = full.at_time(t).expect("t inserted into grid");
    let restart = solve_on_interval(model, spec, config, t, r, &v_r)?;
    Ok(v_t
        .iter()
        .zip(restart.initial())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Bound on the error of freezing the state over `[t, r]`:
/// `L p K_c λ^{1/p} / (p + 1) · (r - t)^{(p+1)/p}`, with `K_c` the largest
/// spread of running-cost rates across states and `λ` the largest
/// transition rate.
pub fn delta_bound(model: &MarkovModel, config: &SolverConfig, t: f64, r: f64) -> Result<f64> {
    config.validate()?;
    let lipschitz = config
        .lipschitz
        .ok_or_else(|| Error::Config("delta bound needs a Lipschitz constant".into()))?;
    let (t, r) = check_interval(model.horizon(), t, r)?;
    let p = config.order;
    Ok(delta_formula(
        lipschitz,
        p,
        model.cost.state_spread(),
        model.generator.max_rate(),
        r - t,
    ))
}

pub(crate) fn delta_formula(lipschitz: f64, p: f64, spread: f64, rate: f64, length: f64) -> f64 {
    lipschitz * p * spread * rate.powf(p.recip()) / (p + 1.0) * length.powf((p + 1.0) / p)
}
