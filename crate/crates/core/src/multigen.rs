//! Support functions of risk multigenerators.
//!
//! For a transition risk mapping `σ` and a tangent direction `K` (a
//! generator row at state `x`), the multigenerator `G(x)` is the set of
//! signed measures `D` obtained as limits of `[A(x, δ_x + εK) - δ_x] / ε`.
//! The backward equation only needs its support function
//! `s(v) = max_{D ∈ G(x)} Σ_y v(y) D(y)`, which has closed forms for the
//! expectation, AVaR and first-order semideviation families:
//!
//! * expectation: `s(v) = Σ_y K(y) v(y)`;
//! * AVaR: `D(y) ∈ [0, K(y)/α]` off the diagonal with zero row sum, so
//!   `s(v) = α^{-1} Σ_{y≠x} K(y) (v(y) - v(x))_+`;
//! * semideviation, `p = 1`: `D(y) = K(y)(1 + Φ(y) - Φ(x))` off the
//!   diagonal, `D(x) = K(x) - Σ_z K(z) Φ(z)`, `Φ ∈ [0, κ]^n`. The objective
//!   is `Kv + Σ_{y≠x} Φ(y) K(y)(v(y) - v(x)) - Φ(x) Kv`, maximized
//!   entrywise: `s(v) = Kv + κ Σ_{y≠x} K(y)(v(y) - v(x))_+ + κ (Kv)_-`.

use crate::error::{Error, Result};
use crate::markov::ROW_SUM_REL_TOL;
use crate::risk::{sigma_eval, ProbMeasure, RiskMapping};

/// Largest state count accepted by [`support_bruteforce`].
pub const SUPPORT_ORACLE_MAX_STATES: usize = 6;

/// Errors below this level are treated as rounding noise when judging
/// whether finite-difference quotients converge.
pub const FD_NOISE_FLOOR: f64 = 1e-9;

/// Required accuracy of the last quotient in a converging ladder.
pub const FD_FINAL_TOL: f64 = 1e-4;

/// A support-function query: mapping, state, direction row and values.
#[derive(Debug, Clone, Copy)]
pub struct MultigeneratorQuery<'a> {
    pub spec: &'a RiskMapping,
    pub x: usize,
    pub direction: &'a [f64],
    pub values: &'a [f64],
}

impl<'a> MultigeneratorQuery<'a> {
    /// Checks dimensions and the row-local tangent-cone conditions
    /// `K(x|x) <= 0`, `K(y|x) >= 0` for `y != x`, `Σ_y K(y|x) = 0`.
    pub fn new(
        spec: &'a RiskMapping,
        x: usize,
        direction: &'a [f64],
        values: &'a [f64],
    ) -> Result<Self> {
        let n = direction.len();
        if values.len() != n {
            return Err(Error::Dimension(format!(
                "direction has {n} entries, values {}",
                values.len()
            )));
        }
        if x >= n {
            return Err(Error::Domain(format!("state {x} outside 0..{n}")));
        }
        spec.validate(n)?;
        check_direction(x, direction)?;
        Ok(MultigeneratorQuery {
            spec,
            x,
            direction,
            values,
        })
    }

    pub fn support(&self) -> Result<f64> {
        support_unchecked(self.spec, self.x, self.direction, self.values)
    }
}

fn check_direction(x: usize, k: &[f64]) -> Result<()> {
    if let Some((y, v)) = k.iter().enumerate().find(|(y, v)| *y != x && **v < 0.0) {
        return Err(Error::Domain(format!(
            "direction entry {y} = {v} is negative"
        )));
    }
    if k[x] > 0.0 {
        return Err(Error::Domain(format!(
            "diagonal direction entry {} is positive",
            k[x]
        )));
    }
    let scale = k.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let sum: f64 = k.iter().sum();
    if sum.abs() > ROW_SUM_REL_TOL * k.len() as f64 * scale {
        return Err(Error::Domain(format!("direction sums to {sum}, not 0")));
    }
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("direction has non-finite entries".into()));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// `Σ_{y≠x} K(y) (v(y) - v(x))_+`.
fn upward_flux(x: usize, k: &[f64], v: &[f64]) -> f64 {
    k.iter()
        .zip(v)
        .enumerate()
        .filter(|(y, _)| *y != x)
        .map(|(_, (k, vy))| k * (vy - v[x]).max(0.0))
        .sum()
}

/// Risk-neutral support: `Σ_y K(y|x) v(y)`.
pub fn support_expectation(x: usize, k: &[f64], v: &[f64]) -> Result<f64> {
    MultigeneratorQuery::new(&RiskMapping::Expectation, x, k, v)?;
    Ok(dot(k, v))
}

/// AVaR support: `α(x)^{-1} Σ_{y≠x} K(y|x) (v(y) - v(x))_+`.
pub fn support_avar(spec: &RiskMapping, x: usize, k: &[f64], v: &[f64]) -> Result<f64> {
    if !matches!(spec, RiskMapping::AverageValueAtRisk { .. }) {
        return Err(Error::Config(format!(
            "support_avar called with a {} mapping",
            spec.kind()
        )));
    }
    MultigeneratorQuery::new(spec, x, k, v)?;
    Ok(upward_flux(x, k, v) / spec.alpha_at(x))
}

/// First-order mean–semideviation support:
/// `Kv + κ(x) Σ_{y≠x} K(y|x)(v(y) - v(x))_+ + κ(x) (Kv)_-`.
pub fn support_semidev_p1(spec: &RiskMapping, x: usize, k: &[f64], v: &[f64]) -> Result<f64> {
    match spec {
        RiskMapping::MeanSemideviation { p, .. } if *p == 1.0 => {}
        RiskMapping::MeanSemideviation { p, .. } => {
            return Err(Error::Config(format!(
                "semideviation multigenerator is only available for p = 1 (got p = {p})"
            )))
        }
        other => {
            return Err(Error::Config(format!(
                "support_semidev_p1 called with a {} mapping",
                other.kind()
            )))
        }
    }
    MultigeneratorQuery::new(spec, x, k, v)?;
    Ok(support_unchecked(spec, x, k, v).expect("p = 1 checked above"))
}

/// Dispatches to the closed form for `spec`.
pub fn support_function(spec: &RiskMapping, x: usize, k: &[f64], v: &[f64]) -> Result<f64> {
    MultigeneratorQuery::new(spec, x, k, v)?.support()
}

/// Closed-form support without argument validation; used in the solver
/// inner loop.
pub(crate) fn support_unchecked(spec: &RiskMapping, x: usize, k: &[f64], v: &[f64]) -> Result<f64> {
    match spec {
        RiskMapping::Expectation => Ok(dot(k, v)),
        RiskMapping::AverageValueAtRisk { alpha } => Ok(upward_flux(x, k, v) / alpha[x]),
        RiskMapping::MeanSemideviation { kappa, p } if *p == 1.0 => {
            let kv = dot(k, v);
            Ok(kv + kappa[x] * (upward_flux(x, k, v) + (-kv).max(0.0)))
        }
        RiskMapping::MeanSemideviation { p, .. } => Err(Error::Config(format!(
            "no closed-form multigenerator for semideviation of order p = {p}; \
             use the discrete-time recursion instead"
        ))),
        RiskMapping::WorstCase => Err(Error::Config(
            "the worst-case mapping is not semi-differentiable and has no multigenerator".into(),
        )),
    }
}

/// Maximizes `Σ_y v(y) D(y)` over the multigenerator by enumerating the
/// vertices of its defining box: `D(y) ∈ {0, K(y)/α}` for AVaR, and
/// `Φ ∈ {0, κ}^n` pushed through the semideviation parameterization.
pub fn support_bruteforce(spec: &RiskMapping, x: usize, k: &[f64], v: &[f64]) -> Result<f64> {
    MultigeneratorQuery::new(spec, x, k, v)?;
    let n = k.len();
    if n > SUPPORT_ORACLE_MAX_STATES {
        return Err(Error::Scale {
            n,
            limit: SUPPORT_ORACLE_MAX_STATES,
        });
    }
    let others: Vec<usize> = (0..n).filter(|&y| y != x).collect();
    match spec {
        RiskMapping::Expectation => Ok(dot(k, v)),
        RiskMapping::AverageValueAtRisk { alpha } => {
            let mut best = f64::NEG_INFINITY;
            for mask in 0u32..(1 << others.len()) {
                let mut d = vec![0.0; n];
                for (bit, &y) in others.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        d[y] = k[y] / alpha[x];
                    }
                }
                d[x] = -others.iter().map(|&y| d[y]).sum::<f64>();
                best = best.max(dot(&d, v));
            }
            Ok(best)
        }
        RiskMapping::MeanSemideviation { kappa, p } if *p == 1.0 => {
            let mut best = f64::NEG_INFINITY;
            for mask in 0u32..(1 << n) {
                let phi: Vec<f64> = (0..n)
                    .map(|y| if mask & (1 << y) != 0 { kappa[x] } else { 0.0 })
                    .collect();
                let mut d = vec![0.0; n];
                for &y in &others {
                    d[y] = k[y] * (1.0 + phi[y] - phi[x]);
                }
                d[x] = k[x] - dot(k, &phi);
                best = best.max(dot(&d, v));
            }
            Ok(best)
        }
        _ => support_unchecked(spec, x, k, v),
    }
}

/// Upper bound on the total-variation mass of multigenerator elements, a
/// Lipschitz constant of `v ↦ s(v)` in the sup norm.
pub fn support_lipschitz_bound(spec: &RiskMapping, x: usize, k: &[f64]) -> Result<f64> {
    let out: f64 = k
        .iter()
        .enumerate()
        .filter(|(y, _)| *y != x)
        .map(|(_, k)| k)
        .sum();
    match spec {
        RiskMapping::Expectation => Ok(2.0 * out),
        RiskMapping::AverageValueAtRisk { alpha } => Ok(2.0 * out / alpha[x]),
        RiskMapping::MeanSemideviation { kappa, p } if *p == 1.0 => {
            Ok(2.0 * (1.0 + kappa[x]) * out)
        }
        _ => Err(Error::Config(format!(
            "no multigenerator for the {} mapping",
            spec.kind()
        ))),
    }
}

/// One rung of a finite-difference ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdRow {
    pub epsilon: f64,
    /// `[σ(x, δ_x + εK, v) - v(x)] / ε`.
    pub quotient: f64,
    /// The support-function value, when a closed form exists.
    pub target: Option<f64>,
    /// `|quotient - target|`, or the change from the previous quotient when
    /// there is no target (undefined on the first rung).
    pub abs_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub rows: Vec<FdRow>,
    pub converged: bool,
}

/// Compares difference quotients of `ε ↦ σ(x, δ_x + εK, v)` at `ε = 0+`
/// with the multigenerator support function.
///
/// The ladder must be strictly decreasing and stay within the step size
/// `1/|K(x|x)|` that keeps `δ_x + εK` a probability measure. Convergence
/// means the errors never grow (ignoring changes below
/// [`FD_NOISE_FLOOR`]) and the last error is at most [`FD_FINAL_TOL`].
/// Mappings without a multigenerator are judged by the Cauchy criterion on
/// successive quotients instead.
pub fn semi_derivative_fd_check(
    spec: &RiskMapping,
    x: usize,
    k: &[f64],
    v: &[f64],
    ladder: &[f64],
) -> Result<FdReport> {
    let query = MultigeneratorQuery::new(spec, x, k, v)?;
    if ladder.is_empty() {
        return Err(Error::Config("empty epsilon ladder".into()));
    }
    if ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(
            "epsilon ladder must be strictly decreasing".into(),
        ));
    }
    let max_step = if k[x] == 0.0 {
        f64::INFINITY
    } else {
        1.0 / k[x].abs()
    };
    if let Some(e) = ladder.iter().find(|&&e| !(e > 0.0 && e <= max_step)) {
        return Err(Error::Domain(format!(
            "epsilon {e} outside (0, {max_step}]: δ_x + εK is not a probability measure"
        )));
    }
    let target = if spec.has_multigenerator() {
        Some(query.support()?)
    } else {
        None
    };
    let n = k.len();
    let mut rows = Vec::with_capacity(ladder.len());
    let mut previous: Option<f64> = None;
    for &eps in ladder {
        let mut m: Vec<f64> = k.iter().map(|k| eps * k).collect();
        m[x] += 1.0;
        // δ_x + εK: the diagonal entry 1 + εK(x|x) absorbs the row-sum residue
        let resid: f64 = m.iter().sum::<f64>() - 1.0;
        m[x] -= resid;
        let m = ProbMeasure::new(m)?;
        debug_assert_eq!(m.n(), n);
        let quotient = (sigma_eval(spec, x, &m, v)? - v[x]) / eps;
        let abs_error = match (target, previous) {
            (Some(t), _) => Some((quotient - t).abs()),
            (None, Some(prev)) => Some((quotient - prev).abs()),
            (None, None) => None,
        };
        rows.push(FdRow {
            epsilon: eps,
            quotient,
            target,
            abs_error,
        });
        previous = Some(quotient);
    }
    let errors: Vec<f64> = rows.iter().filter_map(|r| r.abs_error).collect();
    let converged = !errors.is_empty()
        && errors
            .windows(2)
            .all(|w| w[1] <= w[0] || w[1] <= FD_NOISE_FLOOR)
        && *errors.last().expect("nonempty") <= FD_FINAL_TOL;
    Ok(FdReport { rows, converged })
}
