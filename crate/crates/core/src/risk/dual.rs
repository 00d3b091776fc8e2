use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_args, ProbMeasure, RiskMapping, MEASURE_TOL};
use crate::error::{Error, Result};

/// Largest state count accepted by the brute-force dual oracle.
pub const DUAL_ORACLE_MAX_STATES: usize = 6;

/// Result of maximizing `Σ_y v(y) μ(y)` over the dual set `A(x, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSupport {
    pub value: f64,
    /// The maximizing measure found.
    pub maximizer: Vec<f64>,
    /// False when the value comes from numerical ascent and is only a lower
    /// bound up to the solver tolerance.
    pub exact: bool,
}

/// Membership of `μ` in the dual set `A(x, m)`.
///
/// States with `m(y) = 0` must carry `μ(y) = 0`. For the semideviation
/// family the admissible densities are `h = 1 + φ - E_m φ` with `φ >= 0`,
/// `‖φ‖_{q,m} <= κ(x)`; every `φ` reproducing a given `h` has the form
/// `h - 1 + c`, and the smallest feasible shift `c = 1 - min h` also
/// minimizes the norm, so the check reduces to `‖h - min h‖_{q,m} <= κ`.
pub fn dual_feasible(
    spec: &RiskMapping,
    x: usize,
    m: &ProbMeasure,
    mu: &ProbMeasure,
) -> Result<bool> {
    check_args(spec, x, m, mu.weights())?;
    let (m, mu) = (m.weights(), mu.weights());
    let null_ok = m
        .iter()
        .zip(mu)
        .all(|(&m, &mu)| m > 0.0 || mu <= MEASURE_TOL);
    Ok(match spec {
        RiskMapping::Expectation => m
            .iter()
            .zip(mu)
            .all(|(m, mu)| (m - mu).abs() <= MEASURE_TOL),
        RiskMapping::AverageValueAtRisk { alpha } => m
            .iter()
            .zip(mu)
            .all(|(m, mu)| *mu <= m / alpha[x] + MEASURE_TOL),
        RiskMapping::WorstCase => null_ok,
        RiskMapping::MeanSemideviation { kappa, p } => {
            if !null_ok {
                return Ok(false);
            }
            let support: Vec<(f64, f64)> = m
                .iter()
                .zip(mu)
                .filter(|(m, _)| **m > 0.0)
                .map(|(&m, &mu)| (m, mu / m))
                .collect();
            let h_min = support
                .iter()
                .map(|(_, h)| *h)
                .fold(f64::INFINITY, f64::min);
            let norm = if *p == 1.0 {
                support.iter().map(|(_, h)| h - h_min).fold(0.0, f64::max)
            } else {
                let q = p / (p - 1.0);
                support
                    .iter()
                    .map(|(m, h)| m * (h - h_min).powf(q))
                    .sum::<f64>()
                    .powf(q.recip())
            };
            norm <= kappa[x] + 1e-10
        }
    })
}

/// Maximizes `Σ_y v(y) μ(y)` over `μ ∈ A(x, m)` by methods independent of
/// the primal formulas: greedy filling for AVaR, vertex enumeration of the
/// `φ`-box for semideviation with `p = 1`, multistart projected ascent for
/// `p > 1`.
pub fn dual_support_bruteforce(
    spec: &RiskMapping,
    x: usize,
    m: &ProbMeasure,
    v: &[f64],
) -> Result<DualSupport> {
    check_args(spec, x, m, v)?;
    let n = m.n();
    if n > DUAL_ORACLE_MAX_STATES {
        return Err(Error::Scale {
            n,
            limit: DUAL_ORACLE_MAX_STATES,
        });
    }
    let w = m.weights();
    let dot = |mu: &[f64]| mu.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    Ok(match spec {
        RiskMapping::Expectation => DualSupport {
            value: dot(w),
            maximizer: w.to_vec(),
            exact: true,
        },
        RiskMapping::AverageValueAtRisk { alpha } => {
            let mu = avar_greedy(alpha[x], w, v);
            DualSupport {
                value: dot(&mu),
                maximizer: mu,
                exact: true,
            }
        }
        RiskMapping::WorstCase => {
            let best = (0..n)
                .filter(|&y| w[y] > 0.0)
                .fold(None, |acc: Option<usize>, y| match acc {
                    Some(b) if v[b] >= v[y] => Some(b),
                    _ => Some(y),
                })
                .expect("a probability measure has support");
            let mut mu = vec![0.0; n];
            mu[best] = 1.0;
            DualSupport {
                value: v[best],
                maximizer: mu,
                exact: true,
            }
        }
        RiskMapping::MeanSemideviation { kappa, p } if *p == 1.0 => {
            let mut best: Option<(f64, Vec<f64>)> = None;
            for mask in 0u32..(1 << n) {
                let phi: Vec<f64> = (0..n)
                    .map(|y| if mask & (1 << y) != 0 { kappa[x] } else { 0.0 })
                    .collect();
                let mu = density_measure(w, &phi);
                let val = dot(&mu);
                if best.as_ref().is_none_or(|(b, _)| val > *b) {
                    best = Some((val, mu));
                }
            }
            let (value, maximizer) = best.expect("at least one vertex");
            DualSupport {
                value,
                maximizer,
                exact: true,
            }
        }
        RiskMapping::MeanSemideviation { kappa, p } => {
            let q = p / (p - 1.0);
            let phi = semideviation_ascent(kappa[x], q, w, v);
            let mu = density_measure(w, &phi);
            DualSupport {
                value: dot(&mu),
                maximizer: mu,
                exact: false,
            }
        }
    })
}

/// Puts mass `m(y)/α` on states in decreasing order of `v` (ties by index)
/// until the unit mass is spent.
fn avar_greedy(alpha: f64, m: &[f64], v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..m.len()).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let mut mu = vec![0.0; m.len()];
    let mut remaining = 1.0_f64;
    for y in order {
        if remaining <= 0.0 {
            break;
        }
        let take = (m[y] / alpha).min(remaining);
        mu[y] = take;
        remaining -= take;
    }
    mu
}

/// `μ(y) = m(y) (1 + φ(y) - Σ_z φ(z) m(z))`.
fn density_measure(m: &[f64], phi: &[f64]) -> Vec<f64> {
    let shift: f64 = m.iter().zip(phi).map(|(m, p)| m * p).sum();
    m.iter()
        .zip(phi)
        .map(|(m, p)| m * (1.0 + p - shift))
        .collect()
}

/// Maximizes `Σ_y g(y) φ(y)` with `g = m (v - E_m v)` over `φ >= 0`,
/// `‖φ‖_{q,m} <= κ`. The direction `w >= 0` is optimized on the scale-free
/// ratio `g·w / ‖w‖_{q,m}` by projected gradient ascent with backtracking,
/// from several starts.
fn semideviation_ascent(kappa: f64, q: f64, m: &[f64], v: &[f64]) -> Vec<f64> {
    let n = m.len();
    let mean: f64 = m.iter().zip(v).map(|(m, v)| m * v).sum();
    let g: Vec<f64> = m.iter().zip(v).map(|(m, v)| m * (v - mean)).collect();
    let active: Vec<usize> = (0..n).filter(|&y| m[y] > 0.0 && g[y] > 0.0).collect();
    if kappa == 0.0 || active.is_empty() {
        return vec![0.0; n];
    }

    let norm = |w: &[f64]| -> f64 {
        let top = w.iter().copied().fold(0.0, f64::max);
        if top == 0.0 {
            return 0.0;
        }
        top * active
            .iter()
            .map(|&y| m[y] * (w[y] / top).powf(q))
            .sum::<f64>()
            .powf(q.recip())
    };
    let ratio = |w: &[f64]| -> f64 {
        let nw = norm(w);
        if nw == 0.0 {
            return f64::NEG_INFINITY;
        }
        active.iter().map(|&y| g[y] * w[y]).sum::<f64>() / nw
    };

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut starts: Vec<Vec<f64>> = vec![
        (0..n)
            .map(|y| if active.contains(&y) { 1.0 } else { 0.0 })
            .collect(),
        (0..n)
            .map(|y| if active.contains(&y) { g[y] } else { 0.0 })
            .collect(),
    ];
    for _ in 0..6 {
        starts.push(
            (0..n)
                .map(|y| {
                    if active.contains(&y) {
                        rng.gen_range(0.05..1.0)
                    } else {
                        0.0
                    }
                })
                .collect(),
        );
    }

    let mut best_w = starts[0].clone();
    let mut best = ratio(&best_w);
    for mut w in starts {
        let mut f = ratio(&w);
        let mut step = 1.0;
        for _ in 0..20_000 {
            let nw = norm(&w);
            let gw: f64 = active.iter().map(|&y| g[y] * w[y]).sum();
            // ∂‖w‖/∂w_y = m_y (w_y / ‖w‖)^{q-1}
            let grad: Vec<f64> = (0..n)
                .map(|y| {
                    if active.contains(&y) {
                        g[y] / nw - gw / (nw * nw) * m[y] * (w[y] / nw).powf(q - 1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut improved = false;
            while step > 1e-14 {
                let trial: Vec<f64> = w
                    .iter()
                    .zip(&grad)
                    .map(|(w, d)| (w + step * d).max(0.0))
                    .collect();
                let ft = ratio(&trial);
                if ft > f {
                    let top = trial.iter().copied().fold(0.0, f64::max);
                    w = trial.iter().map(|t| t / top).collect();
                    let gain = ft - f;
                    f = ft;
                    step *= 2.0;
                    improved = gain > 1e-15 * f.abs().max(1e-300);
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if f > best {
            best = f;
            best_w = w;
        }
    }
    let nw = norm(&best_w);
    best_w.iter().map(|w| kappa * w / nw).collect()
}
