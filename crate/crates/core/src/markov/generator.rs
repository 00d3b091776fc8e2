use std::fmt;

use nalgebra::DMatrix;

use super::kernel::{row_sum_tolerance, SignedKernel, StochasticKernel};
use crate::error::{Error, Result};

/// A piecewise-constant, time-dependent generator on `[0, T]`.
///
/// Piece `k` is active on `[breakpoints[k], breakpoints[k+1])`; the last
/// piece also covers the horizon itself.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSchedule {
    breakpoints: Vec<f64>,
    pieces: Vec<DMatrix<f64>>,
}

/// The rule a generator entry breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorRule {
    NegativeOffDiagonal,
    RowSum,
    NonFinite,
}

/// A rule violation located in a specific generator piece.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorViolation {
    pub piece: usize,
    pub row: usize,
    /// Offending column; `None` for row-level rules.
    pub col: Option<usize>,
    pub rule: GeneratorRule,
    pub value: f64,
}

impl fmt::Display for GeneratorViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.rule, self.col) {
            (GeneratorRule::NegativeOffDiagonal, Some(c)) => write!(
                f,
                "piece {}: entry ({}, {}) = {} is a negative off-diagonal rate",
                self.piece, self.row, c, self.value
            ),
            (GeneratorRule::NonFinite, Some(c)) => write!(
                f,
                "piece {}: entry ({}, {}) = {} is not finite",
                self.piece, self.row, c, self.value
            ),
            (_, _) => write!(
                f,
                "piece {}: row {} sums to {} instead of 0",
                self.piece, self.row, self.value
            ),
        }
    }
}

impl GeneratorSchedule {
    /// Builds a schedule from `m + 1` breakpoints `0 = t_0 < … < t_m = T`
    /// and `m` square pieces of equal size. Only structure is checked here;
    /// rate rules are reported by [`validate_generator`].
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<DMatrix<f64>>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Dimension("generator schedule has no pieces".into()));
        }
        if breakpoints.len() != pieces.len() + 1 {
            return Err(Error::Dimension(format!(
                "{} pieces need {} breakpoints, got {}",
                pieces.len(),
                pieces.len() + 1,
                breakpoints.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::Invalid("first breakpoint must be 0".into()));
        }
        if breakpoints.iter().any(|t| !t.is_finite())
            || breakpoints.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::Invalid(
                "generator breakpoints must be finite and strictly increasing".into(),
            ));
        }
        let n = pieces[0].nrows();
        if n == 0 {
            return Err(Error::Dimension(
                "generator must have at least one state".into(),
            ));
        }
        for (k, g) in pieces.iter().enumerate() {
            if g.nrows() != n || g.ncols() != n {
                return Err(Error::Dimension(format!(
                    "piece {k} is {}x{}, expected {n}x{n}",
                    g.nrows(),
                    g.ncols()
                )));
            }
        }
        Ok(GeneratorSchedule {
            breakpoints,
            pieces,
        })
    }

    /// A time-homogeneous schedule on `[0, horizon]`.
    pub fn constant(generator: DMatrix<f64>, horizon: f64) -> Result<Self> {
        Self::new(vec![0.0, horizon], vec![generator])
    }

    pub fn n(&self) -> usize {
        self.pieces[0].nrows()
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().expect("nonempty")
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[DMatrix<f64>] {
        &self.pieces
    }

    /// Index of the piece active at `t` (right-continuous, clamped to the
    /// horizon).
    pub fn piece_index_at(&self, t: f64) -> usize {
        let m = self.pieces.len();
        // first breakpoint strictly greater than t, minus one
        let k = self.breakpoints[1..m].partition_point(|&b| b <= t);
        k.min(m - 1)
    }

    pub fn piece_at(&self, t: f64) -> &DMatrix<f64> {
        &self.pieces[self.piece_index_at(t)]
    }

    pub fn kernel_at(&self, t: f64) -> SignedKernel {
        SignedKernel::new(self.piece_at(t).clone()).expect("pieces are square")
    }

    /// `λ = max_{x != y, k} G_k(y|x)`, the largest off-diagonal rate.
    pub fn max_rate(&self) -> f64 {
        let mut lambda: f64 = 0.0;
        for g in &self.pieces {
            for x in 0..g.nrows() {
                for y in 0..g.ncols() {
                    if x != y {
                        lambda = lambda.max(g[(x, y)]);
                    }
                }
            }
        }
        lambda
    }

    /// Breakpoints lying strictly inside `(t, r)`.
    pub fn interior_breakpoints(&self, t: f64, r: f64) -> impl Iterator<Item = f64> + '_ {
        self.breakpoints
            .iter()
            .copied()
            .filter(move |&b| b > t && b < r)
    }
}

/// Lists every rate rule broken by the schedule: negative off-diagonal
/// rates, nonzero row sums (tolerance `1e-12 · n · max|entry|`) and
/// non-finite entries. An empty list means the schedule is a valid
/// generator.
pub fn validate_generator(schedule: &GeneratorSchedule) -> Vec<GeneratorViolation> {
    let mut out = Vec::new();
    for (k, g) in schedule.pieces.iter().enumerate() {
        let tol = row_sum_tolerance(g);
        for x in 0..g.nrows() {
            let mut finite_row = true;
            for y in 0..g.ncols() {
                let v = g[(x, y)];
                if !v.is_finite() {
                    finite_row = false;
                    out.push(GeneratorViolation {
                        piece: k,
                        row: x,
                        col: Some(y),
                        rule: GeneratorRule::NonFinite,
                        value: v,
                    });
                } else if y != x && v < 0.0 {
                    out.push(GeneratorViolation {
                        piece: k,
                        row: x,
                        col: Some(y),
                        rule: GeneratorRule::NegativeOffDiagonal,
                        value: v,
                    });
                }
            }
            let sum: f64 = g.row(x).iter().sum();
            if finite_row && sum.abs() > tol {
                out.push(GeneratorViolation {
                    piece: k,
                    row: x,
                    col: None,
                    rule: GeneratorRule::RowSum,
                    value: sum,
                });
            }
        }
    }
    out
}

/// Checks that `t` and `r` satisfy `0 <= t <= r <= T`, snapping values that
/// miss the endpoints by rounding noise.
pub(crate) fn check_interval(horizon: f64, t: f64, r: f64) -> Result<(f64, f64)> {
    let slack = 1e-12 * horizon.max(1.0);
    if !(t.is_finite() && r.is_finite()) || t > r || t < -slack || r > horizon + slack {
        return Err(Error::Domain(format!(
            "interval [{t}, {r}] is not inside [0, {horizon}]"
        )));
    }
    Ok((t.max(0.0), r.min(horizon)))
}

/// The transition function `Q_{t,r}`: the ordered product of
/// `exp((b - a) G_k)` over the schedule pieces meeting `[t, r]`.
pub fn transition_matrix(schedule: &GeneratorSchedule, t: f64, r: f64) -> Result<StochasticKernel> {
    let (t, r) = check_interval(schedule.horizon(), t, r)?;
    let n = schedule.n();
    let mut q = DMatrix::<f64>::identity(n, n);
    let mut a = t;
    while a < r {
        let k = schedule.piece_index_at(a);
        let b = if k + 1 < schedule.pieces.len() {
            schedule.breakpoints[k + 1].min(r)
        } else {
            r
        };
        q *= expm_scaled(&schedule.pieces[k], b - a);
        a = b;
    }
    Ok(StochasticKernel::from_matrix_unchecked(q))
}

/// `exp(τ G)` for a generator piece.
pub(crate) fn expm_scaled(g: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    if tau == 0.0 {
        return DMatrix::identity(g.nrows(), g.ncols());
    }
    (g * tau).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0])
    }

    #[test]
    fn validate_examples() {
        let ok = GeneratorSchedule::constant(two_state(), 1.0).unwrap();
        assert!(validate_generator(&ok).is_empty());

        let bad = GeneratorSchedule::constant(
            DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 1.0, -1.0]),
            1.0,
        )
        .unwrap();
        let v = validate_generator(&bad);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, GeneratorRule::RowSum);
        assert_eq!(v[0].row, 0);

        let zero = GeneratorSchedule::constant(DMatrix::zeros(2, 2), 1.0).unwrap();
        assert!(validate_generator(&zero).is_empty());
    }

    #[test]
    fn negative_rate_and_non_finite_reported() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, f64::NAN, 0.0]);
        let s = GeneratorSchedule::constant(g, 1.0).unwrap();
        let v = validate_generator(&s);
        assert!(v
            .iter()
            .any(|e| e.rule == GeneratorRule::NegativeOffDiagonal && e.col == Some(1)));
        assert!(v
            .iter()
            .any(|e| e.rule == GeneratorRule::NonFinite && e.row == 1));
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            GeneratorSchedule::new(vec![0.0, 1.0], vec![DMatrix::zeros(2, 3)]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            GeneratorSchedule::new(
                vec![0.0, 0.5, 1.0],
                vec![DMatrix::zeros(2, 2), DMatrix::zeros(3, 3)]
            ),
            Err(Error::Dimension(_))
        ));
        assert!(
            GeneratorSchedule::new(vec![0.0, 0.5, 0.5], vec![DMatrix::zeros(2, 2); 2]).is_err()
        );
    }

    #[test]
    fn piece_lookup_is_right_continuous() {
        let s =
            GeneratorSchedule::new(vec![0.0, 0.5, 1.0], vec![DMatrix::zeros(2, 2), two_state()])
                .unwrap();
        assert_eq!(s.piece_index_at(0.0), 0);
        assert_eq!(s.piece_index_at(0.49), 0);
        assert_eq!(s.piece_index_at(0.5), 1);
        assert_eq!(s.piece_index_at(1.0), 1);
    }

    #[test]
    fn two_state_closed_form() {
        let s = GeneratorSchedule::constant(two_state(), 1.0).unwrap();
        let q = transition_matrix(&s, 0.0, 1.0).unwrap();
        let expected = (1.0 - (-2.0_f64).exp()) / 2.0;
        assert!((q.get(0, 1) - expected).abs() < 1e-14);
        assert!((q.get(0, 1) - 0.43233).abs() < 1e-5);
    }

    #[test]
    fn degenerate_intervals() {
        let s = GeneratorSchedule::constant(two_state(), 1.0).unwrap();
        assert_eq!(
            transition_matrix(&s, 0.4, 0.4).unwrap().as_matrix(),
            &DMatrix::identity(2, 2)
        );
        let z = GeneratorSchedule::constant(DMatrix::zeros(3, 3), 2.0).unwrap();
        assert_eq!(
            transition_matrix(&z, 0.1, 1.7).unwrap().as_matrix(),
            &DMatrix::identity(3, 3)
        );
        assert!(matches!(
            transition_matrix(&s, 0.6, 0.4),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            transition_matrix(&s, 0.0, 1.5),
            Err(Error::Domain(_))
        ));
    }
}
