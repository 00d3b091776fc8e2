use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Tolerance for row sums of stochastic kernels.
pub const STOCHASTIC_TOL: f64 = 1e-10;

/// Relative tolerance for structural zero-row-sum checks; scaled by
/// `n * max|entry|`.
pub const ROW_SUM_REL_TOL: f64 = 1e-12;

pub(crate) fn row_sum_tolerance(m: &DMatrix<f64>) -> f64 {
    let scale = m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    ROW_SUM_REL_TOL * m.nrows() as f64 * scale
}

/// A signed finite kernel `K(y|x)`, stored with rows indexed by the source
/// state `x` and columns by the target state `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedKernel(DMatrix<f64>);

/// The first condition of the tangent-cone characterization that a kernel
/// fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConeViolation {
    /// `K(x|x) > 0`.
    PositiveDiagonal { x: usize, value: f64 },
    /// `K(y|x) < 0` for some `y != x`.
    NegativeOffDiagonal { x: usize, y: usize, value: f64 },
    /// Row `x` does not sum to zero.
    RowSum { x: usize, sum: f64 },
}

impl fmt::Display for ConeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeViolation::PositiveDiagonal { x, value } => {
                write!(f, "(i) diagonal entry K({x}|{x}) = {value} is positive")
            }
            ConeViolation::NegativeOffDiagonal { x, y, value } => {
                write!(
                    f,
                    "(ii) off-diagonal entry K({y}|{x}) = {value} is negative"
                )
            }
            ConeViolation::RowSum { x, sum } => write!(f, "(iii) row {x} sums to {sum}, not 0"),
        }
    }
}

impl SignedKernel {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension(format!(
                "kernel must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(SignedKernel(matrix))
    }

    pub fn zeros(n: usize) -> Self {
        SignedKernel(DMatrix::zeros(n, n))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.0[(x, y)]
    }

    pub fn row(&self, x: usize) -> Vec<f64> {
        self.0.row(x).iter().copied().collect()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Operator norm against bounded test functions:
    /// `max_x sup_{|φ| <= 1} Σ_y φ(y) K(y|x) = max_x Σ_y |K(y|x)|`.
    pub fn norm(&self) -> f64 {
        self.0
            .row_iter()
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Returns the first violated tangent-cone condition, checked in the
    /// order off-diagonal sign, diagonal sign, row sum.
    pub fn cone_violation(&self) -> Option<ConeViolation> {
        let n = self.n();
        let tol = row_sum_tolerance(&self.0);
        for x in 0..n {
            for y in 0..n {
                let v = self.0[(x, y)];
                if y != x && v < 0.0 {
                    return Some(ConeViolation::NegativeOffDiagonal { x, y, value: v });
                }
            }
        }
        for x in 0..n {
            let d = self.0[(x, x)];
            if d > 0.0 {
                return Some(ConeViolation::PositiveDiagonal { x, value: d });
            }
        }
        for x in 0..n {
            let sum: f64 = self.0.row(x).iter().sum();
            if sum.abs() > tol {
                return Some(ConeViolation::RowSum { x, sum });
            }
        }
        None
    }

    pub fn in_tangent_cone(&self) -> bool {
        self.cone_violation().is_none()
    }

    /// Largest `τ` such that `I + τK` stays a stochastic kernel:
    /// `(max_x |K(x|x)|)^{-1}`, or `+∞` for the zero kernel.
    pub fn max_step(&self) -> Result<f64> {
        if let Some(v) = self.cone_violation() {
            return Err(Error::Domain(format!(
                "kernel outside the tangent cone: {v}"
            )));
        }
        let d = (0..self.n())
            .map(|x| self.0[(x, x)].abs())
            .fold(0.0, f64::max);
        if d == 0.0 {
            Ok(f64::INFINITY)
        } else {
            Ok(d.recip())
        }
    }
}

/// A row-stochastic kernel `Q(y|x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticKernel(DMatrix<f64>);

impl StochasticKernel {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension(format!(
                "kernel must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if let Some(msg) = stochastic_violation(&matrix) {
            return Err(Error::Domain(msg));
        }
        Ok(StochasticKernel(matrix))
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<f64>) -> Self {
        StochasticKernel(matrix)
    }

    pub fn identity(n: usize) -> Self {
        StochasticKernel(DMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.0[(x, y)]
    }

    pub fn row(&self, x: usize) -> Vec<f64> {
        self.0.row(x).iter().copied().collect()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Kernel composition `(QP)(z|x) = Σ_y Q(y|x) P(z|y)`.
    pub fn compose(&self, other: &StochasticKernel) -> StochasticKernel {
        StochasticKernel(&self.0 * &other.0)
    }

    /// `Σ_y Q(y|x) v(y)` for every `x`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|x| self.0.row(x).iter().zip(v).map(|(q, w)| q * w).sum())
            .collect()
    }
}

/// Describes why a matrix is not stochastic at tolerance [`STOCHASTIC_TOL`].
pub fn stochastic_violation(m: &DMatrix<f64>) -> Option<String> {
    for x in 0..m.nrows() {
        let mut sum = 0.0;
        for y in 0..m.ncols() {
            let q = m[(x, y)];
            if !q.is_finite() || !(-STOCHASTIC_TOL..=1.0 + STOCHASTIC_TOL).contains(&q) {
                return Some(format!("entry ({x},{y}) = {q} outside [0,1]"));
            }
            sum += q;
        }
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Some(format!("row {x} sums to {sum}"));
        }
    }
    None
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
        return Err(Error::Dimension(format!(
            "row {i} has {} entries, expected {m}",
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(rows: &[&[f64]]) -> SignedKernel {
        SignedKernel::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn norm_examples() {
        assert_eq!(k(&[&[-1.0, 1.0], &[1.0, -1.0]]).norm(), 2.0);
        assert_eq!(SignedKernel::zeros(3).norm(), 0.0);
        assert_eq!(k(&[&[-3.0, 3.0], &[0.0, 0.0]]).norm(), 6.0);
    }

    #[test]
    fn cone_membership() {
        assert!(k(&[&[-1.0, 1.0], &[1.0, -1.0]]).in_tangent_cone());
        assert!(SignedKernel::zeros(2).in_tangent_cone());
        match k(&[&[1.0, -1.0], &[0.0, 0.0]]).cone_violation() {
            Some(ConeViolation::NegativeOffDiagonal { x: 0, y: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match k(&[&[1.0, 0.0], &[0.0, 0.0]]).cone_violation() {
            Some(ConeViolation::PositiveDiagonal { x: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match k(&[&[-1.0, 2.0], &[0.0, 0.0]]).cone_violation() {
            Some(ConeViolation::RowSum { x: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn max_step_examples() {
        assert_eq!(k(&[&[-1.0, 1.0], &[1.0, -1.0]]).max_step().unwrap(), 1.0);
        let steep = k(&[&[-4.0, 4.0], &[0.0, 0.0]]);
        let tau = steep.max_step().unwrap();
        assert_eq!(tau, 0.25);
        let step = DMatrix::identity(2, 2) + steep.as_matrix() * tau;
        assert_eq!(step, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]));
        assert!(StochasticKernel::new(step).is_ok());
        assert_eq!(SignedKernel::zeros(2).max_step().unwrap(), f64::INFINITY);
        assert!(matches!(
            k(&[&[1.0, -1.0], &[0.0, 0.0]]).max_step(),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(
            SignedKernel::new(DMatrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
        assert!(SignedKernel::from_rows(&[vec![0.0, 1.0], vec![0.0]]).is_err());
    }

    #[test]
    fn stochastic_checks() {
        assert!(
            StochasticKernel::new(DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.2, 0.8])).is_ok()
        );
        assert!(
            StochasticKernel::new(DMatrix::from_row_slice(2, 2, &[0.5, 0.6, 0.2, 0.8])).is_err()
        );
        assert!(
            StochasticKernel::new(DMatrix::from_row_slice(2, 2, &[1.5, -0.5, 0.2, 0.8])).is_err()
        );
    }
}
