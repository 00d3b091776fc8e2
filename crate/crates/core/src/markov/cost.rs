use crate::error::{Error, Result};

/// Running cost rates `c_t(x)` sampled on a time grid (piecewise-linear in
/// time between samples, constant outside the grid) and a terminal cost
/// `f(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    times: Vec<f64>,
    /// `values[i][x]` is the rate in state `x` at `times[i]`.
    values: Vec<Vec<f64>>,
    terminal: Vec<f64>,
}

impl CostSpec {
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>, terminal: Vec<f64>) -> Result<Self> {
        let n = terminal.len();
        if n == 0 {
            return Err(Error::Dimension("terminal cost is empty".into()));
        }
        if times.is_empty() {
            return Err(Error::Invalid(
                "running cost needs at least one time".into(),
            ));
        }
        if times.len() != values.len() {
            return Err(Error::Dimension(format!(
                "running cost has {} times but {} value rows",
                times.len(),
                values.len()
            )));
        }
        if let Some((i, row)) = values.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Dimension(format!(
                "running cost row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid(
                "running cost times must be finite and strictly increasing".into(),
            ));
        }
        if values
            .iter()
            .flatten()
            .chain(&terminal)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Invalid("cost values must be finite".into()));
        }
        Ok(CostSpec {
            times,
            values,
            terminal,
        })
    }

    /// Zero running cost with the given terminal cost.
    pub fn terminal_only(terminal: Vec<f64>) -> Result<Self> {
        let n = terminal.len();
        Self::new(vec![0.0], vec![vec![0.0; n]], terminal)
    }

    /// Time-independent running cost.
    pub fn stationary(running: Vec<f64>, terminal: Vec<f64>) -> Result<Self> {
        Self::new(vec![0.0], vec![running], terminal)
    }

    pub fn n(&self) -> usize {
        self.terminal.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn terminal(&self) -> &[f64] {
        &self.terminal
    }

    /// Returns `(i, w)` such that the rate at `t` is
    /// `(1 - w) values[i] + w values[i + 1]`.
    fn locate(&self, t: f64) -> (usize, f64) {
        let m = self.times.len();
        if m == 1 || t <= self.times[0] {
            return (0, 0.0);
        }
        if t >= self.times[m - 1] {
            return (m - 1, 0.0);
        }
        let i = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        (i, w)
    }

    pub fn rate(&self, t: f64, x: usize) -> f64 {
        let (i, w) = self.locate(t);
        if w == 0.0 {
            self.values[i][x]
        } else {
            (1.0 - w) * self.values[i][x] + w * self.values[i + 1][x]
        }
    }

    pub fn rates(&self, t: f64) -> Vec<f64> {
        (0..self.n()).map(|x| self.rate(t, x)).collect()
    }

    /// Exact `∫_a^b c_τ(x) dτ` of the piecewise-linear rate.
    pub fn integral(&self, x: usize, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        let mut lo = a;
        let mut c_lo = self.rate(a, x);
        for &s in self.times.iter().filter(|&&s| s > a && s < b) {
            let c_s = self.rate(s, x);
            total += 0.5 * (c_lo + c_s) * (s - lo);
            lo = s;
            c_lo = c_s;
        }
        total + 0.5 * (c_lo + self.rate(b, x)) * (b - lo)
    }

    /// `sup_{t, x} |c_t(x)|`; attained at a grid time.
    pub fn running_sup(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn terminal_sup(&self) -> f64 {
        self.terminal.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `K_c = max_{x,y} sup_t |c_t(y) - c_t(x)|`; differences of
    /// piecewise-linear rates peak at grid times.
    pub fn state_spread(&self) -> f64 {
        self.values
            .iter()
            .map(|row| {
                let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    pub fn is_zero_running(&self) -> bool {
        self.values.iter().flatten().all(|&v| v == 0.0)
    }
}
