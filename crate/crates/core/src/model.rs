//! The Markov cost model and its JSON file format.
//!
//! ```json
//! {
//!   "states": ["up", "down"],
//!   "horizon": 1.0,
//!   "generator": [[-1, 1], [1, -1]],
//!   "running_cost": {"times": [0, 1], "values": [[0, 1], [0, 2]]},
//!   "terminal_cost": [0, 1],
//!   "risk": {"kind": "avar", "alpha": [0.5, 0.5]}
//! }
//! ```
//!
//! `generator` is either one matrix (time-homogeneous) or a list of
//! `{"until": t, "matrix": [[..]]}` pieces whose last `until` equals the
//! horizon. Rows of `running_cost.values` correspond to `times`, columns to
//! states; the block may be omitted for zero running cost. `risk` is one of
//! `{"kind": "expectation"}`, `{"kind": "avar", "alpha": [..]}` or
//! `{"kind": "semideviation", "kappa": [..], "p": 1}`; per-state parameters
//! may also be given as a single number. It defaults to expectation.

use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{
    matrix_from_rows, validate_generator, CostSpec, GeneratorSchedule, GeneratorViolation,
    StateSpace,
};
use crate::risk::RiskMapping;

/// A finite-state chain with its costs and transition risk mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    pub states: StateSpace,
    pub generator: GeneratorSchedule,
    pub cost: CostSpec,
    pub risk: RiskMapping,
}

impl MarkovModel {
    pub fn new(
        states: StateSpace,
        generator: GeneratorSchedule,
        cost: CostSpec,
        risk: RiskMapping,
    ) -> Result<Self> {
        let n = states.len();
        if generator.n() != n {
            return Err(Error::Dimension(format!(
                "generator is {0}x{0} but there are {n} states",
                generator.n()
            )));
        }
        if cost.n() != n {
            return Err(Error::Dimension(format!(
                "costs cover {} states but there are {n}",
                cost.n()
            )));
        }
        risk.validate(n)?;
        Ok(MarkovModel {
            states,
            generator,
            cost,
            risk,
        })
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn horizon(&self) -> f64 {
        self.generator.horizon()
    }

    /// Generator rate-rule violations; empty for a valid model.
    pub fn violations(&self) -> Vec<GeneratorViolation> {
        validate_generator(&self.generator)
    }

    /// Fails with [`Error::Invalid`] listing the violations, if any.
    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            return Ok(());
        }
        let msgs: Vec<String> = v.iter().map(ToString::to_string).collect();
        Err(Error::Invalid(msgs.join("; ")))
    }

    pub fn with_risk(&self, risk: RiskMapping) -> Result<Self> {
        risk.validate(self.n())?;
        Ok(MarkovModel {
            risk,
            ..self.clone()
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ModelFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Parse(format!(
                "field `{path}` (line {}, column {}): {inner}",
                inner.line(),
                inner.column()
            ))
        })?;
        file.into_model()
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from_model(self)).expect("model serializes")
    }

    /// A reproducible random model: `n` states, off-diagonal rates in
    /// `[0, 2)`, stationary running cost in `[0, 1)`, terminal cost in
    /// `[0, 5)`, horizon 1, expectation mapping. Values are rounded to three
    /// decimals so they survive a JSON round trip unchanged.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut round = |lo: f64, hi: f64| (rng.gen_range(lo..hi) * 1000.0).round() / 1000.0;
        let mut g = DMatrix::zeros(n, n);
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    g[(x, y)] = round(0.0, 2.0);
                }
            }
        }
        for x in 0..n {
            let out: f64 = (0..n).filter(|&y| y != x).map(|y| g[(x, y)]).sum();
            g[(x, x)] = -(out * 1000.0).round() / 1000.0;
        }
        let running: Vec<f64> = (0..n).map(|_| round(0.0, 1.0)).collect();
        let terminal: Vec<f64> = (0..n).map(|_| round(0.0, 5.0)).collect();
        MarkovModel::new(
            StateSpace::numbered(n)?,
            GeneratorSchedule::constant(g, 1.0)?,
            CostSpec::stationary(running, terminal)?,
            RiskMapping::Expectation,
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    states: Vec<String>,
    horizon: f64,
    generator: GeneratorField,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    running_cost: Option<RunningCostFile>,
    terminal_cost: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    risk: Option<RiskFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum GeneratorField {
    Constant(Vec<Vec<f64>>),
    Pieces(Vec<PieceFile>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceFile {
    until: f64,
    matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunningCostFile {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RiskFile {
    Expectation,
    Avar {
        alpha: PerState,
    },
    Semideviation {
        kappa: PerState,
        #[serde(default = "default_order")]
        p: f64,
    },
}

fn default_order() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum PerState {
    Uniform(f64),
    List(Vec<f64>),
}

impl PerState {
    fn expand(self, n: usize) -> Vec<f64> {
        match self {
            PerState::Uniform(v) => vec![v; n],
            PerState::List(v) => v,
        }
    }
}

impl ModelFile {
    fn into_model(self) -> Result<MarkovModel> {
        let states = StateSpace::new(self.states)?;
        let n = states.len();
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Invalid(format!(
                "horizon {} must be positive",
                self.horizon
            )));
        }
        let generator = match self.generator {
            GeneratorField::Constant(rows) => {
                GeneratorSchedule::constant(matrix_from_rows(&rows)?, self.horizon)?
            }
            GeneratorField::Pieces(pieces) => {
                let last = pieces.last().map(|p| p.until).unwrap_or(f64::NAN);
                if (last - self.horizon).abs() > 1e-12 * self.horizon {
                    return Err(Error::Invalid(format!(
                        "last generator piece ends at {last}, horizon is {}",
                        self.horizon
                    )));
                }
                let mut breakpoints = vec![0.0];
                let count = pieces.len();
                let mut mats = Vec::with_capacity(count);
                for (i, p) in pieces.into_iter().enumerate() {
                    breakpoints.push(if i + 1 == count {
                        self.horizon
                    } else {
                        p.until
                    });
                    mats.push(matrix_from_rows(&p.matrix)?);
                }
                GeneratorSchedule::new(breakpoints, mats)?
            }
        };
        let cost = match self.running_cost {
            Some(rc) => CostSpec::new(rc.times, rc.values, self.terminal_cost)?,
            None => CostSpec::terminal_only(self.terminal_cost)?,
        };
        let risk = match self.risk {
            None | Some(RiskFile::Expectation) => RiskMapping::Expectation,
            Some(RiskFile::Avar { alpha }) => RiskMapping::avar(alpha.expand(n))?,
            Some(RiskFile::Semideviation { kappa, p }) => {
                RiskMapping::semideviation(kappa.expand(n), p)?
            }
        };
        MarkovModel::new(states, generator, cost, risk)
    }

    fn from_model(model: &MarkovModel) -> Self {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            m.row_iter().map(|r| r.iter().copied().collect()).collect()
        };
        let g = &model.generator;
        let generator = if g.pieces().len() == 1 {
            GeneratorField::Constant(rows(&g.pieces()[0]))
        } else {
            GeneratorField::Pieces(
                g.pieces()
                    .iter()
                    .zip(&g.breakpoints()[1..])
                    .map(|(m, &until)| PieceFile {
                        until,
                        matrix: rows(m),
                    })
                    .collect(),
            )
        };
        let running_cost = (!model.cost.is_zero_running()).then(|| RunningCostFile {
            times: model.cost.times().to_vec(),
            values: model.cost.values().to_vec(),
        });
        let risk = match &model.risk {
            RiskMapping::Expectation | RiskMapping::WorstCase => RiskFile::Expectation,
            RiskMapping::AverageValueAtRisk { alpha } => RiskFile::Avar {
                alpha: PerState::List(alpha.clone()),
            },
            RiskMapping::MeanSemideviation { kappa, p } => RiskFile::Semideviation {
                kappa: PerState::List(kappa.clone()),
                p: *p,
            },
        };
        ModelFile {
            states: model.states.labels().to_vec(),
            horizon: model.horizon(),
            generator,
            running_cost,
            terminal_cost: model.cost.terminal().to_vec(),
            risk: Some(risk),
        }
    }
}
