mod check;
mod format;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use markov_risk::dp::{convergence_study, dp_recursion, reference_solution};
use markov_risk::markov::{sample_costs, summarize};
use markov_risk::solver::solve_ode;
use markov_risk::{Error, MarkovModel, Scheme, SolverConfig};

use format::{num, opt, writer};

#[derive(Parser)]
#[command(
    name = "markov-risk",
    version,
    about = "Time-consistent risk on finite-state Markov chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the model file and report generator violations.
    Validate(Common),
    /// Solve the backward ODE; writes t,state,value.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "rk4", value_parser = parse_scheme)]
        scheme: Scheme,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
    },
    /// Run the discrete-time recursion; writes t,state,value.
    Dp {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Sup-norm error of the recursion along a ladder of step counts.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "10,20,40,80,160")]
        ladder: Vec<usize>,
    },
    /// Sample path costs; writes state,sample,cost plus mean and stderr rows.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Restrict to one state label (default: every state).
        #[arg(long)]
        state: Option<String>,
    },
    /// Coherence, state-consistency, primal-dual and semi-derivative suites.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4,1e-5")]
        eps: Vec<f64>,
        /// Also write the finite-difference ladders here.
        #[arg(long)]
        fd_out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    model: PathBuf,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Violation = 1,
    Parse = 2,
    Config = 3,
    Runtime = 4,
    /// The reader went away (e.g. `| head`); not an error.
    Closed = 0,
}

struct Failure {
    status: Status,
    message: String,
}

impl Failure {
    fn new(status: Status, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }

    /// Errors raised while running a command.
    fn runtime(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) | Error::Scale { .. } => Status::Config,
            Error::Invalid(_) => Status::Violation,
            _ => Status::Runtime,
        };
        Failure::new(status, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        let status = if e.kind() == std::io::ErrorKind::BrokenPipe {
            Status::Closed
        } else {
            Status::Runtime
        };
        Failure::new(status, format!("writing output: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => io.into(),
            other => Failure::new(Status::Runtime, format!("writing output: {other:?}")),
        }
    }
}

type Outcome = Result<(), Failure>;

/// Loads a model; structural problems count as parse errors, a missing file
/// as a configuration error.
fn load(path: &Path) -> Result<MarkovModel, Failure> {
    MarkovModel::from_path(path).map_err(|e| match e {
        Error::Io(io) => Failure::new(Status::Config, format!("{}: {io}", path.display())),
        Error::Config(_) => Failure::new(Status::Config, e.to_string()),
        other => Failure::new(Status::Parse, other.to_string()),
    })
}

fn load_valid(path: &Path) -> Result<MarkovModel, Failure> {
    let model = load(path)?;
    model.ensure_valid().map_err(Failure::runtime)?;
    Ok(model)
}

fn values_csv(
    out: Option<&Path>,
    model: &MarkovModel,
    times: &[f64],
    values: &[Vec<f64>],
) -> Outcome {
    let mut w = writer(out)?;
    w.write_record(["t", "state", "value"])?;
    for (t, row) in times.iter().zip(values) {
        for (x, v) in row.iter().enumerate() {
            w.write_record([num(*t), model.states.label(x).to_string(), num(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Validate(common) => {
            let model = load(&common.model)?;
            let violations = model.violations();
            let mut report = String::new();
            for v in &violations {
                report.push_str(&format!("{v}\n"));
            }
            if violations.is_empty() {
                report.push_str("ok\n");
            }
            match &common.out {
                Some(p) => std::fs::write(p, &report)?,
                None => print!("{report}"),
            }
            if violations.is_empty() {
                Ok(())
            } else {
                Err(Failure::new(
                    Status::Violation,
                    format!("{} generator violation(s)", violations.len()),
                ))
            }
        }
        Command::Solve {
            common,
            scheme,
            steps,
        } => {
            let model = load_valid(&common.model)?;
            let config = SolverConfig::new(scheme, steps);
            let v = solve_ode(&model, &model.risk, &config).map_err(Failure::runtime)?;
            values_csv(common.out.as_deref(), &model, v.grid.nodes(), &v.values)
        }
        Command::Dp { common, steps } => {
            let model = load_valid(&common.model)?;
            let dp = dp_recursion(&model, &model.risk, steps).map_err(Failure::runtime)?;
            values_csv(common.out.as_deref(), &model, &dp.times, &dp.values)
        }
        Command::Converge { common, ladder } => {
            let model = load_valid(&common.model)?;
            let reference =
                reference_solution(&model, &model.risk, &ladder).map_err(Failure::runtime)?;
            let report = convergence_study(&model, &model.risk, &ladder, &reference)
                .map_err(Failure::runtime)?;
            let mut w = writer(common.out.as_deref())?;
            w.write_record(["N", "sup_error", "empirical_order"])?;
            for ((n, e), o) in report.ladder.iter().zip(&report.errors).zip(&report.orders) {
                w.write_record([n.to_string(), num(*e), opt(*o)])?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Simulate {
            common,
            samples,
            seed,
            state,
        } => {
            let model = load_valid(&common.model)?;
            let states: Vec<usize> = match &state {
                Some(label) => vec![model.states.index_of(label).ok_or_else(|| {
                    Failure::new(Status::Config, format!("unknown state {label:?}"))
                })?],
                None => (0..model.n()).collect(),
            };
            let mut w = writer(common.out.as_deref())?;
            w.write_record(["state", "sample", "cost"])?;
            for x in states {
                // one stream per state, so a single-state run reproduces its rows
                let costs = sample_costs(
                    &model.generator,
                    &model.cost,
                    0.0,
                    x,
                    samples,
                    seed.wrapping_add(x as u64),
                )
                .map_err(Failure::runtime)?;
                let label = model.states.label(x);
                for (i, c) in costs.iter().enumerate() {
                    w.write_record([label, &i.to_string(), &num(*c)])?;
                }
                let s = summarize(&costs);
                w.write_record([label, "mean", &num(s.mean)])?;
                w.write_record([label, "stderr", &num(s.std_error)])?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Check {
            common,
            samples,
            seed,
            eps,
            fd_out,
        } => {
            let model = load_valid(&common.model)?;
            let outcome = check::run(&model, samples, seed, &eps).map_err(Failure::runtime)?;
            if let Some(path) = fd_out {
                let mut w = writer(Some(&path))?;
                w.write_record(["state", "epsilon", "quotient", "target", "abs_error"])?;
                for (x, report) in &outcome.fd {
                    for row in &report.rows {
                        w.write_record([
                            model.states.label(*x).to_string(),
                            num(row.epsilon),
                            num(row.quotient),
                            opt(row.target),
                            opt(row.abs_error),
                        ])?;
                    }
                }
                w.flush()?;
            }
            let mut w = writer(common.out.as_deref())?;
            w.write_record([
                "suite",
                "state",
                "checks",
                "failures",
                "max_error",
                "result",
            ])?;
            for l in &outcome.lines {
                w.write_record([
                    l.suite.clone(),
                    model.states.label(l.state).to_string(),
                    l.checks.to_string(),
                    l.failures.to_string(),
                    opt(l.max_error),
                    l.verdict.as_str().to_string(),
                ])?;
            }
            w.flush()?;
            if outcome.passed() {
                Ok(())
            } else {
                Err(Failure::new(Status::Violation, "one or more checks failed"))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Status::Config as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) if f.status == Status::Closed => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.status as u8)
        }
    }
}
