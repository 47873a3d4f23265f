//! `relmarg`: exact relational marginals, expansions, max-entropy models,
//! marginal polytopes and estimation experiments from the command line.
//!
//! Exit codes: 0 success, 1 domain or usage error, 2 marginals not
//! realizable, 3 enumeration cap exceeded.

mod commands;
mod inputs;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use relmarg::stats::ModelKind;

#[derive(Parser, Debug)]
#[command(name = "relmarg", version, about = "Relational marginal statistics and max-entropy models")]
struct Cli {
    /// Output format for the report on stdout.
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Model {
    A,
    B,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Statistic semantics: A samples fragments, B samples injective groundings.
    #[arg(long, value_enum)]
    pub model: Model,
    /// Fragment width; required for model A, rejected for model B.
    #[arg(long, alias = "k")]
    pub width: Option<usize>,
}

impl ModelArgs {
    pub fn kind(&self) -> anyhow::Result<ModelKind> {
        match (self.model, self.width) {
            (Model::A, Some(0)) => anyhow::bail!(usage("--width must be at least 1")),
            (Model::A, Some(width)) => Ok(ModelKind::A { width }),
            (Model::A, None) => anyhow::bail!(usage("--width is required for model A")),
            (Model::B, None) => Ok(ModelKind::B),
            (Model::B, Some(_)) => anyhow::bail!(usage("--width applies to model A only")),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Gradient sup-norm at which the solver stops.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
    /// Largest admissible weight magnitude.
    #[arg(long, default_value_t = 50.0)]
    pub weight_cap: f64,
}

#[derive(Args, Debug, Clone)]
pub struct SpaceArgs {
    /// Hard rules, one closed formula per line.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Extra predicates, e.g. `e/2,r/1`.
    #[arg(long)]
    pub vocab: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Exact model A and model B statistics of formulas on a structure.
    Stats {
        #[arg(long)]
        facts: PathBuf,
        #[arg(long)]
        formulas: PathBuf,
        /// Fragment width for the model A statistic.
        #[arg(long, alias = "k")]
        width: usize,
    },
    /// The l-level expansion of a structure, optionally with noise.
    Expand {
        #[arg(long)]
        facts: PathBuf,
        #[arg(long)]
        level: usize,
        /// Probability of adding each pairwise-congruent candidate atom.
        #[arg(long)]
        noise: Option<f64>,
        /// Smallest level accepted for a noisy expansion.
        #[arg(long, default_value_t = 1)]
        min_level: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        space: SpaceArgs,
        /// Also write the expansion as a facts file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a max-entropy model to marginal constraints.
    Maxent {
        #[arg(long)]
        constraints: PathBuf,
        /// Number of constants of the world space.
        #[arg(long)]
        size: usize,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        space: SpaceArgs,
        /// Also write model.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vertices of the marginal polytope and hull-distance queries.
    Polytope {
        /// Formulas file, or a constraints file whose targets become a query.
        #[arg(long)]
        formulas: PathBuf,
        #[arg(long)]
        size: usize,
        #[command(flatten)]
        model: ModelArgs,
        /// Query point, comma-separated (`1/3,0.5`). Repeatable.
        #[arg(long)]
        theta: Vec<String>,
        #[command(flatten)]
        space: SpaceArgs,
    },
    /// Seeded estimation-error experiment on a ground-truth structure.
    Estimate {
        #[arg(long)]
        ground_truth: PathBuf,
        /// Sample size.
        #[arg(long)]
        m: usize,
        /// Target domain size of the adjusted estimate.
        #[arg(long)]
        target_n: usize,
        /// Formulas or constraints file; targets are ignored.
        #[arg(long, alias = "formulas")]
        constraints: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        model: ModelArgs,
        /// Also write per-trial errors as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the property suites.
    Verify {
        /// Suite to run; repeatable. All suites by default.
        #[arg(long)]
        suite: Vec<String>,
        /// Read fixtures from this directory instead of the built-in copies.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
    /// Estimate targets from a training structure, then fit at size n.
    Pipeline {
        #[arg(long)]
        facts: PathBuf,
        #[arg(long)]
        formulas: PathBuf,
        #[arg(long)]
        target_n: usize,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        space: SpaceArgs,
        /// Also write model.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Usage errors exit with code 1, like other domain errors.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> Usage {
    Usage(msg.into())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<relmarg::Error>() {
            return match e {
                relmarg::Error::NotRealizable(_) => 2,
                relmarg::Error::CapExceeded { .. } => 3,
                _ => 1,
            };
        }
        if let Some(f) = cause.downcast_ref::<commands::Exit>() {
            return f.0;
        }
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let fmt = cli.format;
    match cli.cmd {
        Cmd::Stats { facts, formulas, width } => commands::stats(fmt, &facts, &formulas, width),
        Cmd::Expand {
            facts,
            level,
            noise,
            min_level,
            seed,
            space,
            out,
        } => commands::expand(fmt, &facts, level, noise, min_level, seed, &space, out.as_deref()),
        Cmd::Maxent {
            constraints,
            size,
            model,
            solver,
            space,
            out,
        } => commands::maxent(fmt, &constraints, size, &model, &solver, &space, out.as_deref()),
        Cmd::Polytope {
            formulas,
            size,
            model,
            theta,
            space,
        } => commands::polytope(fmt, &formulas, size, &model, &theta, &space),
        Cmd::Estimate {
            ground_truth,
            m,
            target_n,
            constraints,
            trials,
            seed,
            model,
            csv,
        } => commands::estimate(fmt, &ground_truth, m, target_n, &constraints, trials, seed, &model, csv.as_deref()),
        Cmd::Verify { suite, fixtures } => commands::verify(fmt, &suite, fixtures.as_deref()),
        Cmd::Pipeline {
            facts,
            formulas,
            target_n,
            model,
            solver,
            space,
            out,
        } => commands::pipeline(fmt, &facts, &formulas, target_n, &model, &solver, &space, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            if e.downcast_ref::<commands::Exit>().is_none() {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(code)
        }
    }
}
