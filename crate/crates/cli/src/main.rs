use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gsvdlab::condest::{CondMethod, DEFAULT_STEPS};
use gsvdlab::harness::{
    self, BoundCheckConfig, CondSettings, ExperimentConfig, FormulationMode, ProblemSource, Table3Problem,
};
use gsvdlab::{problems, Error};

const EXIT_ARGUMENT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_BOUND_VIOLATION: u8 = 4;

#[derive(Parser)]
#[command(name = "gsvdlab", version, about = "GSVD through the Hat and Tilde augmented pencils")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random pair as A.mtx and B.mtx.
    Gen {
        #[command(flatten)]
        problem: GenArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare Hat and Tilde against the reference GSVD.
    Run(RunArgs),
    /// Check perturbation bounds on injected-perturbation trials.
    Bounds(BoundsArgs),
    /// pct/acc table for a batch of generated problems.
    Table3 {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate kappa(A), kappa(B) and the formulation they select.
    Condest {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value = "lanczos-inv")]
        method: CondMethod,
        #[arg(long, default_value_t = DEFAULT_STEPS)]
        k: usize,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 150)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    p: usize,
    #[arg(long, default_value_t = 1e2)]
    cond_a: f64,
    #[arg(long, default_value_t = 1e2)]
    cond_b: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SourceArgs {
    #[command(flatten)]
    generated: GenArgs,
    /// Matrix Market file for A; replaces the generated pair.
    #[arg(long)]
    a: Option<PathBuf>,
    /// Matrix Market file for B; defaults to the first-difference matrix.
    #[arg(long, requires = "a")]
    b: Option<PathBuf>,
}

impl SourceArgs {
    fn source(&self) -> ProblemSource {
        match &self.a {
            Some(a) => ProblemSource::Files {
                a: a.clone(),
                b: self.b.clone(),
            },
            None => {
                let g = &self.generated;
                ProblemSource::Generated {
                    m: g.m,
                    n: g.n,
                    p: g.p,
                    cond_a: g.cond_a,
                    cond_b: g.cond_b,
                    seed: g.seed,
                }
            }
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// hat, tilde, both or auto.
    #[arg(long, default_value = "both")]
    formulation: FormulationMode,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "lanczos-inv")]
    method: CondMethod,
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    k: usize,
    /// With auto, run both formulations and report the comparison.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 30)]
    m: usize,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 40)]
    p: usize,
    #[arg(long, default_value_t = 1e-8)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e3)]
    kappa_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Lib(Error),
    BoundViolation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen { problem: g, out } => {
            let pair = problems::gen_random_pair(g.m, g.n, g.p, g.cond_a, g.cond_b, g.seed)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            problems::save_matrix_market(out.join("A.mtx"), pair.a())?;
            problems::save_matrix_market(out.join("B.mtx"), pair.b())?;
            println!("wrote {} and {}", out.join("A.mtx").display(), out.join("B.mtx").display());
        }
        Command::Run(r) => {
            let config = ExperimentConfig {
                source: r.source.source(),
                formulation: r.formulation,
                epsilon: r.epsilon,
                out: r.out,
                condest: Some(CondSettings {
                    method: r.method,
                    k: r.k,
                }),
                verify: r.verify,
                seed: r.source.generated.seed,
            };
            let outcome = harness::run_accuracy(&config)?;
            println!("{}", serde_json::to_string_pretty(&outcome.summary).map_err(Error::from)?);
        }
        Command::Bounds(b) => {
            let config = BoundCheckConfig {
                trials: b.trials,
                m: b.m,
                n: b.n,
                p: b.p,
                epsilon: b.epsilon,
                kappa_max: b.kappa_max,
                seed: b.seed,
                out: b.out,
            };
            let report = harness::run_bound_check(&config)?;
            let line = format!(
                "trials={} checks={} violations={} max_ratio={:.3e} gamma_ratio=[{:.4}, {:.4}] gamma_violations={}",
                config.trials,
                report.rows.len(),
                report.violations,
                report.max_ratio,
                report.gamma_ratio_min,
                report.gamma_ratio_max,
                report.gamma_violations
            );
            println!("{line}");
            if report.violations > 0 || report.gamma_violations > 0 {
                return Err(Failure::BoundViolation(line));
            }
        }
        Command::Table3 { n, seed, out } => {
            let problems: Vec<Table3Problem> = harness::default_table3_problems()
                .into_iter()
                .map(|p| Table3Problem {
                    m: n + n / 2,
                    n,
                    p: 2 * n,
                    ..p
                })
                .collect();
            let rows = harness::run_table3(&problems, seed, out.as_deref())?;
            print!("{}", harness::table3_csv(&rows));
        }
        Command::Condest { source, method, k } => {
            let pair = source.source().load()?;
            let report = harness::run_condest(&pair, CondSettings { method, k }, source.generated.seed)?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_argument_error() {
                EXIT_ARGUMENT
            } else {
                EXIT_NUMERICAL
            })
        }
        Err(Failure::BoundViolation(line)) => {
            eprintln!("bound violated: {line}");
            ExitCode::from(EXIT_BOUND_VIOLATION)
        }
    }
}
