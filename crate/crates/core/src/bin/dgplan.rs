//! Command-line driver for DG planning studies.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dgplan::evaluate::summary_csv;
use dgplan::study::{exit_code, Study, StudyConfig, EVAL_TEXT_FILE};

#[derive(Parser)]
#[command(
    name = "dgplan",
    version,
    about = "Equity-aware DG planning for radial distribution networks"
)]
struct Cli {
    /// Study configuration (TOML). Defaults apply when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output`).
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Time horizon in intervals (overrides `horizon`).
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Worker threads.
    #[arg(short, long, global = true)]
    jobs: Option<usize>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate fault scenarios and sample the test set.
    Gen {
        /// `ieee33` or a case file.
        #[arg(long)]
        case: Option<String>,
        /// Fault-set sizes, e.g. `2,3`.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long)]
        seed: Option<u64>,
        /// Fault-weight multiplier for lines serving low-income buses.
        #[arg(long)]
        ratio: Option<f64>,
    },
    /// Cluster the scenarios into a reduced set.
    Reduce {
        /// Fixed cluster count instead of the elbow.
        #[arg(short)]
        k: Option<usize>,
        #[arg(long)]
        kmax: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve the planning problem on the reduced set.
    Plan {
        /// One equity criterion for every bus (`inf` drops the constraint).
        #[arg(short)]
        e: Option<f64>,
    },
    /// Evaluate a plan on the test set.
    Eval {
        /// Plan file; defaults to the one written by `plan`.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Reference plan for the equity cost.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Plan and evaluate across the equity sweep.
    Report,
    /// Print the resolved configuration.
    Config,
}

fn run(cli: Cli) -> dgplan::Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => StudyConfig::load(p)?,
        None => StudyConfig::default(),
    };
    if let Some(o) = cli.output {
        cfg.output = o;
    }
    if cli.horizon.is_some() {
        cfg.horizon = cli.horizon;
    }
    match &cli.command {
        Command::Gen {
            case,
            sizes,
            seed,
            ratio,
        } => {
            if let Some(c) = case {
                cfg.case = c.clone();
            }
            if let Some(s) = sizes {
                cfg.scenarios.sizes = s.clone();
            }
            if let Some(s) = seed {
                cfg.scenarios.seed = *s;
            }
            if let Some(r) = ratio {
                cfg.scenarios.low_income_weight_ratio = *r;
            }
        }
        Command::Reduce {
            k,
            kmax,
            restarts,
            seed,
        } => {
            if k.is_some() {
                cfg.reduction.k = *k;
            }
            if let Some(m) = kmax {
                cfg.reduction.kmax = *m;
            }
            if let Some(r) = restarts {
                cfg.reduction.restarts = *r;
            }
            if let Some(s) = seed {
                cfg.reduction.seed = *s;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    if let Command::Config = cli.command {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let study = Study::new(cfg)?;
    match cli.command {
        Command::Gen { .. } => {
            study.gen()?;
        }
        Command::Reduce { .. } => {
            let r = study.reduce()?;
            println!("reduced to {} scenarios", r.reduced.len());
        }
        Command::Plan { e } => {
            let out = study.plan(e)?;
            println!("{}", out.plan.to_csv().trim_end());
        }
        Command::Eval { plan, reference } => {
            study.eval(plan.as_deref(), reference.as_deref())?;
            print!("{}", std::fs::read_to_string(study.out(EVAL_TEXT_FILE))?);
        }
        Command::Report => {
            print!("{}", summary_csv(&study.report()?));
        }
        Command::Config => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
