mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use severi_core::equiv::DEFAULT_STATE_BUDGET;

pub const BUDGET_ENV: &str = "SEVERI_STATE_BUDGET";

#[derive(Parser, Debug)]
#[command(name = "severi", version, about = "Severi variety combinatorics on Hirzebruch surfaces")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Seed for pseudorandom root choices.
    #[arg(long, default_value_t = 42, global = true)]
    seed: u64,

    /// Maximum number of marking states per instance (overrides SEVERI_STATE_BUDGET).
    #[arg(long, global = true)]
    state_budget: Option<u64>,

    /// Worker threads for grid runs (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "camelCase", rename_all_fields = "camelCase", tag = "command")]
pub enum Command {
    /// Genus, dimensions and node counts for |dL0 + kF|.
    Lattice {
        #[arg(long)]
        n: u32,
        #[arg(long, allow_negative_numbers = true)]
        d: i64,
        #[arg(long, allow_negative_numbers = true)]
        k: i64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0)]
        g: i64,
    },
    /// The degenerate curve: nodes in canonical order, spanning trees.
    Gamma {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        k: u32,
    },
    /// Enumerate markings, list or apply moves, or replay a move trace.
    Markings {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        k: u32,
        /// Enumerate all markings of this order.
        #[arg(long, conflicts_with_all = ["marking", "replay"])]
        r: Option<usize>,
        /// With --r, keep only irreducible markings.
        #[arg(long, requires = "r")]
        irreducible: bool,
        /// Marking file (JSON array of node triples); lists its moves.
        #[arg(long, conflicts_with = "replay")]
        marking: Option<PathBuf>,
        /// With --marking, apply this move ({"family":…,"args":[…]}) instead.
        #[arg(long = "apply", requires = "marking")]
        apply: Option<PathBuf>,
        /// With --marking, include moves that leave it unchanged.
        #[arg(long, requires = "marking")]
        include_identity: bool,
        /// Replay a JSON-lines move trace.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// With --replay, only check records individually, not as a chain.
        #[arg(long, requires = "replay")]
        unchained: bool,
    },
    /// Equivalence classes of markings under moves.
    Equiv {
        /// Grid such as `n=1..2,d=2..3,k=0..2`; every r in the existence window.
        #[arg(long, conflicts_with_all = ["n", "d", "k", "r", "witness"])]
        grid: Option<String>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        d: Option<u32>,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, conflicts_with = "witness")]
        r: Option<usize>,
        /// Shortest move trace between two marking files.
        #[arg(long, num_args = 2, value_names = ["FROM", "TO"])]
        witness: Option<Vec<PathBuf>>,
        /// With --witness, also write the trace as replayable JSON lines.
        #[arg(long, requires = "witness")]
        trace_out: Option<PathBuf>,
        /// Write one file per class (single instance only).
        #[arg(long, requires = "r")]
        dump_dir: Option<PathBuf>,
    },
    /// Edge data, smoothness and rational curves for a lattice polygon.
    Toric {
        /// JSON list of integer pairs.
        polygon: PathBuf,
        /// Implicitize a parameterization with seeded random generic roots.
        #[arg(long)]
        implicitize: bool,
        /// Explicit roots per edge instead of random ones: JSON list (one per
        /// edge) of lists of "p/q" strings or {"value": "p/q", "multiplicity": m}.
        #[arg(long, requires = "implicitize")]
        roots: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetSource {
    Flag,
    Env,
    Default,
}

/// Everything that determines a report's content.
#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunConfig {
    pub format: Format,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub state_budget: u64,
    pub state_budget_source: BudgetSource,
    #[serde(flatten)]
    pub command: Command,
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub const EXIT_INPUT: u8 = 1;
pub const EXIT_BUDGET: u8 = 2;
/// A verified property turned out false.
pub const EXIT_COUNTEREXAMPLE: u8 = 3;

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: EXIT_INPUT, error: e.into() }
    }
}

fn resolve_budget(flag: Option<u64>) -> anyhow::Result<(u64, BudgetSource)> {
    let (budget, source) = match (flag, std::env::var(BUDGET_ENV)) {
        (Some(b), _) => (b, BudgetSource::Flag),
        (None, Ok(v)) => (
            v.trim().parse().map_err(|_| anyhow::anyhow!("{BUDGET_ENV}={v:?} is not a positive integer"))?,
            BudgetSource::Env,
        ),
        (None, Err(_)) => (DEFAULT_STATE_BUDGET, BudgetSource::Default),
    };
    anyhow::ensure!(budget >= 1, "state budget must be at least 1");
    Ok((budget, source))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let (state_budget, state_budget_source) = resolve_budget(cli.state_budget)?;
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let cfg = RunConfig {
        format: cli.format,
        output: cli.output,
        seed: cli.seed,
        state_budget,
        state_budget_source,
        command: cli.command,
    };
    let (report, code) = commands::dispatch(&cfg)?;
    let config = serde_json::to_value(&cfg)?;
    let text = match cfg.format {
        Format::Json => report::render_json(&report, &config)?,
        Format::Csv => report::render_csv(&report, &config)?,
    };
    report::emit(&text, cfg.output.as_deref())?;
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
