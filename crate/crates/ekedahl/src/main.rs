use clap::{Parser, Subcommand, ValueEnum};
use ekedahl::cli::{self, Command, OutputFormat, RunConfig};
use ekedahl::fan::CyclicQuotientType;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "ekedahl",
    about = "Toric resolutions of cyclic quotient singularities, their spectral sequences, \
             and the Ekedahl invariants of the discrete Heisenberg groups"
)]
struct Args {
    #[command(subcommand)]
    command: Cli,
    /// Directory for the output artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Output format for the tabular commands.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Reserved; no algorithm consumes randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cli {
    /// Resolve a cyclic quotient singularity 1/n(a1,a2,...).
    Resolve {
        /// Quotient type, e.g. "1/5(1,2,3,4)".
        quotient: CyclicQuotientType,
    },
    /// Report smoothness, simpliciality and completeness of a fan.
    FanCheck {
        /// Fan JSON file.
        input: PathBuf,
    },
    /// Betti numbers of a smooth complete fan.
    Betti {
        /// Fan JSON file.
        input: PathBuf,
    },
    /// Dump one d1 differential of the exceptional spectral sequence.
    D1Matrix {
        /// Resolution record JSON (from `resolve`).
        input: PathBuf,
        /// Column of the source entry (negative).
        #[arg(long, allow_hyphen_values = true)]
        col: i64,
        /// Row of the source entry.
        #[arg(long)]
        row: i64,
    },
    /// Build the E1 page and the convergence report of a resolution.
    Spectral {
        /// Resolution record JSON (from `resolve`).
        input: PathBuf,
        /// Number of isomorphic singularities to sum over.
        #[arg(long, default_value_t = 1)]
        copies: usize,
        /// Largest abutment degree to assemble.
        #[arg(long, default_value_t = 8)]
        max_degree: usize,
    },
    /// Cohomology of the free quotient U_p in the validated range.
    CartanLeray {
        #[arg(long)]
        p: u64,
        /// Largest degree to tabulate (must stay below 2p - 2).
        #[arg(long)]
        max_k: i64,
    },
    /// Full Ekedahl-invariant pipeline for the Heisenberg group H_p.
    Heisenberg {
        #[arg(long)]
        p: u64,
    },
    /// Compare two artifact directories structurally.
    Verify {
        #[arg(long)]
        golden: PathBuf,
        #[arg(long)]
        fresh: PathBuf,
    },
}

fn main() {
    let args = Args::parse();
    let command = match args.command {
        Cli::Resolve { quotient } => Command::Resolve { quotient },
        Cli::FanCheck { input } => Command::FanCheck { input },
        Cli::Betti { input } => Command::Betti { input },
        Cli::D1Matrix { input, col, row } => Command::D1Matrix { input, col, row },
        Cli::Spectral {
            input,
            copies,
            max_degree,
        } => Command::Spectral {
            input,
            copies,
            max_degree,
        },
        Cli::CartanLeray { p, max_k } => Command::CartanLeray { p, max_k },
        Cli::Heisenberg { p } => Command::Heisenberg { p },
        Cli::Verify { golden, fresh } => Command::Verify { golden, fresh },
    };
    let config = RunConfig {
        command,
        output_dir: args.out,
        format: match args.format {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        },
        seed: args.seed,
    };
    let result = cli::execute(&config);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    std::process::exit(cli::exit_code(&result));
}
