use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tomodit::commands::{self, Outcome, SimulateArgs};
use tomodit::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "tomodit",
    version,
    about = "Equidistant-state POVM tomography: circuit synthesis, simulation and reconstruction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the interferometer for dimension N and write it as JSON.
    Synthesize {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Send a single-photon state through a circuit file.
    Simulate {
        /// Circuit JSON written by `synthesize`.
        circuit: PathBuf,
        /// basis:k, equidistant:m, mixed:maximal, random:SEED, random-mixed:SEED,
        /// an inline amplitude list (`0.6,0.8i,0`) or a JSON file.
        #[arg(long)]
        state: String,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Insertion loss per element in dB.
        #[arg(long)]
        loss_db: Option<f64>,
        /// Write the exact port distribution instead of sampled counts.
        #[arg(long)]
        exact: bool,
        /// Unitary applied before the circuit: none, plan, phase:q or shift:s;phase:q.
        #[arg(long)]
        pre_op: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct ρ from one record (odd N) or a plain and a `--pre-op plan` record (even N).
    Tomography {
        #[arg(required = true)]
        records: Vec<PathBuf>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write complexity.csv and, with --loss-sweep, fidelity.csv.
    ///
    /// complexity.csv columns: N,n_bs_ours,n_bs_paper_formula,n_bs_general,od_ours,od_clements,od_reck
    ///
    /// fidelity.csv columns: N,db_per_bs,fidelity (0 to 3 dB in 0.25 dB steps)
    Report {
        #[arg(long, default_value_t = 3)]
        dim_min: usize,
        #[arg(long, default_value_t = 10)]
        dim_max: usize,
        #[arg(long)]
        loss_sweep: bool,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute a result file from its manifest and check the payload hash.
    Replay { file: PathBuf },
}

fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("TOMODIT_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::usage(format!(
            "TOMODIT_THREADS must be a positive integer, got {v:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(e.to_string()))
}

fn run(cli: Cli) -> CliResult<Outcome> {
    init_threads()?;
    match cli.command {
        Command::Synthesize { dim, out } => commands::synthesize(dim, &out),
        Command::Simulate {
            circuit,
            state,
            shots,
            seed,
            loss_db,
            exact,
            pre_op,
            out,
        } => commands::simulate(
            &SimulateArgs {
                circuit,
                state,
                shots: Some(shots),
                seed,
                loss_db,
                exact,
                pre_op,
            },
            &out,
        ),
        Command::Tomography { records, dim, out } => commands::tomography(&records, dim, &out),
        Command::Report {
            dim_min,
            dim_max,
            loss_sweep,
            out,
        } => commands::report(dim_min, dim_max, loss_sweep, &out),
        Command::Replay { file } => commands::replay(&file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(o) => {
            print!("{}", o.summary);
            for p in &o.written {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
