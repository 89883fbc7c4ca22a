//! `sigbench`: scoring pipelines, evaluation, ranking, and synthetic data
//! for on-line signature verification benchmarks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sigbench_cli::commands;

#[derive(Parser)]
#[command(
    name = "sigbench",
    version,
    about = "On-line signature verification benchmark harness",
    long_about = "Scores signature comparison lists with configurable \
                  pipelines (feature extraction + DTW/soft-DTW matching), \
                  evaluates score files into EER/DET reports, ranks team \
                  reports across tasks, and generates seeded synthetic \
                  datasets.\n\nExit codes: 0 success, 2 validation error, \
                  3 I/O error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert an external signature export to the canonical format.
    Convert {
        /// Whitespace-separated input file.
        input: PathBuf,
        /// Destination signature file.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated roles of the input columns: x, y, t, p, pen, skip.
        #[arg(long)]
        columns: String,
        /// The first line declares the sample count.
        #[arg(long)]
        count_header: bool,
        /// Signature id to embed (default: the input file stem).
        #[arg(long)]
        id: Option<String>,
        /// Multiplier converting input timestamps to milliseconds.
        #[arg(long, default_value_t = 1.0)]
        t_scale: f64,
    },
    /// Score a comparison list with a configured pipeline.
    Compare {
        /// Pipeline config file (default: the baseline DTW pipeline).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dataset manifest (`id path tool scenario label` per line).
        #[arg(long)]
        manifest: PathBuf,
        /// Comparison list (`reference_id probe_id [label]` per line).
        #[arg(long)]
        comparisons: PathBuf,
        /// Destination score file, one score per comparison line.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = one per CPU). The output bytes do not depend
        /// on this.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Evaluate a score file into an EER report and DET curves.
    Eval {
        /// Score file produced by `compare`.
        #[arg(long)]
        scores: PathBuf,
        /// Labeled ground-truth comparison list.
        #[arg(long)]
        comparisons: PathBuf,
        /// Output directory for report.txt and det_*.csv.
        #[arg(long)]
        out: PathBuf,
        /// Pipeline config the scores were produced with; supplies the score
        /// orientation (default: lower scores mean genuine).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Rank team evaluation reports across tasks.
    Rank {
        /// Directory with one subdirectory per task, each holding one
        /// `<team>.txt` report per team.
        #[arg(long)]
        reports: PathBuf,
        /// Destination markdown file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a seeded synthetic dataset.
    Synth {
        /// Spec file (default: 20 subjects, 8 genuine + 8 skilled each).
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> sigbench_cli::Result<()> {
    match cli.command {
        Command::Convert {
            input,
            out,
            columns,
            count_header,
            id,
            t_scale,
        } => commands::cmd_convert(&input, &out, &columns, count_header, id.as_deref(), t_scale),
        Command::Compare {
            config,
            manifest,
            comparisons,
            out,
            workers,
        } => commands::cmd_compare(config.as_deref(), &manifest, &comparisons, &out, workers),
        Command::Eval {
            scores,
            comparisons,
            out,
            config,
        } => commands::cmd_eval(&scores, &comparisons, &out, config.as_deref()),
        Command::Rank { reports, out } => commands::cmd_rank(&reports, &out),
        Command::Synth { spec, out, seed } => commands::cmd_synth(spec.as_deref(), &out, seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
