use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rotavg::averaging::Method;
use rotavg::synthetic::OutlierModel;
use rotavg_bench::{emit_csv, emit_summary, run_sweep, RejectionMode, SweepConfig};

/// Monte Carlo accuracy and timing sweep over the rotation averaging
/// estimators.
#[derive(Debug, Parser)]
#[command(name = "rotavg-bench", version)]
struct Args {
    /// Comma-separated subset of chordal-l2, init-median, geodesic-l1, chordal-l1.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "chordal-l2,init-median,geodesic-l1,chordal-l1"
    )]
    methods: Vec<Method>,

    /// Outlier rejection for the iterative methods: on, off or both.
    #[arg(long, default_value = "both")]
    rejection: RejectionMode,

    /// Inlier noise levels in degrees.
    #[arg(long, value_delimiter = ',', default_value = "5,15")]
    sigmas: Vec<f64>,

    /// Outlier ratios in [0, 1].
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,0.95")]
    ratios: Vec<f64>,

    /// Rotations per instance.
    #[arg(long, default_value_t = 100)]
    n: usize,

    /// Trials per (σ, ratio) cell.
    #[arg(long, default_value_t = 1000)]
    trials: usize,

    /// Base seed for the per-trial instance seeds.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Outliers drawn around the ground truth (around-truth) or
    /// independently of it (absolute).
    #[arg(long, default_value = "around-truth")]
    outlier_model: OutlierModel,

    /// Write per-trial records to this CSV file.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Print the summary table (always printed when --out is absent).
    #[arg(long)]
    summary: bool,

    /// Worker threads; 1 gives the least noisy timings.
    #[arg(long)]
    threads: Option<usize>,

    /// Write every generated instance as a text file into this directory.
    #[arg(long)]
    dump_instances: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = SweepConfig {
        methods: args.methods,
        rejection: args.rejection,
        sigmas_deg: args.sigmas,
        outlier_ratios: args.ratios,
        n_rotations: args.n,
        trials: args.trials,
        base_seed: args.seed,
        outlier_model: args.outlier_model,
        threads: args.threads,
        dump_instances: args.dump_instances,
    };

    let sweep = match run_sweep(&config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };

    if let Some(path) = &args.out {
        if let Err(e) = emit_csv(&sweep.records, path) {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::FAILURE;
        }
    }
    if args.summary || args.out.is_none() {
        print!("{}", emit_summary(&sweep.records));
    }
    ExitCode::SUCCESS
}
