use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use posefuse_cli::report::core_err;
use posefuse_cli::{run_pipeline, write_samples, CliError, Mode, RunManifest, SequenceEntry};
use posefuse_core::synth::{generate_sequence, SynthConfig};

#[derive(Debug, Parser)]
#[command(
    name = "posefuse",
    version,
    about = "Fuse APR poses with VIO and evaluate trajectories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fuse and evaluate sequences from a manifest or a single input.
    Run(RunArgs),
    /// Write a synthetic GT/VIO/APR sequence as CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML run manifest. Flags below override its settings.
    manifest: Option<PathBuf>,

    /// Single sequence CSV to process (instead of a manifest).
    #[arg(long, conflicts_with_all = ["manifest", "synth"])]
    input: Option<PathBuf>,

    /// Process one synthetic sequence (instead of a manifest).
    #[arg(long, conflicts_with = "manifest")]
    synth: bool,

    /// Frames of the synthetic sequence.
    #[arg(long, requires = "synth")]
    frames: Option<usize>,

    /// Seed for synthetic sequences.
    #[arg(long)]
    seed: Option<u64>,

    /// Odometry distance threshold, meters.
    #[arg(long, allow_negative_numbers = true)]
    dth: Option<f64>,

    /// Odometry angle threshold, degrees.
    #[arg(long, allow_negative_numbers = true)]
    oth: Option<f64>,

    /// Consecutive passing pairs needed before optimizing.
    #[arg(short = 'N')]
    n_pairs: Option<usize>,

    /// Frames per optimization stage.
    #[arg(short = 'T')]
    t_opt: Option<usize>,

    /// VIO-to-GT alignment window, seconds.
    #[arg(long)]
    align_window_seconds: Option<f64>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Only evaluate VIO against GT; no fusion.
    #[arg(long)]
    evaluate_only: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Destination CSV, `-` for stdout.
    #[arg(long)]
    out: PathBuf,

    #[arg(long, default_value_t = 200)]
    frames: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn build_manifest(args: &RunArgs) -> Result<RunManifest, CliError> {
    let mut manifest = match &args.manifest {
        Some(path) => RunManifest::load(path)?,
        None => {
            let mut m = RunManifest::new(PathBuf::from("posefuse-out"));
            let entry = if let Some(input) = &args.input {
                let name = input
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("sequence")
                    .to_string();
                SequenceEntry {
                    name,
                    input: Some(input.clone()),
                    synth: None,
                    mode: Mode::Fuse,
                    align_window_seconds: None,
                }
            } else if args.synth {
                SequenceEntry {
                    name: "synth".into(),
                    input: None,
                    synth: Some(SynthConfig::default()),
                    mode: Mode::Fuse,
                    align_window_seconds: None,
                }
            } else {
                return Err(CliError::Validation(
                    "give a manifest, --input FILE or --synth".into(),
                ));
            };
            m.sequences.push(entry);
            m
        }
    };

    let f = &mut manifest.fusion;
    f.d_th = args.dth.unwrap_or(f.d_th);
    f.o_th = args.oth.unwrap_or(f.o_th);
    f.n_pairs = args.n_pairs.unwrap_or(f.n_pairs);
    f.t_opt = args.t_opt.unwrap_or(f.t_opt);
    if let Some(w) = args.align_window_seconds {
        manifest.align_window_seconds = w;
    }
    if let Some(out) = &args.out {
        manifest.out = out.clone();
    }
    for entry in &mut manifest.sequences {
        if let Some(synth) = &mut entry.synth {
            if let Some(seed) = args.seed {
                synth.trajectory.seed = seed;
            }
            if let Some(n) = args.frames {
                synth.trajectory.n_frames = n;
            }
        }
        if args.evaluate_only {
            entry.mode = Mode::Evaluate;
        }
    }
    Ok(manifest)
}

fn run(args: &RunArgs) -> Result<(), CliError> {
    let manifest = build_manifest(args)?;
    for report in run_pipeline(&manifest)? {
        eprintln!(
            "{}: {} frames -> {}",
            report.summary.sequence,
            report.summary.frames,
            manifest.out.display()
        );
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let mut cfg = SynthConfig::default();
    cfg.trajectory.n_frames = args.frames;
    cfg.trajectory.seed = args.seed;
    let samples = generate_sequence(&cfg).map_err(core_err)?;
    write_samples(&args.out, &samples)
}

fn main() -> ExitCode {
    // Usage errors are validation errors (exit 1), not clap's default 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Synth(args) => synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
