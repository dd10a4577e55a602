//! Library side of the `posefuse` tool: manifests, sequence processing and
//! report files.
//!
//! For every sequence `<name>` the run writes into the output directory:
//!
//! * `<name>.frames.csv`: one row per input frame.
//! * `<name>.summary.json`: see [`report::Summary`].
//! * `<name>.cdf.csv`: `kind,threshold,fraction` CDF sample points.

pub mod error;
pub mod manifest;
pub mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use posefuse_core::sequence::{parse_sequence, SequenceError};
use posefuse_core::synth::generate_sequence;
use posefuse_core::PoseSample;

pub use error::CliError;
pub use manifest::{Mode, ReportFormat, RunManifest, SequenceEntry};
pub use report::{evaluate_sequence, SequenceReport, Summary};

pub const FRAMES_HEADER: [&str; 14] = [
    "frame",
    "timestamp",
    "label",
    "x",
    "y",
    "z",
    "qw",
    "qx",
    "qy",
    "qz",
    "ape_pos",
    "ape_ori",
    "apr_ape_pos",
    "apr_ape_ori",
];

pub const CDF_HEADER: [&str; 3] = ["kind", "threshold", "fraction"];

/// Loads the samples of one manifest entry.
pub fn load_samples(entry: &SequenceEntry) -> Result<Vec<PoseSample>, CliError> {
    match (&entry.input, &entry.synth) {
        (Some(path), None) => parse_sequence(path).map_err(|e| {
            let ctx = format!("reading {}", path.display());
            match e {
                SequenceError::Io(_) => CliError::Runtime(e.to_string()),
                _ => CliError::Validation(e.to_string()),
            }
            .context(ctx)
        }),
        (None, Some(cfg)) => generate_sequence(cfg).map_err(report::core_err),
        _ => Err(CliError::Validation(format!(
            "sequence `{}`: set exactly one of `input` or `synth`",
            entry.name
        ))),
    }
}

fn process(manifest: &RunManifest, entry: &SequenceEntry) -> Result<SequenceReport, CliError> {
    let samples = load_samples(entry)?;
    let window = entry
        .align_window_seconds
        .unwrap_or(manifest.align_window_seconds);
    evaluate_sequence(&entry.name, &samples, entry.mode, &manifest.fusion, window)
}

/// Processes every sequence (concurrently) and writes the requested report
/// files. Returns the reports in manifest order, or the first error in
/// manifest order.
pub fn run_pipeline(manifest: &RunManifest) -> Result<Vec<SequenceReport>, CliError> {
    manifest.validate()?;
    let results: Vec<Result<SequenceReport, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = manifest
            .sequences
            .iter()
            .map(|entry| scope.spawn(move || process(manifest, entry)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(CliError::Runtime("worker thread panicked".into())))
            })
            .collect()
    });

    let mut reports = Vec::with_capacity(results.len());
    for (entry, result) in manifest.sequences.iter().zip(results) {
        reports.push(result.map_err(|e| e.context(format!("sequence `{}`", entry.name)))?);
    }

    fs::create_dir_all(&manifest.out)
        .map_err(|e| CliError::Runtime(format!("creating {}: {e}", manifest.out.display())))?;
    for report in &reports {
        write_report(&manifest.out, report, &manifest.formats)?;
    }
    Ok(reports)
}

/// [`run_pipeline`] mapped to a process exit code, printing diagnostics to
/// stderr.
pub fn run_pipeline_command(manifest: &RunManifest) -> i32 {
    match run_pipeline(manifest) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn output_path(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}.{suffix}"))
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("writing {}: {e}", path.display()))
}

pub fn write_report(
    dir: &Path,
    report: &SequenceReport,
    formats: &[ReportFormat],
) -> Result<(), CliError> {
    let name = &report.summary.sequence;
    if formats.contains(&ReportFormat::Frames) {
        let path = output_path(dir, name, "frames.csv");
        write_frames(&path, report).map_err(|e| write_err(&path, e))?;
    }
    if formats.contains(&ReportFormat::Summary) {
        let path = output_path(dir, name, "summary.json");
        fs::write(&path, summary_json(&report.summary)).map_err(|e| write_err(&path, e))?;
    }
    if formats.contains(&ReportFormat::Cdf) {
        let path = output_path(dir, name, "cdf.csv");
        write_cdf(&path, report).map_err(|e| write_err(&path, e))?;
    }
    Ok(())
}

/// Pretty-printed summary with a trailing newline.
pub fn summary_json(summary: &Summary) -> String {
    let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
    text.push('\n');
    text
}

fn opt_pair(v: Option<(f64, f64)>) -> [String; 2] {
    match v {
        Some((a, b)) => [a.to_string(), b.to_string()],
        None => [String::new(), String::new()],
    }
}

fn write_frames(path: &Path, report: &SequenceReport) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(FRAMES_HEADER)?;
    for row in &report.frames {
        let mut rec = vec![
            row.frame.to_string(),
            row.timestamp.to_string(),
            row.label
                .map(|l| l.as_str().to_string())
                .unwrap_or_default(),
        ];
        rec.extend(row.pose.position.to_array().iter().map(f64::to_string));
        rec.extend(row.pose.orientation.to_array().iter().map(f64::to_string));
        rec.extend(opt_pair(row.ape));
        rec.extend(opt_pair(row.apr_ape));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

fn write_cdf(path: &Path, report: &SequenceReport) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(CDF_HEADER)?;
    for row in &report.cdf {
        wtr.write_record([
            row.kind.to_string(),
            row.point.threshold.to_string(),
            row.point.fraction.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes `samples` in the sequence CSV format to `path` (or stdout for `-`).
pub fn write_samples(path: &Path, samples: &[PoseSample]) -> Result<(), CliError> {
    use posefuse_core::sequence::write_sequence;
    if path == Path::new("-") {
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        write_sequence(&mut lock, samples).map_err(|e| write_err(path, e))?;
        lock.flush().map_err(|e| write_err(path, e))
    } else {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| write_err(path, e))?;
        }
        let file = fs::File::create(path).map_err(|e| write_err(path, e))?;
        write_sequence(std::io::BufWriter::new(file), samples).map_err(|e| write_err(path, e))
    }
}
