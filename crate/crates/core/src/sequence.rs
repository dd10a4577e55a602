//! Per-frame pose samples and the sequence CSV format.
//!
//! One header row, then one row per frame:
//!
//! ```text
//! frame,timestamp,gt_x,gt_y,gt_z,gt_qw,gt_qx,gt_qy,gt_qz,vio_x,vio_y,vio_z,vio_qw,vio_qx,vio_qy,vio_qz,apr_x,apr_y,apr_z,apr_qw,apr_qx,apr_qy,apr_qz
//! ```
//!
//! Positions are meters, quaternions scalar-first world-to-camera. The `gt`
//! and `apr` groups are optional: leave all seven cells empty, or omit the
//! columns entirely. `vio` is always required. Columns are located by name
//! when reading; writing always emits the full header in the order above.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::geometry::{Pose, UnitQuaternion, Vec3};

/// Quaternions whose norm is within this of 1 are renormalized; others are
/// rejected.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-3;

pub const HEADER: [&str; 23] = [
    "frame",
    "timestamp",
    "gt_x",
    "gt_y",
    "gt_z",
    "gt_qw",
    "gt_qx",
    "gt_qy",
    "gt_qz",
    "vio_x",
    "vio_y",
    "vio_z",
    "vio_qw",
    "vio_qx",
    "vio_qy",
    "vio_qz",
    "apr_x",
    "apr_y",
    "apr_z",
    "apr_qw",
    "apr_qx",
    "apr_qy",
    "apr_qz",
];

const GROUP_SUFFIXES: [&str; 7] = ["x", "y", "z", "qw", "qx", "qy", "qz"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSample {
    pub frame_index: u64,
    pub timestamp: f64,
    pub gt: Option<Pose>,
    pub vio: Pose,
    pub apr: Option<Pose>,
}

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("header: missing required column `{0}`")]
    MissingColumn(String),

    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
}

impl SequenceError {
    fn row(line: u64, message: impl Into<String>) -> Self {
        SequenceError::Row {
            line,
            message: message.into(),
        }
    }
}

type GroupColumns = [usize; 7];

struct Layout {
    frame: usize,
    timestamp: usize,
    gt: Option<GroupColumns>,
    vio: GroupColumns,
    apr: Option<GroupColumns>,
}

impl Layout {
    fn from_header(header: &csv::StringRecord) -> Result<Self, SequenceError> {
        let find = |name: &str| header.iter().position(|h| h.trim() == name);
        let require =
            |name: &str| find(name).ok_or_else(|| SequenceError::MissingColumn(name.into()));
        let group = |prefix: &str| -> Result<Option<GroupColumns>, SequenceError> {
            let cols: Vec<Option<usize>> = GROUP_SUFFIXES
                .iter()
                .map(|s| find(&format!("{prefix}_{s}")))
                .collect();
            if cols.iter().all(Option::is_none) {
                return Ok(None);
            }
            let mut out = [0; 7];
            for (slot, (col, suffix)) in out.iter_mut().zip(cols.iter().zip(GROUP_SUFFIXES)) {
                *slot =
                    col.ok_or_else(|| SequenceError::MissingColumn(format!("{prefix}_{suffix}")))?;
            }
            Ok(Some(out))
        };
        Ok(Self {
            frame: require("frame")?,
            timestamp: require("timestamp")?,
            gt: group("gt")?,
            vio: group("vio")?.ok_or_else(|| SequenceError::MissingColumn("vio_x".into()))?,
            apr: group("apr")?,
        })
    }
}

fn cell(record: &csv::StringRecord, col: usize) -> &str {
    record.get(col).unwrap_or("").trim()
}

fn parse_f64(
    record: &csv::StringRecord,
    col: usize,
    name: &str,
    line: u64,
) -> Result<f64, SequenceError> {
    let text = cell(record, col);
    let value: f64 = text.parse().map_err(|_| {
        SequenceError::row(
            line,
            format!("column `{name}`: cannot parse `{text}` as a number"),
        )
    })?;
    if !value.is_finite() {
        return Err(SequenceError::row(
            line,
            format!("column `{name}`: non-finite value"),
        ));
    }
    Ok(value)
}

fn parse_group(
    record: &csv::StringRecord,
    cols: &GroupColumns,
    prefix: &str,
    line: u64,
) -> Result<Option<Pose>, SequenceError> {
    let empty = cols.iter().filter(|c| cell(record, **c).is_empty()).count();
    if empty == cols.len() {
        return Ok(None);
    }
    if empty > 0 {
        return Err(SequenceError::row(
            line,
            format!("`{prefix}` pose is partially filled"),
        ));
    }
    let mut v = [0.0; 7];
    for ((slot, col), suffix) in v.iter_mut().zip(cols).zip(GROUP_SUFFIXES) {
        *slot = parse_f64(record, *col, &format!("{prefix}_{suffix}"), line)?;
    }
    let norm = (v[3] * v[3] + v[4] * v[4] + v[5] * v[5] + v[6] * v[6]).sqrt();
    if (norm - 1.0).abs() > QUATERNION_NORM_TOLERANCE {
        return Err(SequenceError::row(
            line,
            format!("`{prefix}` quaternion has norm {norm}, not unit within {QUATERNION_NORM_TOLERANCE}"),
        ));
    }
    let q = UnitQuaternion::new(v[3], v[4], v[5], v[6])
        .map_err(|e| SequenceError::row(line, e.to_string()))?;
    Ok(Some(Pose::new(Vec3::new(v[0], v[1], v[2]), q)))
}

pub fn read_sequence<R: Read>(reader: R) -> Result<Vec<PoseSample>, SequenceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let layout = Layout::from_header(rdr.headers()?)?;

    let mut samples: Vec<PoseSample> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let frame_text = cell(&record, layout.frame);
        let frame_index: u64 = frame_text.parse().map_err(|_| {
            SequenceError::row(
                line,
                format!("column `frame`: `{frame_text}` is not a frame number"),
            )
        })?;
        let timestamp = parse_f64(&record, layout.timestamp, "timestamp", line)?;
        if let Some(prev) = samples.last() {
            if timestamp <= prev.timestamp {
                return Err(SequenceError::row(
                    line,
                    format!(
                        "timestamp {timestamp} does not increase (previous {})",
                        prev.timestamp
                    ),
                ));
            }
        }
        let gt = match &layout.gt {
            Some(cols) => parse_group(&record, cols, "gt", line)?,
            None => None,
        };
        let vio = parse_group(&record, &layout.vio, "vio", line)?
            .ok_or_else(|| SequenceError::row(line, "`vio` pose is required"))?;
        let apr = match &layout.apr {
            Some(cols) => parse_group(&record, cols, "apr", line)?,
            None => None,
        };
        samples.push(PoseSample {
            frame_index,
            timestamp,
            gt,
            vio,
            apr,
        });
    }
    Ok(samples)
}

pub fn parse_sequence(path: impl AsRef<Path>) -> Result<Vec<PoseSample>, SequenceError> {
    read_sequence(File::open(path)?)
}

fn push_group(row: &mut Vec<String>, pose: Option<&Pose>) {
    match pose {
        Some(p) => {
            row.extend(p.position.to_array().iter().map(f64::to_string));
            row.extend(p.orientation.to_array().iter().map(f64::to_string));
        }
        None => row.extend(std::iter::repeat_n(String::new(), 7)),
    }
}

/// Writes samples in the canonical column order. Numbers use the shortest
/// representation that parses back to the same `f64`.
pub fn write_sequence<W: Write>(writer: W, samples: &[PoseSample]) -> Result<(), SequenceError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(HEADER)?;
    let mut row = Vec::with_capacity(HEADER.len());
    for s in samples {
        row.clear();
        row.push(s.frame_index.to_string());
        row.push(s.timestamp.to_string());
        push_group(&mut row, s.gt.as_ref());
        push_group(&mut row, Some(&s.vio));
        push_group(&mut row, s.apr.as_ref());
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_sequence(path: impl AsRef<Path>, samples: &[PoseSample]) -> Result<(), SequenceError> {
    write_sequence(File::create(path)?, samples)
}
