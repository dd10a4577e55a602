//! Per-sequence evaluation and the summary JSON schema.

use posefuse_core::metrics::{
    align_and_evaluate, cdf_samples, mean, median, orientation_cdf_grid, position_cdf_grid,
    relative_errors, summarize, CdfPoint, ErrorRecord, PrecisionBuckets, SummaryReport,
};
use posefuse_core::{FusionConfig, FusionOutput, Label, Pose, PoseSample};
use serde::Serialize;

use crate::error::CliError;
use crate::manifest::Mode;

/// Frame subsets reported separately. `Keyframes` are the frames whose APR
/// pose was accepted as is (keyframes and reliable frames of the
/// optimization stage), `Optimized` the frames replaced by a corrected VIO
/// pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelGroup {
    All,
    Keyframes,
    Optimized,
    KeyframesAndOptimized,
}

impl LabelGroup {
    pub fn contains(self, label: Label) -> bool {
        match self {
            LabelGroup::All => true,
            LabelGroup::Keyframes => matches!(label, Label::Keyframe | Label::Reliable),
            LabelGroup::Optimized => label == Label::Optimized,
            LabelGroup::KeyframesAndOptimized => {
                matches!(label, Label::Keyframe | Label::Reliable | Label::Optimized)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorStats {
    pub count: usize,
    pub median_pos: f64,
    pub median_ori: f64,
    pub mean_pos: f64,
    pub mean_ori: f64,
    pub buckets: PrecisionBuckets,
}

impl From<&SummaryReport> for ErrorStats {
    fn from(s: &SummaryReport) -> Self {
        Self {
            count: s.count,
            median_pos: s.median_pos,
            median_ori: s.median_ori,
            mean_pos: s.mean_pos,
            mean_ori: s.mean_ori,
            buckets: s.buckets,
        }
    }
}

/// Stats per label group; `null` when a group has no frames with GT.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupedStats {
    pub all: Option<ErrorStats>,
    pub keyframes: Option<ErrorStats>,
    pub optimized: Option<ErrorStats>,
    pub keyframes_and_optimized: Option<ErrorStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelativeStats {
    pub count: usize,
    pub median_rpe: f64,
    pub median_roe: f64,
    pub mean_rpe: f64,
    pub mean_roe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VioStats {
    /// APE/AOE after rigid alignment on the initial window.
    pub ape: ErrorStats,
    pub rpe: RelativeStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LabelCounts {
    pub keyframe: usize,
    pub reliable: usize,
    pub optimized: usize,
    pub tracked: usize,
    pub pending: usize,
}

impl LabelCounts {
    pub fn tally(outputs: &[FusionOutput]) -> Self {
        let mut c = Self::default();
        for o in outputs {
            *match o.label {
                Label::Keyframe => &mut c.keyframe,
                Label::Reliable => &mut c.reliable,
                Label::Optimized => &mut c.optimized,
                Label::Tracked => &mut c.tracked,
                Label::Pending => &mut c.pending,
            } += 1;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fusion: Option<FusionConfig>,
    pub align_window_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub sequence: String,
    pub frames: usize,
    pub frames_with_gt: usize,
    pub config: ReportConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_counts: Option<LabelCounts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_apr: Option<GroupedStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fused: Option<GroupedStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vio: Option<VioStats>,
}

/// One row of the per-frame CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRow {
    pub frame: u64,
    pub timestamp: f64,
    pub label: Option<Label>,
    pub pose: Pose,
    pub ape: Option<(f64, f64)>,
    pub apr_ape: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfRow {
    pub kind: &'static str,
    pub point: CdfPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceReport {
    pub summary: Summary,
    pub frames: Vec<FrameRow>,
    pub cdf: Vec<CdfRow>,
}

pub fn core_err(e: posefuse_core::Error) -> CliError {
    use posefuse_core::Error as E;
    match e {
        E::InvalidConfig(_)
        | E::MissingPose { .. }
        | E::OutOfOrder { .. }
        | E::TooFew { .. }
        | E::Empty(_) => CliError::Validation(e.to_string()),
        _ => CliError::Runtime(e.to_string()),
    }
}

fn grouped(records: &[ErrorRecord], labels: &[Label]) -> Result<GroupedStats, CliError> {
    let stats = |group: LabelGroup| -> Result<Option<ErrorStats>, CliError> {
        let subset: Vec<ErrorRecord> = records
            .iter()
            .zip(labels)
            .filter(|(_, l)| group.contains(**l))
            .map(|(r, _)| *r)
            .collect();
        if subset.is_empty() {
            return Ok(None);
        }
        Ok(Some(ErrorStats::from(
            &summarize(&subset).map_err(core_err)?,
        )))
    };
    Ok(GroupedStats {
        all: stats(LabelGroup::All)?,
        keyframes: stats(LabelGroup::Keyframes)?,
        optimized: stats(LabelGroup::Optimized)?,
        keyframes_and_optimized: stats(LabelGroup::KeyframesAndOptimized)?,
    })
}

fn cdf_rows(
    kind_pos: &'static str,
    kind_ori: &'static str,
    records: &[ErrorRecord],
) -> Result<Vec<CdfRow>, CliError> {
    let pos: Vec<f64> = records.iter().map(|r| r.pos_err).collect();
    let ori: Vec<f64> = records.iter().map(|r| r.ori_err).collect();
    let mut rows: Vec<CdfRow> = cdf_samples(&pos, &position_cdf_grid())
        .map_err(core_err)?
        .into_iter()
        .map(|point| CdfRow {
            kind: kind_pos,
            point,
        })
        .collect();
    rows.extend(
        cdf_samples(&ori, &orientation_cdf_grid())
            .map_err(core_err)?
            .into_iter()
            .map(|point| CdfRow {
                kind: kind_ori,
                point,
            }),
    );
    Ok(rows)
}

struct VioEvaluation {
    stats: VioStats,
    aligned: Vec<Pose>,
    records: Vec<ErrorRecord>,
}

/// Aligns the VIO track on the frames with GT and scores it.
fn evaluate_vio(samples: &[PoseSample], window_seconds: f64) -> Result<VioEvaluation, CliError> {
    let with_gt: Vec<(&PoseSample, Pose)> = samples
        .iter()
        .filter_map(|s| s.gt.map(|g| (s, g)))
        .collect();
    let vio: Vec<Pose> = with_gt.iter().map(|(s, _)| s.vio).collect();
    let gt: Vec<Pose> = with_gt.iter().map(|(_, g)| *g).collect();
    let ts: Vec<f64> = with_gt.iter().map(|(s, _)| s.timestamp).collect();
    let eval = align_and_evaluate(&vio, &gt, window_seconds, &ts)
        .map_err(|e| core_err(e).context("aligning VIO to GT"))?;
    let rel = relative_errors(&vio, &gt).map_err(core_err)?;
    let rpe: Vec<f64> = rel.iter().map(|r| r.rpe).collect();
    let roe: Vec<f64> = rel.iter().map(|r| r.roe).collect();
    let records = eval
        .records
        .iter()
        .zip(&with_gt)
        .map(|(r, (s, _))| ErrorRecord {
            frame_index: s.frame_index,
            ..*r
        })
        .collect();
    Ok(VioEvaluation {
        stats: VioStats {
            ape: ErrorStats::from(&eval.summary),
            rpe: RelativeStats {
                count: rel.len(),
                median_rpe: median(&rpe).map_err(core_err)?,
                median_roe: median(&roe).map_err(core_err)?,
                mean_rpe: mean(&rpe).map_err(core_err)?,
                mean_roe: mean(&roe).map_err(core_err)?,
            },
        },
        aligned: samples
            .iter()
            .map(|s| eval.transform.apply_pose(&s.vio))
            .collect(),
        records,
    })
}

/// Runs fusion (in [`Mode::Fuse`]) and evaluation over one sequence.
pub fn evaluate_sequence(
    name: &str,
    samples: &[PoseSample],
    mode: Mode,
    fusion: &FusionConfig,
    window_seconds: f64,
) -> Result<SequenceReport, CliError> {
    if samples.is_empty() {
        return Err(CliError::Validation("sequence has no frames".into()));
    }
    let frames_with_gt = samples.iter().filter(|s| s.gt.is_some()).count();
    let config = ReportConfig {
        mode,
        fusion: (mode == Mode::Fuse).then_some(*fusion),
        align_window_seconds: window_seconds,
    };
    match mode {
        Mode::Evaluate => {
            if frames_with_gt == 0 {
                return Err(CliError::Validation(
                    "evaluation needs the `gt` pose columns, which are empty".into(),
                ));
            }
            let vio = evaluate_vio(samples, window_seconds)?;
            let mut ape = vio.records.iter();
            let frames = samples
                .iter()
                .zip(&vio.aligned)
                .map(|(s, pose)| FrameRow {
                    frame: s.frame_index,
                    timestamp: s.timestamp,
                    label: None,
                    pose: *pose,
                    ape: s
                        .gt
                        .and_then(|_| ape.next())
                        .map(|r| (r.pos_err, r.ori_err)),
                    apr_ape: None,
                })
                .collect();
            Ok(SequenceReport {
                cdf: cdf_rows("vio_pos", "vio_ori", &vio.records)?,
                summary: Summary {
                    sequence: name.to_string(),
                    frames: samples.len(),
                    frames_with_gt,
                    config,
                    label_counts: None,
                    raw_apr: None,
                    fused: None,
                    vio: Some(vio.stats),
                },
                frames,
            })
        }
        Mode::Fuse => {
            if let Some(s) = samples.iter().find(|s| s.apr.is_none()) {
                return Err(CliError::Validation(format!(
                    "fusion needs the `apr` pose columns (apr_x..apr_qz), missing at frame {}",
                    s.frame_index
                )));
            }
            let outputs = posefuse_core::run_sequence(samples, fusion).map_err(core_err)?;
            let mut frames = Vec::with_capacity(samples.len());
            let mut fused_records = Vec::new();
            let mut apr_records = Vec::new();
            let mut labels = Vec::new();
            for (s, out) in samples.iter().zip(&outputs) {
                let apr = s.apr.expect("checked above");
                let (ape, apr_ape) = match &s.gt {
                    Some(gt) => {
                        let f = ErrorRecord::between(s.frame_index, &out.pose, gt);
                        let a = ErrorRecord::between(s.frame_index, &apr, gt);
                        fused_records.push(f);
                        apr_records.push(a);
                        labels.push(out.label);
                        (Some((f.pos_err, f.ori_err)), Some((a.pos_err, a.ori_err)))
                    }
                    None => (None, None),
                };
                frames.push(FrameRow {
                    frame: s.frame_index,
                    timestamp: s.timestamp,
                    label: Some(out.label),
                    pose: out.pose,
                    ape,
                    apr_ape,
                });
            }

            let mut summary = Summary {
                sequence: name.to_string(),
                frames: samples.len(),
                frames_with_gt,
                config,
                label_counts: Some(LabelCounts::tally(&outputs)),
                raw_apr: None,
                fused: None,
                vio: None,
            };
            let mut cdf = Vec::new();
            if frames_with_gt > 0 {
                summary.raw_apr = Some(grouped(&apr_records, &labels)?);
                summary.fused = Some(grouped(&fused_records, &labels)?);
                let vio = evaluate_vio(samples, window_seconds)?;
                summary.vio = Some(vio.stats);
                cdf.extend(cdf_rows("fused_pos", "fused_ori", &fused_records)?);
                cdf.extend(cdf_rows("raw_apr_pos", "raw_apr_ori", &apr_records)?);
                cdf.extend(cdf_rows("vio_pos", "vio_ori", &vio.records)?);
            }
            Ok(SequenceReport {
                summary,
                frames,
                cdf,
            })
        }
    }
}
