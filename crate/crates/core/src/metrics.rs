//! Trajectory evaluation: absolute and relative pose errors, empirical CDFs,
//! precision levels and rigid track alignment.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::RotationMatrix;
use crate::geometry::{
    odometry, rotation_angle_deg, translation_distance, Pose, RigidTransform, UnitQuaternion, Vec3,
};

/// Joint (meters, degrees) threshold for one precision level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrecisionLevel {
    pub max_pos: f64,
    pub max_ori: f64,
}

pub const HIGH_PRECISION: PrecisionLevel = PrecisionLevel {
    max_pos: 0.25,
    max_ori: 2.0,
};
pub const MEDIUM_PRECISION: PrecisionLevel = PrecisionLevel {
    max_pos: 0.5,
    max_ori: 5.0,
};
pub const LOW_PRECISION: PrecisionLevel = PrecisionLevel {
    max_pos: 5.0,
    max_ori: 10.0,
};

impl PrecisionLevel {
    pub fn contains(&self, record: &ErrorRecord) -> bool {
        record.pos_err <= self.max_pos && record.ori_err <= self.max_ori
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub frame_index: u64,
    /// Meters.
    pub pos_err: f64,
    /// Degrees.
    pub ori_err: f64,
}

impl ErrorRecord {
    pub fn between(frame_index: u64, est: &Pose, gt: &Pose) -> Self {
        let (pos_err, ori_err) = absolute_pose_error(est, gt);
        Self {
            frame_index,
            pos_err,
            ori_err,
        }
    }
}

/// `(position error m, orientation error deg)` of `est` against `gt`.
pub fn absolute_pose_error(est: &Pose, gt: &Pose) -> (f64, f64) {
    (
        translation_distance(&est.position, &gt.position),
        rotation_angle_deg(&gt.orientation, &est.orientation),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelativeError {
    pub rpe: f64,
    pub roe: f64,
}

/// Per consecutive frame pair, the disagreement between the two tracks'
/// scalar odometry.
pub fn relative_errors(track_a: &[Pose], track_b: &[Pose]) -> Result<Vec<RelativeError>> {
    if track_a.len() != track_b.len() {
        return Err(Error::LengthMismatch {
            what: "relative_errors",
            left: track_a.len(),
            right: track_b.len(),
        });
    }
    if track_a.len() < 2 {
        return Err(Error::TooFew {
            what: "relative_errors",
            needed: 2,
            got: track_a.len(),
        });
    }
    Ok(track_a
        .windows(2)
        .zip(track_b.windows(2))
        .map(|(a, b)| {
            let ua = odometry(&a[0], &a[1]);
            let ub = odometry(&b[0], &b[1]);
            RelativeError {
                rpe: (ua.dist - ub.dist).abs(),
                roe: (ua.angle - ub.angle).abs(),
            }
        })
        .collect())
}

/// Fraction of `errors` that are `<= d`.
pub fn empirical_cdf(errors: &[f64], d: f64) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::Empty("empirical_cdf"));
    }
    let hits = errors.iter().filter(|e| **e <= d).count();
    Ok(hits as f64 / errors.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrecisionBuckets {
    pub high: f64,
    pub medium: f64,
    pub low: f64,
}

pub fn precision_buckets(records: &[ErrorRecord]) -> Result<PrecisionBuckets> {
    if records.is_empty() {
        return Err(Error::Empty("precision_buckets"));
    }
    let n = records.len() as f64;
    let frac =
        |level: &PrecisionLevel| records.iter().filter(|r| level.contains(r)).count() as f64 / n;
    Ok(PrecisionBuckets {
        high: frac(&HIGH_PRECISION),
        medium: frac(&MEDIUM_PRECISION),
        low: frac(&LOW_PRECISION),
    })
}

/// Median; even lengths average the two central order statistics.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("median"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Ok(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    })
}

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("mean"));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Position CDF thresholds: 0 to 5 m in 5 cm steps.
pub fn position_cdf_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 20.0).collect()
}

/// Orientation CDF thresholds: 0 to 20° in 0.2° steps.
pub fn orientation_cdf_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 5.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfPoint {
    pub threshold: f64,
    pub fraction: f64,
}

pub fn cdf_samples(errors: &[f64], thresholds: &[f64]) -> Result<Vec<CdfPoint>> {
    thresholds
        .iter()
        .map(|&threshold| {
            Ok(CdfPoint {
                threshold,
                fraction: empirical_cdf(errors, threshold)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryReport {
    pub count: usize,
    pub median_pos: f64,
    pub median_ori: f64,
    pub mean_pos: f64,
    pub mean_ori: f64,
    pub buckets: PrecisionBuckets,
    pub pos_cdf: Vec<CdfPoint>,
    pub ori_cdf: Vec<CdfPoint>,
}

pub fn summarize(records: &[ErrorRecord]) -> Result<SummaryReport> {
    if records.is_empty() {
        return Err(Error::Empty("summarize"));
    }
    let pos: Vec<f64> = records.iter().map(|r| r.pos_err).collect();
    let ori: Vec<f64> = records.iter().map(|r| r.ori_err).collect();
    Ok(SummaryReport {
        count: records.len(),
        median_pos: median(&pos)?,
        median_ori: median(&ori)?,
        mean_pos: mean(&pos)?,
        mean_ori: mean(&ori)?,
        buckets: precision_buckets(records)?,
        pos_cdf: cdf_samples(&pos, &position_cdf_grid())?,
        ori_cdf: cdf_samples(&ori, &orientation_cdf_grid())?,
    })
}

fn to_na(v: Vec3) -> Vector3<f64> {
    Vector3::new(v.x, v.y, v.z)
}

/// Least-squares rotation and translation (no scale) taking `source` onto
/// `target`: minimizes `Σ |R·sᵢ + t − tᵢ|²`.
pub fn kabsch_align(source: &[Vec3], target: &[Vec3]) -> Result<RigidTransform> {
    if source.len() != target.len() {
        return Err(Error::LengthMismatch {
            what: "kabsch_align",
            left: source.len(),
            right: target.len(),
        });
    }
    if source.len() < 3 {
        return Err(Error::TooFew {
            what: "kabsch_align",
            needed: 3,
            got: source.len(),
        });
    }
    if source.iter().chain(target).any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("kabsch_align"));
    }

    let n = source.len() as f64;
    let src_c = source.iter().fold(Vector3::zeros(), |a, p| a + to_na(*p)) / n;
    let dst_c = target.iter().fold(Vector3::zeros(), |a, p| a + to_na(*p)) / n;

    let mut cov = Matrix3::<f64>::zeros();
    for (s, t) in source.iter().zip(target) {
        cov += (to_na(*s) - src_c) * (to_na(*t) - dst_c).transpose();
    }

    let svd = cov.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::RankDeficient { rank: 0 }),
    };
    let sv = svd.singular_values;
    let largest = sv.max();
    let scale = source
        .iter()
        .chain(target)
        .map(|p| p.norm())
        .fold(1.0f64, f64::max);
    let eps = 1e-12 * scale * scale * n;
    let rank = sv
        .iter()
        .filter(|s| **s > eps && **s > 1e-12 * largest)
        .count();
    if rank < 2 {
        return Err(Error::RankDeficient { rank });
    }

    let v = v_t.transpose();
    let mut d = Matrix3::<f64>::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(sv.imin(), sv.imin())] = -1.0;
    }
    let r = v * d * u.transpose();
    let t = dst_c - r * src_c;

    let rows = [
        [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
        [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
        [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
    ];
    Ok(RigidTransform {
        rotation: UnitQuaternion::from_rotation_matrix(&RotationMatrix(rows)),
        translation: Vec3::new(t.x, t.y, t.z),
    })
}

/// Sum of squared residuals of `transform` mapping `source` onto `target`.
pub fn alignment_residual(transform: &RigidTransform, source: &[Vec3], target: &[Vec3]) -> f64 {
    source
        .iter()
        .zip(target)
        .map(|(s, t)| (transform.apply_point(*s) - *t).norm_squared())
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub transform: RigidTransform,
    pub aligned: Vec<Pose>,
    pub records: Vec<ErrorRecord>,
    pub summary: SummaryReport,
}

/// Fits a rigid transform on the frames with `timestamp < window_seconds`,
/// applies it to the whole estimated track and scores it against `gt_track`.
/// Record `i` gets `frame_index = i`.
pub fn align_and_evaluate(
    est_track: &[Pose],
    gt_track: &[Pose],
    window_seconds: f64,
    timestamps: &[f64],
) -> Result<Evaluation> {
    if est_track.len() != gt_track.len() {
        return Err(Error::LengthMismatch {
            what: "align_and_evaluate",
            left: est_track.len(),
            right: gt_track.len(),
        });
    }
    if timestamps.len() != est_track.len() {
        return Err(Error::LengthMismatch {
            what: "align_and_evaluate timestamps",
            left: timestamps.len(),
            right: est_track.len(),
        });
    }
    if let Some(i) = timestamps.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::OutOfOrder {
            frame: i as u64 + 1,
            previous: timestamps[i],
            timestamp: timestamps[i + 1],
        });
    }

    let in_window = timestamps
        .iter()
        .take_while(|t| **t < window_seconds)
        .count();
    if in_window < 3 {
        return Err(Error::TooFew {
            what: "alignment window",
            needed: 3,
            got: in_window,
        });
    }
    let src: Vec<Vec3> = est_track[..in_window].iter().map(|p| p.position).collect();
    let dst: Vec<Vec3> = gt_track[..in_window].iter().map(|p| p.position).collect();
    let transform = kabsch_align(&src, &dst)?;

    let aligned: Vec<Pose> = est_track.iter().map(|p| transform.apply_pose(p)).collect();
    let records: Vec<ErrorRecord> = aligned
        .iter()
        .zip(gt_track)
        .enumerate()
        .map(|(i, (est, gt))| ErrorRecord::between(i as u64, est, gt))
        .collect();
    let summary = summarize(&records)?;
    Ok(Evaluation {
        transform,
        aligned,
        records,
        summary,
    })
}
