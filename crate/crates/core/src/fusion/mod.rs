//! VIO-anchored correction of absolute pose regressor (APR) output.
//!
//! APR predictions are drift-free but noisy; VIO is smooth but drifts. The
//! pipeline alternates between two stages:
//!
//! * **alignment**: look for `n_pairs + 1` consecutive frames whose APR
//!   odometry agrees with VIO odometry; their averaged poses become the
//!   reference pair tying the VIO frame to the world frame;
//! * **optimization**: for the next `t_opt` frames, keep APR poses that agree
//!   with VIO relative to the reference, and replace the others with the VIO
//!   pose mapped through the reference pair.

mod averaging;
mod pipeline;

pub use averaging::{average_quaternions, weiszfeld_median};
pub use pipeline::{run_sequence, FrameInput, FusionOutput, FusionState, Label, Stage};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{odometry, Odometry, Pose, RigidTransform, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    /// Distance threshold on the odometry disagreement, meters.
    pub d_th: f64,
    /// Angle threshold on the odometry disagreement, degrees.
    pub o_th: f64,
    /// Consecutive passing frame pairs required to accept keyframes.
    pub n_pairs: usize,
    /// Frames processed in the optimization stage before re-aligning.
    pub t_opt: usize,
    pub weiszfeld_tol: f64,
    pub weiszfeld_max_iter: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            d_th: 0.4,
            o_th: 4.0,
            n_pairs: 2,
            t_opt: 8,
            weiszfeld_tol: 1e-9,
            weiszfeld_max_iter: 100,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.d_th) {
            return Err(Error::InvalidConfig(format!(
                "d_th must be > 0, got {}",
                self.d_th
            )));
        }
        if !positive(self.o_th) {
            return Err(Error::InvalidConfig(format!(
                "o_th must be > 0, got {}",
                self.o_th
            )));
        }
        if self.n_pairs == 0 {
            return Err(Error::InvalidConfig("n_pairs must be >= 1".into()));
        }
        if self.t_opt == 0 {
            return Err(Error::InvalidConfig("t_opt must be >= 1".into()));
        }
        if !positive(self.weiszfeld_tol) {
            return Err(Error::InvalidConfig("weiszfeld_tol must be > 0".into()));
        }
        if self.weiszfeld_max_iter == 0 {
            return Err(Error::InvalidConfig(
                "weiszfeld_max_iter must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// True when APR and VIO odometry agree within both thresholds (inclusive).
pub fn relative_pose_check(u_apr: &Odometry, u_vio: &Odometry, cfg: &FusionConfig) -> bool {
    (u_apr.dist - u_vio.dist).abs() <= cfg.d_th && (u_apr.angle - u_vio.angle).abs() <= cfg.o_th
}

/// Averaged keyframe poses in world (APR) and VIO coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferencePair {
    pub apr_ref: Pose,
    pub vio_ref: Pose,
}

impl ReferencePair {
    /// The VIO-to-world rigid motion implied by the pair.
    pub fn vio_to_world(&self) -> RigidTransform {
        let q_rel = self
            .apr_ref
            .orientation
            .inverse()
            .compose(&self.vio_ref.orientation);
        let r_rel = q_rel.to_rotation_matrix();
        RigidTransform {
            rotation: q_rel,
            translation: self.apr_ref.position - r_rel.transform(self.vio_ref.position),
        }
    }
}

fn average_pose(poses: &[Pose], cfg: &FusionConfig) -> Result<Pose> {
    let positions: Vec<Vec3> = poses.iter().map(|p| p.position).collect();
    let orientations: Vec<_> = poses.iter().map(|p| p.orientation).collect();
    Ok(Pose {
        position: weiszfeld_median(&positions, cfg.weiszfeld_tol, cfg.weiszfeld_max_iter)?,
        orientation: average_quaternions(&orientations)?,
    })
}

pub fn compute_reference(
    aprs: &[Pose],
    vios: &[Pose],
    cfg: &FusionConfig,
) -> Result<ReferencePair> {
    if aprs.len() != vios.len() {
        return Err(Error::LengthMismatch {
            what: "compute_reference",
            left: aprs.len(),
            right: vios.len(),
        });
    }
    Ok(ReferencePair {
        apr_ref: average_pose(aprs, cfg)?,
        vio_ref: average_pose(vios, cfg)?,
    })
}

/// Maps a VIO pose into world coordinates through the reference pair.
///
/// With world-to-camera orientations this is an exact change of frame, and
/// `optimize_pose(reference.vio_ref, reference) == reference.apr_ref`.
pub fn optimize_pose(p_vio: &Pose, reference: &ReferencePair) -> Pose {
    let q_rel = reference
        .apr_ref
        .orientation
        .inverse()
        .compose(&reference.vio_ref.orientation);
    let r_rel = q_rel.to_rotation_matrix();
    let t_rel = reference.apr_ref.position - r_rel.transform(reference.vio_ref.position);
    let x_opt = r_rel.transform(p_vio.position) + t_rel;
    let q_opt = p_vio.orientation.compose(&q_rel.inverse());
    Pose::new(x_opt, q_opt)
}

/// Odometry of a frame relative to the reference, in both coordinate systems.
pub fn reference_odometry(
    apr: &Pose,
    vio: &Pose,
    reference: &ReferencePair,
) -> (Odometry, Odometry) {
    (
        odometry(apr, &reference.apr_ref),
        odometry(vio, &reference.vio_ref),
    )
}
