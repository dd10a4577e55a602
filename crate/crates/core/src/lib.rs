//! Fusion of absolute pose regressor (APR) predictions with visual-inertial
//! odometry (VIO), plus a seeded sensor simulator and trajectory metrics.
//!
//! * [`geometry`]: poses, quaternions and scalar odometry.
//! * [`fusion`]: the alignment / optimization state machine.
//! * [`metrics`]: APE/AOE, RPE/ROE, CDFs, precision levels, rigid alignment.
//! * [`synth`]: calibrated synthetic GT / VIO / APR streams.
//! * [`sequence`]: the per-frame CSV format.

pub mod error;
pub mod fusion;
pub mod geometry;
pub mod metrics;
pub mod sequence;
pub mod synth;

pub use error::{Error, Result};
pub use fusion::{
    compute_reference, optimize_pose, relative_pose_check, run_sequence, FusionConfig,
    FusionOutput, FusionState, Label, ReferencePair,
};
pub use geometry::{
    odometry, Odometry, Pose, RigidTransform, RotationMatrix, UnitQuaternion, Vec3,
};
pub use sequence::PoseSample;
