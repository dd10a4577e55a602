//! Seeded synthetic sequences: a walking ground-truth trajectory plus a
//! drifting VIO stream and a noisy, outlier-prone APR stream.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`. The three streams of one sequence share the seed and
//! are separated with `set_stream`: 0 for ground truth, 1 for VIO, 2 for APR.
//! Output is therefore identical across runs and platforms for a given seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, UnitQuaternion, Vec3};
use crate::sequence::PoseSample;

const GT_STREAM: u64 = 0;
const VIO_STREAM: u64 = 1;
const APR_STREAM: u64 = 2;

/// Turn rates are clamped to this many standard deviations.
const TURN_RATE_CLAMP_SIGMAS: f64 = 3.0;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_vec<R: Rng>(rng: &mut R, sigma: f64) -> Vec3 {
    let mut draw = || {
        let z: f64 = StandardNormal.sample(rng);
        sigma * z
    };
    Vec3::new(draw(), draw(), draw())
}

fn unit_vec<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = gaussian_vec(rng, 1.0);
        let n = v.norm();
        if n > 1e-9 {
            return v * (1.0 / n);
        }
    }
}

/// Uniform sample from the ball of radius `radius`.
fn in_ball<R: Rng>(rng: &mut R, radius: f64) -> Vec3 {
    let dir = unit_vec(rng);
    let u: f64 = rng.random();
    dir * (radius * u.cbrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryConfig {
    pub n_frames: usize,
    pub frame_rate_hz: f64,
    /// m/s
    pub speed_mean: f64,
    /// m/s
    pub speed_std: f64,
    /// deg/s
    pub turn_rate_std: f64,
    pub seed: u64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            n_frames: 200,
            frame_rate_hz: 1.0,
            speed_mean: 1.2,
            speed_std: 0.3,
            turn_rate_std: 15.0,
            seed: 0,
        }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_frames < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_frames must be >= 2, got {}",
                self.n_frames
            )));
        }
        if !(self.frame_rate_hz.is_finite() && self.frame_rate_hz > 0.0) {
            return Err(Error::InvalidConfig("frame_rate_hz must be > 0".into()));
        }
        if !(self.speed_mean.is_finite() && self.speed_mean > 0.0) {
            return Err(Error::InvalidConfig("speed_mean must be > 0".into()));
        }
        if !(self.speed_std >= 0.0 && self.turn_rate_std >= 0.0) {
            return Err(Error::InvalidConfig(
                "standard deviations must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Per-step VIO error model. The VIO frame drifts as a whole: each step
/// perturbs the VIO-from-world rotation (about the current camera) and adds a
/// translation error, and neither is ever reset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VioNoiseModel {
    /// Per-axis translation noise, meters per step.
    pub step_pos_sigma: f64,
    /// Per-axis rotation noise, degrees per step.
    pub step_rot_sigma: f64,
    /// Constant translation bias, meters per step, direction drawn per sequence.
    pub drift_bias_pos: f64,
    /// Constant rotation bias, degrees per step, axis drawn per sequence.
    pub drift_bias_rot: f64,
}

impl Default for VioNoiseModel {
    fn default() -> Self {
        Self {
            step_pos_sigma: 0.02,
            step_rot_sigma: 0.01,
            drift_bias_pos: 0.01,
            drift_bias_rot: 0.001,
        }
    }
}

impl VioNoiseModel {
    pub fn noiseless() -> Self {
        Self {
            step_pos_sigma: 0.0,
            step_rot_sigma: 0.0,
            drift_bias_pos: 0.0,
            drift_bias_rot: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AprNoiseModel {
    /// Per-axis position noise of inliers, meters.
    pub inlier_pos_sigma: f64,
    /// Inlier rotation noise: a random-axis rotation whose angle is Gaussian
    /// with this standard deviation, degrees.
    pub inlier_rot_sigma: f64,
    pub outlier_prob: f64,
    /// Outlier offsets are uniform in a ball of this radius, meters.
    pub outlier_pos_range: f64,
    /// Outlier rotation vectors are uniform in a ball of this radius, degrees.
    pub outlier_rot_range: f64,
}

impl Default for AprNoiseModel {
    fn default() -> Self {
        Self {
            inlier_pos_sigma: 0.5,
            inlier_rot_sigma: 2.5,
            outlier_prob: 0.15,
            outlier_pos_range: 5.0,
            outlier_rot_range: 20.0,
        }
    }
}

impl AprNoiseModel {
    pub fn noiseless() -> Self {
        Self {
            inlier_pos_sigma: 0.0,
            inlier_rot_sigma: 0.0,
            outlier_prob: 0.0,
            outlier_pos_range: 0.0,
            outlier_rot_range: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.outlier_prob) {
            return Err(Error::InvalidConfig(format!(
                "outlier_prob must be in [0, 1], got {}",
                self.outlier_prob
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StampedPose {
    pub frame_index: u64,
    pub timestamp: f64,
    pub pose: Pose,
}

/// Planar walk: speeds and turn rates are drawn per step; the camera faces
/// the walking direction.
pub fn generate_gt(cfg: &TrajectoryConfig) -> Result<Vec<StampedPose>> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, GT_STREAM);
    let dt = 1.0 / cfg.frame_rate_hz;
    let speed = Normal::new(cfg.speed_mean, cfg.speed_std)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let max_turn = TURN_RATE_CLAMP_SIGMAS * cfg.turn_rate_std;

    let mut heading: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    let mut position = Vec3::ZERO;
    let up = Vec3::new(0.0, 0.0, 1.0);
    let mut out = Vec::with_capacity(cfg.n_frames);
    for i in 0..cfg.n_frames {
        if i > 0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            let turn_rate = (cfg.turn_rate_std * z).clamp(-max_turn, max_turn);
            heading += turn_rate.to_radians() * dt;
            let v = speed.sample(&mut rng).max(0.0);
            position += Vec3::new(heading.cos(), heading.sin(), 0.0) * (v * dt);
        }
        // World-to-camera is the inverse of the heading rotation.
        let camera_to_world = UnitQuaternion::from_axis_angle(up, heading)?;
        out.push(StampedPose {
            frame_index: i as u64,
            timestamp: i as f64 * dt,
            pose: Pose::new(position, camera_to_world.inverse()),
        });
    }
    Ok(out)
}

pub fn simulate_vio(gt: &[Pose], model: &VioNoiseModel, seed: u64) -> Vec<Pose> {
    let Some(first) = gt.first() else {
        return Vec::new();
    };
    let mut rng = rng_for(seed, VIO_STREAM);
    let bias_pos = unit_vec(&mut rng) * model.drift_bias_pos;
    let bias_rot = UnitQuaternion::from_rotation_vector(
        unit_vec(&mut rng) * model.drift_bias_rot.to_radians(),
    );
    let rot_sigma = model.step_rot_sigma.to_radians();

    // Rotation taking world directions to VIO-frame directions.
    let mut drift = UnitQuaternion::IDENTITY;
    // Accumulated VIO-minus-GT position error.
    let mut error = Vec3::ZERO;
    let mut out = Vec::with_capacity(gt.len());
    out.push(*first);
    for pair in gt.windows(2) {
        let noise_rot = UnitQuaternion::from_rotation_vector(gaussian_vec(&mut rng, rot_sigma));
        drift = bias_rot.compose(&noise_rot).compose(&drift);
        let step = pair[1].position - pair[0].position;
        error +=
            (drift.rotate(step) - step) + bias_pos + gaussian_vec(&mut rng, model.step_pos_sigma);
        let orientation = pair[1].orientation.compose(&drift.inverse());
        out.push(Pose::new(pair[1].position + error, orientation));
    }
    out
}

pub fn simulate_apr(gt: &[Pose], model: &AprNoiseModel, seed: u64) -> Vec<Pose> {
    let mut rng = rng_for(seed, APR_STREAM);
    gt.iter()
        .map(|p| {
            let outlier = rng.random::<f64>() < model.outlier_prob;
            let (offset, rotvec) = if outlier {
                (
                    in_ball(&mut rng, model.outlier_pos_range),
                    in_ball(&mut rng, model.outlier_rot_range.to_radians()),
                )
            } else {
                let axis = unit_vec(&mut rng);
                let angle: f64 = StandardNormal.sample(&mut rng);
                (
                    gaussian_vec(&mut rng, model.inlier_pos_sigma),
                    axis * (angle * model.inlier_rot_sigma.to_radians()),
                )
            };
            Pose::new(
                p.position + offset,
                p.orientation
                    .compose(&UnitQuaternion::from_rotation_vector(rotvec)),
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub trajectory: TrajectoryConfig,
    pub vio: VioNoiseModel,
    pub apr: AprNoiseModel,
}

/// Full sequence with GT, VIO and APR poses, all driven by
/// `cfg.trajectory.seed`.
pub fn generate_sequence(cfg: &SynthConfig) -> Result<Vec<PoseSample>> {
    cfg.apr.validate()?;
    let gt = generate_gt(&cfg.trajectory)?;
    let gt_poses: Vec<Pose> = gt.iter().map(|s| s.pose).collect();
    let vio = simulate_vio(&gt_poses, &cfg.vio, cfg.trajectory.seed);
    let apr = simulate_apr(&gt_poses, &cfg.apr, cfg.trajectory.seed);
    Ok(gt
        .iter()
        .zip(vio)
        .zip(apr)
        .map(|((g, v), a)| PoseSample {
            frame_index: g.frame_index,
            timestamp: g.timestamp,
            gt: Some(g.pose),
            vio: v,
            apr: Some(a),
        })
        .collect())
}
