use serde::Serialize;

use super::{
    compute_reference, optimize_pose, reference_odometry, relative_pose_check, FusionConfig,
    ReferencePair,
};
use crate::error::{Error, Result};
use crate::geometry::{odometry, Pose};
use crate::sequence::PoseSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stage {
    Aligning,
    Optimizing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    /// Raw APR pose of a frame in an accepted alignment window.
    Keyframe,
    /// Raw APR pose that agreed with VIO relative to the reference.
    Reliable,
    /// VIO pose mapped through the reference pair.
    Optimized,
    /// Provisional: VIO pose mapped through the previous reference.
    Tracked,
    /// Provisional: raw APR pose, no reference exists yet.
    Pending,
}

impl Label {
    pub const ALL: [Label; 5] = [
        Label::Keyframe,
        Label::Reliable,
        Label::Optimized,
        Label::Tracked,
        Label::Pending,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Keyframe => "keyframe",
            Label::Reliable => "reliable",
            Label::Optimized => "optimized",
            Label::Tracked => "tracked",
            Label::Pending => "pending",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FusionOutput {
    pub frame_index: u64,
    pub pose: Pose,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameInput {
    pub frame_index: u64,
    pub timestamp: f64,
    pub apr: Pose,
    pub vio: Pose,
}

#[derive(Debug, Clone, Copy)]
struct WindowEntry {
    frame_index: u64,
    apr: Pose,
    vio: Pose,
}

/// Streaming state for one sequence. Frames must arrive in timestamp order;
/// do not reuse a state across sequences.
#[derive(Debug, Clone)]
pub struct FusionState {
    cfg: FusionConfig,
    stage: Stage,
    window: Vec<WindowEntry>,
    reference: Option<ReferencePair>,
    opt_count: usize,
    frames_seen: u64,
    last_timestamp: Option<f64>,
}

impl FusionState {
    pub fn new(cfg: FusionConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            stage: Stage::Aligning,
            window: Vec::with_capacity(cfg.n_pairs + 1),
            reference: None,
            opt_count: 0,
            frames_seen: 0,
            last_timestamp: None,
        })
    }

    pub fn config(&self) -> &FusionConfig {
        &self.cfg
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn reference(&self) -> Option<&ReferencePair> {
        self.reference.as_ref()
    }

    pub fn opt_count(&self) -> usize {
        self.opt_count
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn frames_seen(&self) -> u64 {
        self.frames_seen
    }

    /// Feeds one frame. Returns the frame's output first; when the frame
    /// completes an alignment window, the keyframe outputs for the whole
    /// window follow and supersede earlier provisional labels.
    ///
    /// On error the state is left untouched.
    pub fn step(&mut self, frame: &FrameInput) -> Result<Vec<FusionOutput>> {
        if !frame.timestamp.is_finite() {
            return Err(Error::NonFinite("timestamp"));
        }
        if let Some(previous) = self.last_timestamp {
            if frame.timestamp <= previous {
                return Err(Error::OutOfOrder {
                    frame: frame.frame_index,
                    previous,
                    timestamp: frame.timestamp,
                });
            }
        }
        self.last_timestamp = Some(frame.timestamp);
        self.frames_seen += 1;

        match self.stage {
            Stage::Aligning => self.align(frame),
            Stage::Optimizing => Ok(vec![self.optimize(frame)]),
        }
    }

    fn align(&mut self, frame: &FrameInput) -> Result<Vec<FusionOutput>> {
        let provisional = match &self.reference {
            Some(reference) => FusionOutput {
                frame_index: frame.frame_index,
                pose: optimize_pose(&frame.vio, reference),
                label: Label::Tracked,
            },
            None => FusionOutput {
                frame_index: frame.frame_index,
                pose: frame.apr,
                label: Label::Pending,
            },
        };
        let mut outputs = vec![provisional];

        self.window.push(WindowEntry {
            frame_index: frame.frame_index,
            apr: frame.apr,
            vio: frame.vio,
        });
        if let [.., prev, last] = self.window.as_slice() {
            let u_apr = odometry(&prev.apr, &last.apr);
            let u_vio = odometry(&prev.vio, &last.vio);
            if !relative_pose_check(&u_apr, &u_vio, &self.cfg) {
                // Slide: the newest frame starts a fresh window.
                let keep = self.window.len() - 1;
                self.window.drain(..keep);
            }
        }

        if self.window.len() == self.cfg.n_pairs + 1 {
            let aprs: Vec<Pose> = self.window.iter().map(|e| e.apr).collect();
            let vios: Vec<Pose> = self.window.iter().map(|e| e.vio).collect();
            self.reference = Some(compute_reference(&aprs, &vios, &self.cfg)?);
            outputs.extend(self.window.drain(..).map(|e| FusionOutput {
                frame_index: e.frame_index,
                pose: e.apr,
                label: Label::Keyframe,
            }));
            self.stage = Stage::Optimizing;
            self.opt_count = 0;
        }
        Ok(outputs)
    }

    fn optimize(&mut self, frame: &FrameInput) -> FusionOutput {
        let reference = self
            .reference
            .expect("optimization stage always holds a reference");
        let (u_apr, u_vio) = reference_odometry(&frame.apr, &frame.vio, &reference);
        let output = if relative_pose_check(&u_apr, &u_vio, &self.cfg) {
            FusionOutput {
                frame_index: frame.frame_index,
                pose: frame.apr,
                label: Label::Reliable,
            }
        } else {
            FusionOutput {
                frame_index: frame.frame_index,
                pose: optimize_pose(&frame.vio, &reference),
                label: Label::Optimized,
            }
        };
        self.opt_count += 1;
        if self.opt_count == self.cfg.t_opt {
            self.stage = Stage::Aligning;
            self.window.clear();
            self.opt_count = 0;
        }
        output
    }
}

/// Runs the pipeline over a whole sequence and returns exactly one output per
/// sample, in input order, carrying each frame's final label.
pub fn run_sequence(samples: &[PoseSample], cfg: &FusionConfig) -> Result<Vec<FusionOutput>> {
    let mut state = FusionState::new(*cfg)?;
    let mut finals: Vec<Option<FusionOutput>> = vec![None; samples.len()];
    for (ordinal, sample) in samples.iter().enumerate() {
        let apr = sample.apr.ok_or(Error::MissingPose {
            frame: sample.frame_index,
            field: "apr",
        })?;
        let input = FrameInput {
            frame_index: ordinal as u64,
            timestamp: sample.timestamp,
            apr,
            vio: sample.vio,
        };
        for out in state.step(&input)? {
            let slot = out.frame_index as usize;
            finals[slot] = Some(FusionOutput {
                frame_index: samples[slot].frame_index,
                ..out
            });
        }
    }
    Ok(finals
        .into_iter()
        .map(|o| o.expect("every frame emits at least one output"))
        .collect())
}
