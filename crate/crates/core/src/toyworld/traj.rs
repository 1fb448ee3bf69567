//! Synthetic "video" domain: noisy circular arcs with analytic quality scores.
//!
//! A trajectory is T frames of 2-D points tracing an arc on the unit circle
//! that ends at its class target angle `2 pi c / K`. Three independent
//! quality knobs degrade it:
//!
//! - `radial_noise`: a smooth radial bump profile (cyclically shifted and
//!   optionally reflected per sample) scaled so the visual-quality score is
//!   exactly `-radial_noise^2`;
//! - `jitter`: a tangential wobble at a fixed high frequency, amplitude
//!   calibrated so the motion-quality score is approximately `-jitter^2`;
//! - `angle_error`: a signed offset of the final angle from the class
//!   target, making the alignment score exactly `-angle_error^2` (wrapped).
//!
//! Knobs are drawn from a tiered distribution (a few discrete capability
//! levels with within-tier spread), mimicking a pool of generators of
//! varying quality.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quality dimensions, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dim {
    Vq,
    Mq,
    Ta,
}

pub const DIMS: [Dim; 3] = [Dim::Vq, Dim::Mq, Dim::Ta];

impl Dim {
    pub fn index(self) -> usize {
        match self {
            Dim::Vq => 0,
            Dim::Mq => 1,
            Dim::Ta => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dim::Vq => "vq",
            Dim::Mq => "mq",
            Dim::Ta => "ta",
        }
    }
}

/// Domain geometry and the tiered quality distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    /// Frames per trajectory (T).
    pub frames: usize,
    /// Condition classes (K); class c targets angle 2 pi c / K.
    pub n_classes: usize,
    /// Angular length of the ideal arc, in radians.
    pub arc_span: f64,
    /// Number of quality tiers per dimension.
    pub tiers: usize,
    /// Tier spacing and within-tier width of the (negated) score, per dim.
    pub vq_gap: f64,
    pub vq_width: f64,
    pub mq_gap: f64,
    pub mq_width: f64,
    pub ta_gap: f64,
    pub ta_width: f64,
    /// Tangential wobble frequency (cycles over the arc).
    pub wobble_freq: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            frames: 16,
            n_classes: 16,
            arc_span: 0.4,
            tiers: 5,
            vq_gap: 0.25,
            vq_width: 0.10,
            mq_gap: 0.25,
            mq_width: 0.10,
            ta_gap: 0.45,
            ta_width: 0.16,
            wobble_freq: 6,
        }
    }
}

impl ToyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frames < 3 {
            return Err(Error::Config(format!(
                "trajectories need at least 3 frames, got {}",
                self.frames
            )));
        }
        if self.n_classes == 0 || self.tiers == 0 {
            return Err(Error::Config("n_classes and tiers must be >= 1".into()));
        }
        Ok(())
    }

    pub fn sample_dim(&self) -> usize {
        self.frames * 2
    }

    pub fn target_angle(&self, class: usize) -> f64 {
        2.0 * std::f64::consts::PI * class as f64 / self.n_classes as f64
    }

    /// Radial bump profile with unit mean square over the frame grid.
    fn radial_profile(&self, index: usize) -> f64 {
        let t = self.frames as f64;
        let s = (2.0 * std::f64::consts::PI * index as f64 / t).sin();
        (1.0 + s) / 1.5f64.sqrt()
    }

    /// Wobble amplitude calibration: chosen so that on the canonical arc a
    /// unit jitter knob produces a mean squared second difference of one.
    pub fn wobble_scale(&self) -> f64 {
        let t = self.frames;
        let span = self.arc_span;
        let f = self.wobble_freq as f64;
        let mut disp = Vec::with_capacity(t);
        for j in 0..t {
            let q = j as f64 / (t - 1) as f64;
            let theta = span * q;
            let w = (2.0 * std::f64::consts::PI * f * q).sin();
            disp.push([-theta.sin() * w, theta.cos() * w]);
        }
        let mut acc = 0.0;
        for j in 1..t - 1 {
            for d in 0..2 {
                let s = disp[j + 1][d] - 2.0 * disp[j][d] + disp[j - 1][d];
                acc += s * s;
            }
        }
        (acc / (t - 2) as f64).sqrt().recip()
    }
}

/// Per-sample quality knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityKnobs {
    pub radial_noise: f64,
    pub jitter: f64,
    pub angle_error: f64,
}

impl QualityKnobs {
    pub fn perfect() -> Self {
        QualityKnobs {
            radial_noise: 0.0,
            jitter: 0.0,
            angle_error: 0.0,
        }
    }
}

/// The toy "video": T frames of 2-D coordinates plus the condition class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Flattened frame-major coordinates `[x0, y0, x1, y1, ...]`.
    pub frames: Vec<f64>,
    pub condition_class: usize,
}

impl Trajectory {
    pub fn n_frames(&self) -> usize {
        self.frames.len() / 2
    }

    pub fn point(&self, j: usize) -> [f64; 2] {
        [self.frames[2 * j], self.frames[2 * j + 1]]
    }
}

/// Analytic ground-truth rewards; each component is <= 0 and 0 only for a
/// perfect trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtReward {
    pub vq: f64,
    pub mq: f64,
    pub ta: f64,
}

impl GtReward {
    pub fn get(&self, dim: Dim) -> f64 {
        match dim {
            Dim::Vq => self.vq,
            Dim::Mq => self.mq,
            Dim::Ta => self.ta,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.vq, self.mq, self.ta]
    }
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    f64::atan2(a.sin(), a.cos())
}

/// Draws one trajectory: an arc ending at the class angle plus `angle_error`,
/// perturbed per the knobs. Deterministic for a given RNG stream.
pub fn sample_trajectory(
    cfg: &ToyConfig,
    class: usize,
    knobs: &QualityKnobs,
    rng: &mut impl Rng,
) -> Result<Trajectory> {
    cfg.validate()?;
    if class >= cfg.n_classes {
        return Err(Error::Input(format!(
            "class {class} out of range for {} classes",
            cfg.n_classes
        )));
    }
    if knobs.radial_noise < 0.0 || knobs.jitter < 0.0 {
        return Err(Error::Input("quality knobs must be non-negative".into()));
    }
    let t = cfg.frames;
    let phi_end = cfg.target_angle(class) + knobs.angle_error;
    let phi_start = phi_end - cfg.arc_span;
    let shift = rng.gen_range(0..t);
    let reflect = rng.gen_bool(0.5);
    let wobble_sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let wobble_amp = knobs.jitter * cfg.wobble_scale();
    let f = cfg.wobble_freq as f64;
    let mut frames = Vec::with_capacity(2 * t);
    for j in 0..t {
        let q = j as f64 / (t - 1) as f64;
        let theta = phi_start + cfg.arc_span * q;
        let mut idx = (j + shift) % t;
        if reflect {
            idx = t - 1 - idx;
        }
        let radius = 1.0 + knobs.radial_noise * cfg.radial_profile(idx);
        // tangential wobble vanishes at both endpoints (sin(2 pi f q) = 0)
        let w = wobble_sign * wobble_amp * (2.0 * std::f64::consts::PI * f * q).sin();
        let x = radius * theta.cos() - w * theta.sin();
        let y = radius * theta.sin() + w * theta.cos();
        frames.push(x);
        frames.push(y);
    }
    Ok(Trajectory {
        frames,
        condition_class: class,
    })
}

/// Closed-form quality scores of a trajectory.
///
/// vq and mq never read the condition class; ta compares the final-frame
/// angle against the class target, wrapped to (-pi, pi].
pub fn gt_rewards(cfg: &ToyConfig, traj: &Trajectory) -> GtReward {
    let t = traj.n_frames();
    let mut vq = 0.0;
    for j in 0..t {
        let [x, y] = traj.point(j);
        let r = (x * x + y * y).sqrt();
        vq += (r - 1.0) * (r - 1.0);
    }
    vq /= t as f64;

    let mut mq = 0.0;
    for j in 1..t - 1 {
        let [xp, yp] = traj.point(j - 1);
        let [xc, yc] = traj.point(j);
        let [xn, yn] = traj.point(j + 1);
        let dx = xn - 2.0 * xc + xp;
        let dy = yn - 2.0 * yc + yp;
        mq += dx * dx + dy * dy;
    }
    mq /= (t - 2) as f64;

    let [xl, yl] = traj.point(t - 1);
    let err = wrap_angle(f64::atan2(yl, xl) - cfg.target_angle(traj.condition_class));

    GtReward {
        vq: -vq,
        mq: -mq,
        ta: -err * err,
    }
}

/// Draws tiered quality knobs: per dimension an independent tier plus
/// within-tier spread; the angle error gets a random sign.
pub fn draw_knobs(cfg: &ToyConfig, rng: &mut impl Rng) -> QualityKnobs {
    let mut level = |gap: f64, width: f64| {
        let tier = rng.gen_range(0..cfg.tiers) as f64;
        gap * tier + width * rng.gen::<f64>()
    };
    let sv = level(cfg.vq_gap, cfg.vq_width);
    let sm = level(cfg.mq_gap, cfg.mq_width);
    let st = level(cfg.ta_gap, cfg.ta_width);
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    QualityKnobs {
        radial_noise: sv.sqrt(),
        jitter: sm.sqrt(),
        angle_error: sign * st.sqrt(),
    }
}
