//! Synthetic marker recordings with a known step period and bend amplitude.

use std::f64::consts::PI;

use nalgebra::Vector3;

use super::{MarkerFrame, TrialRecording};
use crate::error::{Error, Result};

/// A foreleg stepping below a flat body.
///
/// The claw height follows `lift * (1 - cos(2 pi phase)) / 2`, lowest at each
/// touchdown. The claw-tibia angle is `base` around touchdown and
/// `base + amplitude` mid-cycle, with linear ramps between; both flat stretches
/// are long enough to contain whole frames, so the amplitude measured from
/// samples is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticGait {
    pub period_ms: f64,
    pub duration_ms: f64,
    pub rate_hz: f64,
    pub lift_mm: f64,
    pub base_angle_deg: f64,
    pub bend_amplitude_deg: f64,
    pub first_touchdown_ms: f64,
}

impl Default for SyntheticGait {
    fn default() -> Self {
        Self {
            period_ms: 446.1,
            duration_ms: 5000.0,
            rate_hz: 100.0,
            lift_mm: 10.0,
            base_angle_deg: 20.0,
            bend_amplitude_deg: 55.7,
            first_touchdown_ms: 123.4,
        }
    }
}

impl SyntheticGait {
    pub fn with_period(period_ms: f64) -> Self {
        Self {
            period_ms,
            ..Self::default()
        }
    }

    fn phase(&self, t: f64) -> f64 {
        ((t - self.first_touchdown_ms) / self.period_ms).rem_euclid(1.0)
    }

    /// Claw height above its lowest point (mm).
    pub fn height(&self, t: f64) -> f64 {
        self.lift_mm * 0.5 * (1.0 - (2.0 * PI * self.phase(t)).cos())
    }

    /// Claw-tibia angle (degrees).
    pub fn angle(&self, t: f64) -> f64 {
        let p = self.phase(t);
        let w = if !(0.1..0.9).contains(&p) {
            0.0
        } else if p < 0.3 {
            (p - 0.1) / 0.2
        } else if p < 0.6 {
            1.0
        } else {
            (0.9 - p) / 0.3
        };
        self.base_angle_deg + self.bend_amplitude_deg * w
    }

    pub fn touchdown_times(&self) -> Vec<f64> {
        (0..)
            .map(|k| self.first_touchdown_ms + k as f64 * self.period_ms)
            .take_while(|t| *t < self.duration_ms)
            .collect()
    }

    /// Marker frames for both forelegs and the body, from `t = 0`.
    pub fn recording(&self) -> Result<TrialRecording> {
        if !(self.period_ms > 0.0 && self.rate_hz > 0.0 && self.duration_ms >= 0.0) {
            return Err(Error::domain("synthetic gait needs positive period and rate"));
        }
        if self.base_angle_deg + self.bend_amplitude_deg >= 90.0 || self.base_angle_deg < 0.0 {
            return Err(Error::domain("synthetic bend must stay within [0, 90) degrees"));
        }
        let step = 1000.0 / self.rate_hz;
        let n = (self.duration_ms / step).floor() as usize + 1;
        let frames = (0..n)
            .map(|k| {
                let t = k as f64 * step;
                let (h, a) = (self.height(t), self.angle(t).to_radians());
                let mut f = MarkerFrame::new(t)
                    .with("B1", Vector3::new(0.0, 0.0, 0.0))
                    .with("B2", Vector3::new(20.0, 0.0, 0.0))
                    .with("B3", Vector3::new(0.0, 10.0, 0.0));
                for (prefix, y) in [("L", 8.0), ("R", -8.0)] {
                    let m3 = Vector3::new(10.0, y, -5.0 + h);
                    let m2 = Vector3::new(10.0, y, -15.0 + h);
                    let m1 = m2 + 6.0 * Vector3::new(a.sin(), 0.0, -a.cos());
                    f = f
                        .with(&format!("{prefix}1"), m1)
                        .with(&format!("{prefix}2"), m2)
                        .with(&format!("{prefix}3"), m3);
                }
                f
            })
            .collect();
        TrialRecording::new(frames, self.rate_hz)
    }
}
