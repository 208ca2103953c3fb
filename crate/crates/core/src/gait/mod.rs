//! Gait metrics from motion-capture recordings.
//!
//! Marker layout per foreleg side (`L` or `R`): `1` claw, `2` tibia-tarsus
//! joint, `3` proximal tibia. Three body markers `B1..B3` span the body
//! reference plane.

pub mod report;
pub mod stats;
pub mod synth;

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use report::{comparison_report, reference_comparisons, ComparisonPair, ComparisonRow, ReferenceComparison};
pub use stats::{two_sample_ttest, GroupStats, TTest};
pub use synth::SyntheticGait;

/// Capture rate of the recordings (frames/s).
pub const DEFAULT_RATE_HZ: f64 = 100.0;

pub const MARKER_LABELS: [&str; 9] = ["L1", "L2", "L3", "R1", "R2", "R3", "B1", "B2", "B3"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn marker(self, k: u8) -> String {
        let prefix = match self {
            Side::Left => 'L',
            Side::Right => 'R',
        };
        format!("{prefix}{k}")
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" | "L" => Ok(Side::Left),
            "right" | "R" => Ok(Side::Right),
            other => Err(Error::domain(format!("unknown side `{other}`"))),
        }
    }
}

/// One capture frame; absent labels are gaps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MarkerFrame {
    pub t: f64,
    pub points: BTreeMap<String, Vector3<f64>>,
}

impl MarkerFrame {
    pub fn new(t: f64) -> Self {
        Self {
            t,
            points: BTreeMap::new(),
        }
    }

    pub fn with(mut self, label: &str, p: Vector3<f64>) -> Self {
        self.points.insert(label.to_string(), p);
        self
    }

    pub fn get(&self, label: &str) -> Result<Vector3<f64>> {
        self.points
            .get(label)
            .copied()
            .ok_or_else(|| Error::MissingMarker(label.to_string()))
    }
}

/// A uniformly sampled trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecording {
    frames: Vec<MarkerFrame>,
    rate: f64,
}

impl TrialRecording {
    pub fn new(frames: Vec<MarkerFrame>, rate: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::domain("capture rate must be positive"));
        }
        let step = 1000.0 / rate;
        for (i, w) in frames.windows(2).enumerate() {
            if ((w[1].t - w[0].t) - step).abs() > 1e-6 * step.max(1.0) {
                return Err(Error::domain(format!(
                    "frame {} breaks the uniform {step} ms timestep",
                    i + 1
                )));
            }
        }
        for f in &frames {
            if f.points.values().any(|p| !p.iter().all(|v| v.is_finite())) {
                return Err(Error::domain(format!("non-finite marker at t = {} ms", f.t)));
            }
        }
        Ok(Self { frames, rate })
    }

    pub fn frames(&self) -> &[MarkerFrame] {
        &self.frames
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn start_time(&self) -> f64 {
        self.frames.first().map(|f| f.t).unwrap_or(0.0)
    }
}

fn nonzero(v: Vector3<f64>, from: &str, to: &str) -> Result<Vector3<f64>> {
    if v.norm() < 1e-12 {
        return Err(Error::DegenerateVector(from.to_string(), to.to_string()));
    }
    Ok(v)
}

/// Angle between the tibia (marker 3 to 2) and the tarsus (marker 2 to 1), degrees.
pub fn claw_tibia_angle(frame: &MarkerFrame, side: Side) -> Result<f64> {
    let (l1, l2, l3) = (side.marker(1), side.marker(2), side.marker(3));
    let (m1, m2, m3) = (frame.get(&l1)?, frame.get(&l2)?, frame.get(&l3)?);
    let tibia = nonzero(m2 - m3, &l3, &l2)?;
    let tarsus = nonzero(m1 - m2, &l2, &l1)?;
    Ok(tibia.cross(&tarsus).norm().atan2(tibia.dot(&tarsus)).to_degrees())
}

/// Plane through a point with unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub point: Vector3<f64>,
    pub normal: Vector3<f64>,
}

impl Plane {
    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(&(p - self.point))
    }
}

/// Body reference plane through `B1, B2, B3`.
///
/// The normal is `(B2 - B1) x (B3 - B1)`, flipped if needed so the centroid of
/// the leg markers present in the frame lies on the positive side.
pub fn reference_plane(frame: &MarkerFrame) -> Result<Plane> {
    let (b1, b2, b3) = (frame.get("B1")?, frame.get("B2")?, frame.get("B3")?);
    let (e1, e2) = (b2 - b1, b3 - b1);
    let n = e1.cross(&e2);
    if n.norm() <= 1e-9 * e1.norm() * e2.norm() || n.norm() == 0.0 {
        return Err(Error::CollinearMarkers);
    }
    let mut normal = n.normalize();
    let legs: Vec<Vector3<f64>> = MARKER_LABELS[..6]
        .iter()
        .filter_map(|l| frame.points.get(*l).copied())
        .collect();
    if !legs.is_empty() {
        let centroid = legs.iter().sum::<Vector3<f64>>() / legs.len() as f64;
        if normal.dot(&(centroid - b1)) < 0.0 {
            normal = -normal;
        }
    }
    Ok(Plane { point: b1, normal })
}

/// Signed claw distance to the body plane, one entry per frame; `None` marks a gap.
pub fn claw_displacement(recording: &TrialRecording, side: Side) -> Vec<Option<f64>> {
    let claw = side.marker(1);
    recording
        .frames
        .iter()
        .map(|f| {
            let plane = reference_plane(f).ok()?;
            let p = f.points.get(&claw)?;
            Some(plane.signed_distance(p))
        })
        .collect()
}

/// Claw-tibia angle per frame (degrees); `None` marks a gap.
pub fn claw_tibia_angles(recording: &TrialRecording, side: Side) -> Vec<Option<f64>> {
    recording
        .frames
        .iter()
        .map(|f| claw_tibia_angle(f, side).ok())
        .collect()
}

/// How the per-cycle bend amplitude is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeDefinition {
    /// Largest angle in the cycle minus the angle at touchdown.
    PeakMinusTouchdown,
    /// Largest minus smallest angle in the cycle.
    PeakToTrough,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleParams {
    /// Hysteresis band as a fraction of the signal range.
    pub hysteresis_fraction: f64,
    /// Minimum separation of two touchdowns (ms).
    pub debounce_ms: f64,
    pub amplitude: AmplitudeDefinition,
}

impl Default for CycleParams {
    fn default() -> Self {
        Self {
            hysteresis_fraction: 0.1,
            debounce_ms: 50.0,
            amplitude: AmplitudeDefinition::PeakMinusTouchdown,
        }
    }
}

/// One step cycle; times in ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepCycle {
    pub touchdown_t: f64,
    pub liftoff_t: f64,
    pub next_touchdown_t: f64,
    pub cycle_time: f64,
    /// Degrees.
    pub bend_amplitude: f64,
    /// The cycle window contains missing samples.
    pub gap: bool,
}

struct Touchdown {
    index: usize,
    t: f64,
    value: f64,
    liftoff_index: usize,
}

/// Splits a claw-height series into step cycles.
///
/// Touchdowns are local minima of `height` inside excursions below
/// `min + band`, where `band = hysteresis_fraction * range`. Consecutive
/// touchdowns must be separated by a rise above `max - band` and by at least
/// `debounce_ms`. Touchdown times are refined by a parabola through the
/// minimum and its neighbours. `angle` (degrees) supplies the bend amplitude;
/// times are relative to the first sample.
pub fn segment_cycles(
    height: &[Option<f64>],
    angle: &[Option<f64>],
    rate_hz: f64,
    params: &CycleParams,
) -> Result<Vec<StepCycle>> {
    if height.len() != angle.len() {
        return Err(Error::DimensionMismatch {
            expected: height.len(),
            got: angle.len(),
        });
    }
    if !(rate_hz > 0.0) {
        return Err(Error::domain("sample rate must be positive"));
    }
    let dt = 1000.0 / rate_hz;
    let (lo, hi) = height
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return Err(Error::NoCyclesFound);
    }
    let band = params.hysteresis_fraction * (hi - lo);
    let (low, high) = (lo + band, hi - band);

    let mut touchdowns: Vec<Touchdown> = Vec::new();
    let mut armed = false;
    let mut run: Option<(usize, usize)> = None; // (start, argmin)
    let last = height.len() - 1;
    let close_run = |run: (usize, usize), end: usize, touchdowns: &mut Vec<Touchdown>| {
        let (start, k) = run;
        // a minimum on the series boundary is not a local minimum
        if start == 0 || k == 0 || k == last {
            return;
        }
        let y = |i: usize| height[i];
        let mut offset = 0.0;
        if let (Some(a), Some(b), Some(c)) = (y(k - 1), y(k), y(k + 1)) {
            let denom = a - 2.0 * b + c;
            if denom > 0.0 {
                offset = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
            }
        }
        let td = Touchdown {
            index: k,
            t: (k as f64 + offset) * dt,
            value: y(k).unwrap_or(f64::NAN),
            liftoff_index: end,
        };
        if let Some(prev) = touchdowns.last_mut() {
            if td.t - prev.t < params.debounce_ms {
                if td.value < prev.value {
                    *prev = td;
                }
                return;
            }
        }
        touchdowns.push(td);
    };

    for (i, v) in height.iter().enumerate() {
        let Some(v) = *v else { continue };
        if v > high {
            armed = true;
        }
        match run {
            Some((start, k)) => {
                if v >= low {
                    close_run((start, k), i, &mut touchdowns);
                    run = None;
                    armed = v > high;
                } else if v < height[k].unwrap_or(f64::INFINITY) {
                    run = Some((start, i));
                }
            }
            None => {
                if v < low && (armed || touchdowns.is_empty()) {
                    run = Some((i, i));
                }
            }
        }
    }

    let mut cycles = Vec::new();
    for w in touchdowns.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let window = a.index..b.index;
        let gap = window.clone().any(|i| height[i].is_none() || angle[i].is_none());
        let values: Vec<f64> = window.clone().filter_map(|i| angle[i]).collect();
        let peak = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let bend_amplitude = match params.amplitude {
            AmplitudeDefinition::PeakMinusTouchdown => peak - angle[a.index].unwrap_or(f64::NAN),
            AmplitudeDefinition::PeakToTrough => {
                peak - values.iter().copied().fold(f64::INFINITY, f64::min)
            }
        };
        cycles.push(StepCycle {
            touchdown_t: a.t,
            liftoff_t: a.liftoff_index as f64 * dt,
            next_touchdown_t: b.t,
            cycle_time: b.t - a.t,
            bend_amplitude,
            gap: gap || !bend_amplitude.is_finite(),
        });
    }
    if cycles.is_empty() {
        return Err(Error::NoCyclesFound);
    }
    Ok(cycles)
}

/// Per-trial gait summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub condition: String,
    pub beetle: String,
    pub cycles: Vec<StepCycle>,
    /// Cycles without gaps.
    pub complete_cycles: usize,
    pub mean_cycle_time: f64,
    pub mean_amplitude: f64,
}

/// Cycle segmentation of one trial, with bend amplitudes from the claw-tibia
/// angle. Cycle times are absolute.
///
/// The legs hang on the positive side of the body plane, so the claw height
/// used for touchdown detection is `-D`: a claw pressed down to the substrate
/// is furthest from the body.
pub fn analyze_trial(
    recording: &TrialRecording,
    side: Side,
    condition: &str,
    beetle: &str,
    params: &CycleParams,
) -> Result<TrialMetrics> {
    let height: Vec<Option<f64>> = claw_displacement(recording, side)
        .into_iter()
        .map(|d| d.map(|d| -d))
        .collect();
    let angle = claw_tibia_angles(recording, side);
    if height.len() < 3 {
        return Err(Error::NoCyclesFound);
    }
    let t0 = recording.start_time();
    let mut cycles = segment_cycles(&height, &angle, recording.rate, params)?;
    for c in &mut cycles {
        c.touchdown_t += t0;
        c.liftoff_t += t0;
        c.next_touchdown_t += t0;
    }
    let complete: Vec<&StepCycle> = cycles.iter().filter(|c| !c.gap).collect();
    let mean = |f: fn(&StepCycle) -> f64| {
        if complete.is_empty() {
            f64::NAN
        } else {
            complete.iter().map(|c| f(c)).sum::<f64>() / complete.len() as f64
        }
    };
    Ok(TrialMetrics {
        condition: condition.to_string(),
        beetle: beetle.to_string(),
        complete_cycles: complete.len(),
        mean_cycle_time: mean(|c| c.cycle_time),
        mean_amplitude: mean(|c| c.bend_amplitude),
        cycles,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Average trials per beetle first; n is the beetle count.
    Beetle,
    /// Every trial is one observation.
    Trial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    CycleTime,
    BendAmplitude,
}

/// Group statistics of one metric for one condition.
pub fn aggregate(
    trials: &[TrialMetrics],
    condition: &str,
    metric: Metric,
    mode: Aggregation,
) -> Result<GroupStats> {
    let value = |t: &TrialMetrics| match metric {
        Metric::CycleTime => t.mean_cycle_time,
        Metric::BendAmplitude => t.mean_amplitude,
    };
    let selected = trials
        .iter()
        .filter(|t| t.condition == condition && value(t).is_finite());
    let values: Vec<f64> = match mode {
        Aggregation::Trial => selected.map(value).collect(),
        Aggregation::Beetle => {
            let mut per: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            for t in selected {
                per.entry(t.beetle.as_str()).or_default().push(value(t));
            }
            per.values()
                .map(|v| v.iter().sum::<f64>() / v.len() as f64)
                .collect()
        }
    };
    GroupStats::from_samples(&values)
}
