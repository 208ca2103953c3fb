//! Tendon-driven tarsal chain.
//!
//! Each tarsomere joint is a planar rotation about a joint centre. The string
//! runs from a fixed anchor on the proximal segment to a moving anchor on the
//! distal segment. Bending the joint by `alpha` moves the distal anchor along a
//! chord of length `l = sqrt(2 R^2 (1 - cos alpha))`, the chord makes an angle
//! `beta = alpha / 2 - atan(h2 / h1)` with the string, and the new string span
//! follows from the law of cosines. The pull needed for that bend is the
//! shortening `L = d1 - d2`.
//!
//! `d1` is measured anchor-to-anchor: it is the full rest span of the string
//! across the joint, not the distance from an anchor to the joint centre.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of tarsomeres in the chain.
pub const SEGMENT_COUNT: usize = 5;

/// Spring constant of the compression springs between tarsomeres (N/mm).
pub const DEFAULT_SPRING_CONSTANT: f64 = 0.54;

/// Full-bend string pull of the shipped geometry (mm).
pub const DEFAULT_FULL_BEND_PULL: f64 = 5.5;

/// Total bend of the shipped geometry at full actuation (degrees).
pub const DEFAULT_TOTAL_BEND_DEG: f64 = 65.8;

/// Maximum bend of the distal segment (degrees).
pub const DEFAULT_DISTAL_ALPHA_MAX_DEG: f64 = 23.5;

/// Measured per-segment axial compressions at full pull (mm), used as caps.
pub const MEASURED_COMPRESSIONS: [f64; SEGMENT_COUNT] = [1.07, 0.74, 1.9, 0.31, 0.68];

/// Measured total string travel at full pull (mm).
pub const MEASURED_FULL_PULL: f64 = 13.1;

/// Vertical force cap of the actuated tarsus (N).
pub const DEFAULT_VERTICAL_CAP: f64 = 2.46;

/// Per-tarsomere joint geometry. Lengths in mm, angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentGeometry {
    /// Joint rotation radius of the moving anchor.
    pub r: f64,
    /// Longitudinal anchor offset.
    pub h1: f64,
    /// Transverse anchor offset.
    pub h2: f64,
    /// Maximum bend angle.
    pub alpha_max: f64,
    /// Rest string span across the joint, anchor to anchor.
    pub d1: f64,
    /// Maximum axial compression of the joint.
    pub axial_cap: f64,
}

impl SegmentGeometry {
    pub fn new(r: f64, h1: f64, h2: f64, alpha_max: f64, d1: f64, axial_cap: f64) -> Result<Self> {
        let g = Self {
            r,
            h1,
            h2,
            alpha_max,
            d1,
            axial_cap,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.r, self.h1, self.h2, self.alpha_max, self.d1, self.axial_cap]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::domain("segment geometry must be finite"));
        }
        if self.r <= 0.0 || self.h1 <= 0.0 || self.d1 <= 0.0 {
            return Err(Error::domain("R, h1 and d1 must be positive"));
        }
        if self.h2 < 0.0 || self.axial_cap < 0.0 {
            return Err(Error::domain("h2 and axial_cap must be nonnegative"));
        }
        if !(self.alpha_max > 0.0 && self.alpha_max < PI / 2.0) {
            return Err(Error::domain("alpha_max must lie in (0, pi/2)"));
        }
        Ok(())
    }

    /// String pull at bend `alpha`.
    pub fn pull(&self, alpha: f64) -> Result<f64> {
        segment_pull(self, alpha)
    }
}

/// Chord swept by a point at radius `r` rotated by `alpha`.
pub fn chord_length(r: f64, alpha: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("rotation radius must be positive, got {r}")));
    }
    if !(0.0..PI).contains(&alpha) {
        return Err(Error::domain(format!("bend angle {alpha} outside [0, pi)")));
    }
    // 2R^2(1 - cos a) == (2R sin(a/2))^2; the half-angle form keeps precision near 0.
    Ok(2.0 * r * (alpha / 2.0).sin())
}

/// Angle between the chord and the string at the moving anchor.
pub fn pull_angle_beta(alpha: f64, h1: f64, h2: f64) -> Result<f64> {
    if !(h1 > 0.0) {
        return Err(Error::domain(format!("h1 must be positive, got {h1}")));
    }
    Ok(alpha / 2.0 - (h2 / h1).atan())
}

fn check_alpha(geom: &SegmentGeometry, alpha: f64) -> Result<()> {
    // a hair of slack so that s * alpha_max with s rounded to 1 is accepted
    if !(alpha >= 0.0 && alpha <= geom.alpha_max * (1.0 + 1e-12)) {
        return Err(Error::domain(format!(
            "bend angle {alpha} outside [0, {}]",
            geom.alpha_max
        )));
    }
    Ok(())
}

/// String span across the joint after bending by `alpha`.
pub fn segment_string_span(geom: &SegmentGeometry, alpha: f64) -> Result<f64> {
    check_alpha(geom, alpha)?;
    let l = chord_length(geom.r, alpha)?;
    let beta = pull_angle_beta(alpha, geom.h1, geom.h2)?;
    let d1 = geom.d1;
    let sq = d1 * d1 + l * l - 2.0 * d1 * l * beta.cos();
    Ok(sq.max(0.0).sqrt())
}

/// String pull `L = d1 - d2` needed to bend one joint by `alpha`.
pub fn segment_pull(geom: &SegmentGeometry, alpha: f64) -> Result<f64> {
    if alpha == 0.0 {
        check_alpha(geom, alpha)?;
        return Ok(0.0);
    }
    Ok(geom.d1 - segment_string_span(geom, alpha)?)
}

/// Tarsus state: tendon tensioned (stiff, bent, claws open) or relaxed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TarsusMode {
    Rigid,
    Flexible,
}

impl std::fmt::Display for TarsusMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TarsusMode::Rigid => f.write_str("rigid"),
            TarsusMode::Flexible => f.write_str("flexible"),
        }
    }
}

impl std::str::FromStr for TarsusMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rigid" => Ok(TarsusMode::Rigid),
            "flexible" => Ok(TarsusMode::Flexible),
            other => Err(Error::domain(format!("unknown tarsus mode `{other}`"))),
        }
    }
}

/// The full five-segment chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainGeometry {
    segments: Vec<SegmentGeometry>,
    /// Lumped spring constant acting on the total pull (N/mm).
    pub k_spring: f64,
    /// Tarsomere body lengths for pose reconstruction (mm).
    segment_lengths: Vec<f64>,
    /// Extra string travel absorbed by socket deformation once every joint is
    /// saturated and compressed (mm).
    socket_slack: Vec<f64>,
    /// Bisection tolerance on pull (mm).
    pub pull_tolerance: f64,
    pub max_iterations: usize,
}

impl ChainGeometry {
    pub fn new(
        segments: Vec<SegmentGeometry>,
        k_spring: f64,
        segment_lengths: Vec<f64>,
        socket_slack: Vec<f64>,
    ) -> Result<Self> {
        for (name, len) in [
            ("segments", segments.len()),
            ("segment_lengths", segment_lengths.len()),
            ("socket_slack", socket_slack.len()),
        ] {
            if len != SEGMENT_COUNT {
                return Err(Error::domain(format!(
                    "{name} must have exactly {SEGMENT_COUNT} entries, got {len}"
                )));
            }
        }
        for s in &segments {
            s.validate()?;
        }
        if !(k_spring > 0.0) {
            return Err(Error::domain("k_spring must be positive"));
        }
        if segment_lengths.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::domain("segment lengths must be positive"));
        }
        if socket_slack.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::domain("socket slack must be nonnegative"));
        }
        Ok(Self {
            segments,
            k_spring,
            segment_lengths,
            socket_slack,
            pull_tolerance: 1e-9,
            max_iterations: 200,
        })
    }

    /// Default joint layout before calibration: equal maximum bends on the
    /// four proximal joints, the distal joint at 23.5 degrees, total 65.8 degrees.
    fn uncalibrated_segments(r: f64) -> Vec<SegmentGeometry> {
        let distal = DEFAULT_DISTAL_ALPHA_MAX_DEG.to_radians();
        let proximal = ((DEFAULT_TOTAL_BEND_DEG - DEFAULT_DISTAL_ALPHA_MAX_DEG) / 4.0).to_radians();
        (0..SEGMENT_COUNT)
            .map(|i| SegmentGeometry {
                r,
                h1: 3.0,
                h2: 1.0,
                alpha_max: if i == SEGMENT_COUNT - 1 { distal } else { proximal },
                d1: 8.0,
                axial_cap: MEASURED_COMPRESSIONS[i],
            })
            .collect()
    }

    /// Shipped geometry: the common rotation radius is solved so that the
    /// full-bend pull is exactly 5.5 mm. Segment 2 carries socket slack so the
    /// fully saturated, fully compressed chain absorbs 13.1 mm of string.
    pub fn calibrated() -> Self {
        let r = calibrate_radius(DEFAULT_FULL_BEND_PULL, 1e-13);
        let segments = Self::uncalibrated_segments(r);
        let compression: f64 = MEASURED_COMPRESSIONS.iter().sum();
        let mut slack = vec![0.0; SEGMENT_COUNT];
        slack[1] = MEASURED_FULL_PULL - DEFAULT_FULL_BEND_PULL - compression;
        Self::new(segments, DEFAULT_SPRING_CONSTANT, vec![8.0; SEGMENT_COUNT], slack)
            .expect("default chain geometry is valid")
    }

    pub fn segments(&self) -> &[SegmentGeometry] {
        &self.segments
    }

    pub fn segment_lengths(&self) -> &[f64] {
        &self.segment_lengths
    }

    pub fn socket_slack(&self) -> &[f64] {
        &self.socket_slack
    }

    /// Same chain without socket slack.
    pub fn without_slack(&self) -> Self {
        Self {
            socket_slack: vec![0.0; SEGMENT_COUNT],
            ..self.clone()
        }
    }

    pub fn alpha_max_sum(&self) -> f64 {
        self.segments.iter().map(|s| s.alpha_max).sum()
    }

    /// Pull with every joint at its bend limit and nothing compressed.
    pub fn full_bend_pull(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| segment_pull(s, s.alpha_max).expect("alpha_max is in range"))
            .sum()
    }

    pub fn compression_capacity(&self) -> f64 {
        self.segments.iter().map(|s| s.axial_cap).sum()
    }

    pub fn slack_capacity(&self) -> f64 {
        self.socket_slack.iter().sum()
    }

    /// Largest pull the chain can absorb.
    pub fn max_pull(&self) -> f64 {
        self.full_bend_pull() + self.compression_capacity() + self.slack_capacity()
    }

    /// Bend with every joint at `s * alpha_max`, nothing compressed.
    pub fn saturation_state(&self, s: f64) -> ChainState {
        ChainState {
            theta: self.segments.iter().map(|g| s * g.alpha_max).collect(),
            compression: vec![0.0; SEGMENT_COUNT],
            slack: vec![0.0; SEGMENT_COUNT],
        }
    }

    pub fn full_bend_state(&self) -> ChainState {
        self.saturation_state(1.0)
    }
}

impl Default for ChainGeometry {
    fn default() -> Self {
        Self::calibrated()
    }
}

fn full_bend_pull_for_radius(r: f64) -> f64 {
    ChainGeometry::uncalibrated_segments(r)
        .iter()
        .map(|s| segment_pull(s, s.alpha_max).expect("alpha_max is in range"))
        .sum()
}

/// Bisection on the shared rotation radius for a target full-bend pull.
fn calibrate_radius(target: f64, tol: f64) -> f64 {
    let (mut lo, mut hi) = (1e-3, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let p = full_bend_pull_for_radius(mid);
        if (p - target).abs() < tol {
            return mid;
        }
        if p < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Chain configuration: per-segment bend (rad), axial compression (mm) and
/// socket-deformation slack (mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub theta: Vec<f64>,
    pub compression: Vec<f64>,
    pub slack: Vec<f64>,
}

impl ChainState {
    pub fn rest() -> Self {
        Self {
            theta: vec![0.0; SEGMENT_COUNT],
            compression: vec![0.0; SEGMENT_COUNT],
            slack: vec![0.0; SEGMENT_COUNT],
        }
    }

    pub fn with_bends(theta: Vec<f64>) -> Self {
        Self {
            theta,
            ..Self::rest()
        }
    }

    pub fn validate(&self, chain: &ChainGeometry) -> Result<()> {
        for v in [&self.theta, &self.compression, &self.slack] {
            if v.len() != chain.segments.len() {
                return Err(Error::DimensionMismatch {
                    expected: chain.segments.len(),
                    got: v.len(),
                });
            }
        }
        for (i, g) in chain.segments.iter().enumerate() {
            check_alpha(g, self.theta[i])?;
            let c = self.compression[i];
            if !(c >= 0.0 && c <= g.axial_cap * (1.0 + 1e-12) + 1e-15) {
                return Err(Error::domain(format!(
                    "compression {c} of segment {} outside [0, {}]",
                    i + 1,
                    g.axial_cap
                )));
            }
            let s = self.slack[i];
            if !(s >= 0.0 && s <= chain.socket_slack[i] * (1.0 + 1e-12) + 1e-15) {
                return Err(Error::domain(format!(
                    "slack {s} of segment {} outside [0, {}]",
                    i + 1,
                    chain.socket_slack[i]
                )));
            }
        }
        Ok(())
    }
}

/// Total string pull for a chain state.
pub fn chain_pull(chain: &ChainGeometry, state: &ChainState) -> Result<f64> {
    state.validate(chain)?;
    let mut total = 0.0;
    for (g, &theta) in chain.segments.iter().zip(&state.theta) {
        total += segment_pull(g, theta)?;
    }
    total += state.compression.iter().sum::<f64>();
    total += state.slack.iter().sum::<f64>();
    Ok(total)
}

/// Result of the inverse pull solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PullSolution {
    pub state: ChainState,
    /// Shared saturation parameter of the bend distribution, in [0, 1].
    pub saturation: f64,
    /// Pull actually absorbed by the returned state.
    pub absorbed_pull: f64,
    /// Set when the request exceeded the chain's capacity and was clamped.
    pub clamped: bool,
    pub iterations: usize,
}

/// Distributes a commanded pull over the chain.
///
/// All joints bend together with `theta[i] = s * alpha_max[i]`; `s` is found by
/// bisection. Pull beyond full bend compresses the joints in proportion to
/// their caps, then takes up socket slack in proportion to the slack sizes.
/// Anything beyond that is clamped.
pub fn solve_bend_from_pull(chain: &ChainGeometry, pull: f64) -> Result<PullSolution> {
    if !(pull >= 0.0) || !pull.is_finite() {
        return Err(Error::domain(format!("pull must be a nonnegative number, got {pull}")));
    }
    if pull == 0.0 {
        return Ok(PullSolution {
            state: ChainState::rest(),
            saturation: 0.0,
            absorbed_pull: 0.0,
            clamped: false,
            iterations: 0,
        });
    }

    let bend_pull = chain.full_bend_pull();
    if pull <= bend_pull {
        let pull_at = |s: f64| -> f64 {
            chain
                .segments
                .iter()
                .map(|g| segment_pull(g, s * g.alpha_max).expect("s in [0, 1]"))
                .sum()
        };
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut s = 0.5;
        let mut iterations = 0;
        while iterations < chain.max_iterations {
            iterations += 1;
            s = 0.5 * (lo + hi);
            let r = pull_at(s) - pull;
            if r.abs() < chain.pull_tolerance {
                break;
            }
            if r < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
        }
        let state = chain.saturation_state(s);
        let absorbed_pull = pull_at(s);
        return Ok(PullSolution {
            state,
            saturation: s,
            absorbed_pull,
            clamped: false,
            iterations,
        });
    }

    let mut state = chain.full_bend_state();
    let mut remaining = pull - bend_pull;

    let comp_cap = chain.compression_capacity();
    let comp_share = remaining.min(comp_cap);
    if comp_cap > 0.0 {
        for (c, g) in state.compression.iter_mut().zip(&chain.segments) {
            *c = comp_share * g.axial_cap / comp_cap;
        }
    }
    remaining -= comp_share;

    let slack_cap = chain.slack_capacity();
    let slack_share = remaining.min(slack_cap);
    if slack_cap > 0.0 {
        for (s, cap) in state.slack.iter_mut().zip(&chain.socket_slack) {
            *s = slack_share * cap / slack_cap;
        }
    }
    remaining -= slack_share;

    let clamped = remaining > chain.pull_tolerance;
    let absorbed_pull = chain_pull(chain, &state)?;
    Ok(PullSolution {
        state,
        saturation: 1.0,
        absorbed_pull,
        clamped,
        iterations: 0,
    })
}

/// Sum of segment bends in degrees.
pub fn total_bend_angle(state: &ChainState) -> f64 {
    state.theta.iter().sum::<f64>().to_degrees()
}

/// Linear spring force opposing the pull (N).
pub fn restoring_force(chain: &ChainGeometry, state: &ChainState) -> Result<f64> {
    Ok(chain.k_spring * chain_pull(chain, state)?)
}

/// Two-regime force/displacement model of the tarsus tip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StiffnessModel {
    k_flexible: f64,
    k_rigid: f64,
    vertical_cap: f64,
}

impl StiffnessModel {
    pub fn new(k_flexible: f64, k_rigid: f64, vertical_cap: f64) -> Result<Self> {
        if !(k_flexible > 0.0) {
            return Err(Error::domain("flexible stiffness must be positive"));
        }
        if !(k_rigid > k_flexible) {
            return Err(Error::domain(format!(
                "rigid stiffness {k_rigid} must exceed flexible stiffness {k_flexible}"
            )));
        }
        if !(vertical_cap > 0.0) {
            return Err(Error::domain("vertical force cap must be positive"));
        }
        Ok(Self {
            k_flexible,
            k_rigid,
            vertical_cap,
        })
    }

    /// Flexible slope from the chain springs, rigid slope `ratio` times that.
    pub fn from_chain(chain: &ChainGeometry, ratio: f64, vertical_cap: f64) -> Result<Self> {
        Self::new(chain.k_spring, ratio * chain.k_spring, vertical_cap)
    }

    pub fn k_flexible(&self) -> f64 {
        self.k_flexible
    }

    pub fn k_rigid(&self) -> f64 {
        self.k_rigid
    }

    pub fn vertical_cap(&self) -> f64 {
        self.vertical_cap
    }

    pub fn force(&self, mode: TarsusMode, displacement: f64) -> f64 {
        match mode {
            TarsusMode::Flexible => self.k_flexible * displacement,
            TarsusMode::Rigid => (self.k_rigid * displacement).min(self.vertical_cap),
        }
    }
}

impl Default for StiffnessModel {
    fn default() -> Self {
        Self::new(
            DEFAULT_SPRING_CONSTANT,
            10.0 * DEFAULT_SPRING_CONSTANT,
            DEFAULT_VERTICAL_CAP,
        )
        .expect("default stiffness is valid")
    }
}

/// Force/displacement curve (N) for sorted nonnegative displacements (mm).
pub fn stiffness_curve(
    model: &StiffnessModel,
    mode: TarsusMode,
    displacements: &[f64],
) -> Result<Vec<f64>> {
    if displacements.iter().any(|d| !(*d >= 0.0)) {
        return Err(Error::domain("displacements must be nonnegative"));
    }
    if displacements.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("displacements must be sorted"));
    }
    Ok(displacements.iter().map(|&d| model.force(mode, d)).collect())
}

/// Claw opening state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClawState {
    pub opening_angle: f64,
    pub engaged: bool,
}

impl ClawState {
    pub const CLOSED: ClawState = ClawState {
        opening_angle: 0.0,
        engaged: false,
    };
}

/// Claw opening as a function of normalised tendon pull.
///
/// Below `threshold` the claws are closed. Above it the opening ramps linearly
/// to `max_opening` (rad) at full pull. Engagement requires a nonzero opening,
/// so a pull exactly at the threshold is not yet engaged.
pub fn claw_actuation(pull_fraction: f64, threshold: f64, max_opening: f64) -> Result<ClawState> {
    if !(0.0..=1.0).contains(&pull_fraction) {
        return Err(Error::domain(format!("pull fraction {pull_fraction} outside [0, 1]")));
    }
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::domain(format!("claw threshold {threshold} outside [0, 1)")));
    }
    if !(max_opening > 0.0) {
        return Err(Error::domain("maximum claw opening must be positive"));
    }
    if pull_fraction <= threshold {
        return Ok(ClawState::CLOSED);
    }
    let opening_angle = max_opening * (pull_fraction - threshold) / (1.0 - threshold);
    Ok(ClawState {
        opening_angle,
        engaged: true,
    })
}

/// Planar point in the tarsus sagittal plane: `x` distal, `z` up (mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub z: f64,
}

/// Distal end of every tarsomere, base joint at the origin.
///
/// Each joint bends the remainder of the chain downward by its `theta`;
/// compressed segments are shortened by their axial compression.
pub fn chain_pose(chain: &ChainGeometry, state: &ChainState) -> Result<Vec<PlanarPoint>> {
    state.validate(chain)?;
    let mut heading = 0.0;
    let (mut x, mut z) = (0.0, 0.0);
    let mut out = Vec::with_capacity(SEGMENT_COUNT);
    for i in 0..chain.segments.len() {
        heading += state.theta[i];
        let len = (chain.segment_lengths[i] - state.compression[i]).max(0.0);
        x += len * heading.cos();
        z -= len * heading.sin();
        out.push(PlanarPoint { x, z });
    }
    Ok(out)
}
