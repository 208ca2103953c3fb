//! Quasi-static leg + tarsus contact with a compliant square mesh.
//!
//! Each step solves positions first (joints, tendon pull, tarsus pose, claw
//! tip), then the hook/release transitions, then the mesh forces. There is no
//! mass or inertia. Heights are world `z` in mm, up positive.

use std::fmt;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::chain::{
    chain_pose, claw_actuation, solve_bend_from_pull, ChainGeometry, ChainState, ClawState, TarsusMode,
    DEFAULT_VERTICAL_CAP,
};
use crate::error::{Error, Result};
use crate::leg::{inverse_kinematics, tip_position, IkParams, JointVector, LegModel};

pub const DEFAULT_HOOKING_MAX: f64 = 28.98;
/// Robot-scale nylon mesh; compliance is not measured, only tracking matters.
pub const DEFAULT_NODE_STIFFNESS: f64 = 0.1;
pub const ROBOT_MESH_SPACING: f64 = 25.0;
pub const BEETLE_MESH_SPACING: f64 = 2.0;

/// Square mesh of hook nodes, one per cell opening.
///
/// Cell `(ix, iy)` spans `origin + spacing * [ix, ix + 1] x [iy, iy + 1]` and
/// has index `iy * nx + ix`. Strands run along the cell boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshGrid {
    pub spacing: f64,
    /// N/mm.
    pub node_stiffness: f64,
    pub rest_height: f64,
    pub origin: [f64; 2],
    nx: usize,
    ny: usize,
    /// Vertical deflection per node (mm), up positive.
    deflection: Vec<f64>,
}

impl MeshGrid {
    pub fn new(
        spacing: f64,
        node_stiffness: f64,
        rest_height: f64,
        origin: [f64; 2],
        nx: usize,
        ny: usize,
    ) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::domain("mesh spacing must be positive"));
        }
        if !(node_stiffness > 0.0) || !node_stiffness.is_finite() {
            return Err(Error::domain("mesh node stiffness must be positive"));
        }
        if !rest_height.is_finite() || !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::domain("mesh placement must be finite"));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::domain("mesh needs at least one cell"));
        }
        Ok(Self {
            spacing,
            node_stiffness,
            rest_height,
            origin,
            nx,
            ny,
            deflection: vec![0.0; nx * ny],
        })
    }

    /// 10 x 3 robot-scale mesh 60 mm below the leg base, centred on the `x` axis.
    pub fn robot_default() -> Self {
        Self::new(
            ROBOT_MESH_SPACING,
            DEFAULT_NODE_STIFFNESS,
            -60.0,
            [12.5, -37.5],
            10,
            3,
        )
        .expect("default mesh is valid")
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn node_count(&self) -> usize {
        self.deflection.len()
    }

    pub fn deflections(&self) -> &[f64] {
        &self.deflection
    }

    pub fn deflection(&self, node: usize) -> f64 {
        self.deflection[node]
    }

    pub fn node_height(&self, node: usize) -> f64 {
        self.rest_height + self.deflection[node]
    }

    pub fn at_rest(&self) -> bool {
        self.deflection.iter().all(|&d| d == 0.0)
    }

    pub fn relax(&mut self) {
        self.deflection.iter_mut().for_each(|d| *d = 0.0);
    }

    pub fn cell_center(&self, node: usize) -> Vector2<f64> {
        let (ix, iy) = (node % self.nx, node / self.nx);
        Vector2::new(
            self.origin[0] + (ix as f64 + 0.5) * self.spacing,
            self.origin[1] + (iy as f64 + 0.5) * self.spacing,
        )
    }

    /// Cell whose open interior contains `(x, y)`; `None` on a strand or off the mesh.
    pub fn cell_containing(&self, x: f64, y: f64) -> Option<usize> {
        let axis = |v: f64, o: f64, n: usize| -> Option<usize> {
            let u = (v - o) / self.spacing;
            if !(u > 0.0 && u < n as f64) || u.fract() == 0.0 {
                return None;
            }
            Some(u.floor() as usize)
        };
        let ix = axis(x, self.origin[0], self.nx)?;
        let iy = axis(y, self.origin[1], self.ny)?;
        Some(iy * self.nx + ix)
    }

    /// Node with the nearest cell centre; ties go to the lower index.
    pub fn nearest_cell(&self, x: f64, y: f64) -> usize {
        let p = Vector2::new(x, y);
        let mut best = (0, f64::INFINITY);
        for node in 0..self.node_count() {
            let d = (self.cell_center(node) - p).norm_squared();
            if d < best.1 {
                best = (node, d);
            }
        }
        best.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttachmentState {
    Free,
    Hooked(usize),
}

impl fmt::Display for AttachmentState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttachmentState::Free => f.write_str("free"),
            AttachmentState::Hooked(n) => write!(f, "hooked:{n}"),
        }
    }
}

impl std::str::FromStr for AttachmentState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "free" {
            return Ok(AttachmentState::Free);
        }
        s.strip_prefix("hooked:")
            .and_then(|n| n.parse().ok())
            .map(AttachmentState::Hooked)
            .ok_or_else(|| Error::domain(format!("unknown attachment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceLimits {
    /// N.
    pub vertical_max: f64,
    /// N.
    pub hooking_max: f64,
}

impl ForceLimits {
    pub fn new(vertical_max: f64, hooking_max: f64) -> Result<Self> {
        if !(vertical_max > 0.0) || !(hooking_max > 0.0) {
            return Err(Error::domain("force limits must be positive"));
        }
        Ok(Self {
            vertical_max,
            hooking_max,
        })
    }
}

impl Default for ForceLimits {
    fn default() -> Self {
        Self {
            vertical_max: DEFAULT_VERTICAL_CAP,
            hooking_max: DEFAULT_HOOKING_MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Hooked,
    Released,
    /// Vertical coupling force reached the cap; edge-triggered.
    Saturation,
    /// Horizontal load exceeded the hooking limit; the claw lets go.
    ClawFailure,
    /// A swing ended with the claw still hooked.
    RepeatSwing,
    /// Detached by force after the last permitted repeat swing.
    BruteForceRelease,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Hooked => "hooked",
            EventKind::Released => "released",
            EventKind::Saturation => "saturation",
            EventKind::ClawFailure => "claw_failure",
            EventKind::RepeatSwing => "repeat_swing",
            EventKind::BruteForceRelease => "brute_force_release",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            EventKind::Hooked,
            EventKind::Released,
            EventKind::Saturation,
            EventKind::ClawFailure,
            EventKind::RepeatSwing,
            EventKind::BruteForceRelease,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| Error::domain(format!("unknown event `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub t: f64,
    pub kind: EventKind,
}

/// Fixed parameters of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub leg: LegModel,
    pub chain: ChainGeometry,
    pub limits: ForceLimits,
    /// Pull fraction above which the claws open.
    pub claw_threshold: f64,
    /// rad.
    pub claw_max_opening: f64,
    /// Tendon pull slew rate (mm/ms).
    pub pull_rate: f64,
    /// Joint slew rate (rad/ms).
    pub joint_speed: f64,
    /// Tubed tarsus: the flexible mode is never entered.
    pub forbid_flexible: bool,
    pub ik: IkParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            leg: LegModel::default(),
            chain: ChainGeometry::calibrated(),
            limits: ForceLimits::default(),
            claw_threshold: 0.8,
            claw_max_opening: 60f64.to_radians(),
            pull_rate: 0.05,
            joint_speed: 0.01,
            forbid_flexible: false,
            ik: IkParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimCommand {
    pub joint_targets: JointVector,
    pub mode: TarsusMode,
    /// Extra horizontal load on the hooked claw (N).
    pub horizontal_pull: f64,
}

/// Hook bookkeeping fixed at the moment of engagement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HookInfo {
    /// `node height - claw z`, constant while hooked (mm).
    pub offset: f64,
    /// Horizontal claw position at engagement.
    pub anchor: Vector2<f64>,
    /// Last horizontal load (N).
    pub horizontal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub q: JointVector,
    /// Tendon pull (mm).
    pub pull: f64,
    pub chain: ChainState,
    pub mode: TarsusMode,
    pub claw: ClawState,
    pub claw_tip: Vector3<f64>,
    pub attachment: AttachmentState,
    pub hook: Option<HookInfo>,
    /// Vertical cap active on the hooked node.
    pub saturated: bool,
    pub mesh: MeshGrid,
    /// Last node that was hooked, for reporting.
    pub tracked_node: Option<usize>,
    pub events: Vec<SimEvent>,
}

impl SimState {
    /// Unpulled tarsus at joint angles `q`, free, mesh at rest. A tubed tarsus
    /// starts in rigid mode since it never goes flexible.
    pub fn new(cfg: &SimConfig, q: JointVector, mesh: MeshGrid) -> Self {
        let q = cfg.leg.clamp(&q);
        let chain = ChainState::rest();
        let claw_tip = claw_tip_position(cfg, &q, &chain);
        let mut mesh = mesh;
        mesh.relax();
        Self {
            t: 0.0,
            q,
            pull: 0.0,
            chain,
            mode: if cfg.forbid_flexible {
                TarsusMode::Rigid
            } else {
                TarsusMode::Flexible
            },
            claw: ClawState::CLOSED,
            claw_tip,
            attachment: AttachmentState::Free,
            hook: None,
            saturated: false,
            mesh,
            tracked_node: None,
            events: Vec::new(),
        }
    }

    /// Height of the hooked (or last hooked) node, else of the cell under the claw.
    pub fn mesh_height(&self) -> f64 {
        let node = match self.attachment {
            AttachmentState::Hooked(n) => n,
            AttachmentState::Free => self
                .tracked_node
                .unwrap_or_else(|| self.mesh.nearest_cell(self.claw_tip.x, self.claw_tip.y)),
        };
        self.mesh.node_height(node)
    }

    fn detach(&mut self, kind: EventKind) {
        if let AttachmentState::Hooked(node) = self.attachment {
            self.mesh.relax();
            self.tracked_node = Some(node);
        }
        self.attachment = AttachmentState::Free;
        self.hook = None;
        self.saturated = false;
        self.events.push(SimEvent { t: self.t, kind });
    }
}

/// Claw tip in world coordinates.
///
/// The tarsus base sits at the tibia tip and extends horizontally outward along
/// the leg's azimuth, bending downward in that vertical plane.
pub fn claw_tip_position(cfg: &SimConfig, q: &JointVector, chain: &ChainState) -> Vector3<f64> {
    let base = tip_position(&cfg.leg, q);
    let radial = Vector2::new(base.x, base.y);
    let dir = if radial.norm() > 1e-12 {
        radial.normalize()
    } else {
        Vector2::new(1.0, 0.0)
    };
    let end = chain_pose(&cfg.chain, chain)
        .expect("solver states are valid")
        .last()
        .copied()
        .expect("chain has segments");
    Vector3::new(base.x + end.x * dir.x, base.y + end.x * dir.y, base.z + end.z)
}

/// Hooked iff rigid, claws engaged, tip below the mesh and inside a cell opening.
pub fn hook_check(tip: &Vector3<f64>, engaged: bool, mode: TarsusMode, mesh: &MeshGrid) -> AttachmentState {
    if mode != TarsusMode::Rigid || !engaged || !(tip.z < mesh.rest_height) {
        return AttachmentState::Free;
    }
    match mesh.cell_containing(tip.x, tip.y) {
        Some(_) => AttachmentState::Hooked(mesh.nearest_cell(tip.x, tip.y)),
        None => AttachmentState::Free,
    }
}

/// Outcome of loading a hooked node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingOutcome {
    /// Node deflection after the vertical cap (mm).
    pub deflection: f64,
    pub vertical: f64,
    pub horizontal: f64,
    /// Vertical demand was strictly above `vertical_max`.
    pub saturated: bool,
    /// Horizontal load was strictly above `hooking_max`.
    pub failed: bool,
}

/// Forces on a hooked node for a demanded deflection and strand stretch.
pub fn resolve_coupling(
    stiffness: f64,
    limits: &ForceLimits,
    demanded_deflection: f64,
    stretch: f64,
    horizontal_pull: f64,
) -> CouplingOutcome {
    let demand = stiffness * demanded_deflection.abs();
    let saturated = demand > limits.vertical_max;
    let (deflection, vertical) = if saturated {
        (demanded_deflection.signum() * limits.vertical_max / stiffness, limits.vertical_max)
    } else {
        (demanded_deflection, demand)
    };
    let horizontal = stiffness * stretch.abs() + horizontal_pull.max(0.0);
    CouplingOutcome {
        deflection,
        vertical,
        horizontal,
        saturated,
        failed: horizontal > limits.hooking_max,
    }
}

/// `(vertical, horizontal)` load on the hooked node (N); zeros when free.
pub fn coupling_force(sim: &SimState) -> (f64, f64) {
    match (sim.attachment, sim.hook) {
        (AttachmentState::Hooked(node), Some(h)) => {
            (sim.mesh.node_stiffness * sim.mesh.deflection(node).abs(), h.horizontal)
        }
        _ => (0.0, 0.0),
    }
}

fn approach(from: f64, to: f64, max_delta: f64) -> f64 {
    from + (to - from).clamp(-max_delta, max_delta)
}

/// Advances the simulation by `dt` ms.
///
/// A non-positive `dt` returns the state unchanged. Limit violations show up
/// as events, never as errors.
pub fn step(cfg: &SimConfig, sim: &SimState, dt: f64, cmd: &SimCommand) -> SimState {
    let mut next = sim.clone();
    if !(dt > 0.0) {
        return next;
    }
    next.t = sim.t + dt;
    next.mode = if cfg.forbid_flexible {
        TarsusMode::Rigid
    } else {
        cmd.mode
    };

    let target = cfg.leg.clamp(&cmd.joint_targets);
    for j in 0..next.q.0.len() {
        next.q.0[j] = approach(sim.q.0[j], target.0[j], cfg.joint_speed * dt);
    }

    let full = cfg.chain.full_bend_pull();
    let pull_target = match next.mode {
        TarsusMode::Rigid => full,
        TarsusMode::Flexible => 0.0,
    };
    next.pull = approach(sim.pull, pull_target, cfg.pull_rate * dt).max(0.0);
    next.chain = solve_bend_from_pull(&cfg.chain, next.pull)
        .expect("pull is nonnegative and finite")
        .state;
    next.claw = claw_actuation((next.pull / full).clamp(0.0, 1.0), cfg.claw_threshold, cfg.claw_max_opening)
        .unwrap_or(ClawState::CLOSED);
    next.claw_tip = claw_tip_position(cfg, &next.q, &next.chain);

    let rest = next.mesh.rest_height;
    match (next.attachment, next.hook) {
        (AttachmentState::Hooked(node), Some(hook)) => {
            let rising = next.claw_tip.z > sim.claw_tip.z || next.claw_tip.z > rest;
            if next.mode == TarsusMode::Flexible && rising {
                next.detach(EventKind::Released);
            } else {
                let demanded = next.claw_tip.z + hook.offset - rest;
                let stretch = (Vector2::new(next.claw_tip.x, next.claw_tip.y) - hook.anchor).norm();
                let out = resolve_coupling(
                    next.mesh.node_stiffness,
                    &cfg.limits,
                    demanded,
                    stretch,
                    cmd.horizontal_pull,
                );
                if out.failed {
                    next.detach(EventKind::ClawFailure);
                } else {
                    next.mesh.deflection[node] = out.deflection;
                    if out.saturated && !sim.saturated {
                        next.events.push(SimEvent {
                            t: next.t,
                            kind: EventKind::Saturation,
                        });
                    }
                    next.saturated = out.saturated;
                    next.hook = Some(HookInfo {
                        horizontal: out.horizontal,
                        ..hook
                    });
                }
            }
        }
        _ => {
            next.attachment = AttachmentState::Free;
            next.hook = None;
            next.mesh.relax();
            if let AttachmentState::Hooked(node) = hook_check(&next.claw_tip, next.claw.engaged, next.mode, &next.mesh) {
                next.attachment = AttachmentState::Hooked(node);
                next.tracked_node = Some(node);
                next.hook = Some(HookInfo {
                    offset: rest - next.claw_tip.z,
                    anchor: Vector2::new(next.claw_tip.x, next.claw_tip.y),
                    horizontal: cmd.horizontal_pull.max(0.0),
                });
                next.events.push(SimEvent {
                    t: next.t,
                    kind: EventKind::Hooked,
                });
            }
        }
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseKind {
    Stand,
    Swing,
}

/// One scripted phase: drive the tibia tip to `target` over `duration_ms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub kind: PhaseKind,
    pub mode: TarsusMode,
    pub duration_ms: f64,
    pub target_mm: [f64; 3],
    #[serde(default)]
    pub horizontal_pull_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub dt_ms: f64,
    /// Initial tibia-tip position.
    pub start_mm: [f64; 3],
    pub phases: Vec<Phase>,
    /// Tubed tarsus.
    pub forbid_flexible: bool,
    pub max_swing_repeats: usize,
    /// ClawFailure events are part of the script rather than a fault.
    pub expect_claw_failure: bool,
}

fn phase(name: &str, kind: PhaseKind, mode: TarsusMode, duration_ms: f64, target_mm: [f64; 3]) -> Phase {
    Phase {
        name: name.to_string(),
        kind,
        mode,
        duration_ms,
        target_mm,
        horizontal_pull_n: 0.0,
    }
}

impl Scenario {
    /// Mesh demonstration: settle, hook while standing, lift the mesh with a
    /// late release, then relax the tarsus mid-swing so the claws come out.
    pub fn fig10c() -> Self {
        use PhaseKind::*;
        use TarsusMode::*;
        Self {
            name: "fig10c".into(),
            dt_ms: 5.0,
            start_mm: [110.0, 0.0, -30.0],
            phases: vec![
                phase("approach", Swing, Flexible, 200.0, [110.0, 0.0, -36.0]),
                phase("stand", Stand, Rigid, 300.0, [110.0, 0.0, -52.0]),
                phase("lift", Swing, Rigid, 300.0, [110.0, 0.0, -28.0]),
                phase("release", Swing, Flexible, 300.0, [110.0, 0.0, -22.0]),
                phase("return", Stand, Flexible, 300.0, [110.0, 0.0, -30.0]),
            ],
            forbid_flexible: false,
            max_swing_repeats: 3,
            expect_claw_failure: false,
        }
    }

    /// Same script with the flexible transition forbidden.
    pub fn tubed() -> Self {
        Self {
            name: "tubed".into(),
            forbid_flexible: true,
            ..Self::fig10c()
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "fig10c" => Some(Self::fig10c()),
            "tubed" => Some(Self::tubed()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_ms > 0.0) {
            return Err(Error::domain(format!("scenario `{}`: dt must be positive", self.name)));
        }
        for p in &self.phases {
            if !(p.duration_ms >= 0.0) || !p.target_mm.iter().all(|v| v.is_finite()) {
                return Err(Error::domain(format!(
                    "scenario `{}`: phase `{}` needs a nonnegative duration and finite target",
                    self.name, p.name
                )));
            }
        }
        Ok(())
    }
}

/// One row of the demo time series.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoSample {
    pub t: f64,
    pub phase: String,
    pub claw_z: f64,
    pub mesh_z: f64,
    pub mode: TarsusMode,
    pub attachment: AttachmentState,
    /// `mesh_z - claw_z` fixed at engagement, while hooked.
    pub hook_offset: Option<f64>,
    pub saturated: bool,
    pub events: Vec<EventKind>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoRun {
    pub scenario: String,
    pub samples: Vec<DemoSample>,
    pub events: Vec<SimEvent>,
    pub final_state: Option<SimState>,
}

impl DemoRun {
    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

fn sample(sim: &SimState, phase: &str, seen: usize) -> DemoSample {
    DemoSample {
        t: sim.t,
        phase: phase.to_string(),
        claw_z: sim.claw_tip.z,
        mesh_z: sim.mesh_height(),
        mode: sim.mode,
        attachment: sim.attachment,
        hook_offset: sim.hook.map(|h| h.offset),
        saturated: sim.saturated,
        events: sim.events[seen..].iter().map(|e| e.kind).collect(),
    }
}

struct Runner<'a> {
    cfg: &'a SimConfig,
    dt: f64,
    sim: SimState,
    samples: Vec<DemoSample>,
}

impl Runner<'_> {
    fn drive(&mut self, goal: JointVector, p: &Phase) {
        let from = self.sim.q;
        let n = ((p.duration_ms / self.dt).ceil() as usize).max(1);
        for k in 1..=n {
            let s = k as f64 / n as f64;
            let mut q = from;
            for j in 0..q.0.len() {
                q.0[j] = from.0[j] + s * (goal.0[j] - from.0[j]);
            }
            let cmd = SimCommand {
                joint_targets: q,
                mode: p.mode,
                horizontal_pull: p.horizontal_pull_n,
            };
            let seen = self.sim.events.len();
            self.sim = step(self.cfg, &self.sim, self.dt, &cmd);
            self.samples.push(sample(&self.sim, &p.name, seen));
        }
    }

    fn log(&mut self, kind: EventKind) {
        self.sim.events.push(SimEvent { t: self.sim.t, kind });
        if let Some(last) = self.samples.last_mut() {
            last.events.push(kind);
        }
    }
}

/// Runs a phase script from rest and records the claw and mesh heights.
///
/// A flexible swing that ends with the claw still hooked logs `RepeatSwing`,
/// returns to the swing's start pose and swings again, up to
/// `max_swing_repeats` times; after that the claw is torn free
/// (`BruteForceRelease`). An empty script yields an empty series.
pub fn run_demo_cycle(cfg: &SimConfig, mesh: MeshGrid, scenario: &Scenario) -> Result<DemoRun> {
    scenario.validate()?;
    if scenario.phases.is_empty() {
        return Ok(DemoRun {
            scenario: scenario.name.clone(),
            samples: Vec::new(),
            events: Vec::new(),
            final_state: None,
        });
    }
    let cfg = SimConfig {
        forbid_flexible: cfg.forbid_flexible || scenario.forbid_flexible,
        ..cfg.clone()
    };
    let home = JointVector([0.0, 0.0, -std::f64::consts::FRAC_PI_4, -std::f64::consts::FRAC_PI_4]);
    let start = inverse_kinematics(&cfg.leg, &Vector3::from(scenario.start_mm), &home, &cfg.ik)?;
    let sim = SimState::new(&cfg, start.q, mesh);
    let first = sample(&sim, &scenario.phases[0].name, 0);
    let mut run = Runner {
        cfg: &cfg,
        dt: scenario.dt_ms,
        sim,
        samples: vec![first],
    };
    for p in &scenario.phases {
        let origin = run.sim.q;
        let goal = inverse_kinematics(&cfg.leg, &Vector3::from(p.target_mm), &origin, &cfg.ik)?.q;
        let mut repeats = 0;
        loop {
            run.drive(goal, p);
            let stuck = p.kind == PhaseKind::Swing
                && p.mode == TarsusMode::Flexible
                && matches!(run.sim.attachment, AttachmentState::Hooked(_));
            if !stuck {
                break;
            }
            run.log(EventKind::RepeatSwing);
            if repeats == scenario.max_swing_repeats {
                let seen = run.sim.events.len();
                run.sim.detach(EventKind::BruteForceRelease);
                if let Some(last) = run.samples.last_mut() {
                    last.events.extend(run.sim.events[seen..].iter().map(|e| e.kind));
                    last.attachment = AttachmentState::Free;
                    last.mesh_z = run.sim.mesh_height();
                    last.hook_offset = None;
                }
                break;
            }
            repeats += 1;
            run.drive(origin, p);
        }
    }
    Ok(DemoRun {
        scenario: scenario.name.clone(),
        events: run.sim.events.clone(),
        samples: run.samples,
        final_state: Some(run.sim),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh() -> MeshGrid {
        MeshGrid::new(10.0, 1.0, 0.0, [0.0, 0.0], 4, 4).unwrap()
    }

    #[test]
    fn mesh_validation() {
        assert!(MeshGrid::new(0.0, 1.0, 0.0, [0.0, 0.0], 2, 2).is_err());
        assert!(MeshGrid::new(1.0, -1.0, 0.0, [0.0, 0.0], 2, 2).is_err());
        assert!(MeshGrid::new(1.0, 1.0, 0.0, [0.0, 0.0], 0, 2).is_err());
        assert!(mesh().at_rest());
    }

    #[test]
    fn cells_and_strands() {
        let m = mesh();
        assert_eq!(m.cell_containing(15.0, 25.0), Some(2 * 4 + 1));
        assert_eq!(m.cell_containing(10.0, 25.0), None);
        assert_eq!(m.cell_containing(15.0, 0.0), None);
        assert_eq!(m.cell_containing(-1.0, 5.0), None);
        assert_eq!(m.cell_containing(41.0, 5.0), None);
        // equidistant from cells 0 and 1
        assert_eq!(m.nearest_cell(10.0, 5.0), 0);
    }

    #[test]
    fn hook_predicate() {
        let m = mesh();
        let below = Vector3::new(15.0, 15.0, -1.0);
        assert_eq!(hook_check(&below, true, TarsusMode::Rigid, &m), AttachmentState::Hooked(5));
        assert_eq!(hook_check(&below, true, TarsusMode::Flexible, &m), AttachmentState::Free);
        let strand = Vector3::new(20.0, 15.0, -1.0);
        assert_eq!(hook_check(&strand, true, TarsusMode::Rigid, &m), AttachmentState::Free);
        let level = Vector3::new(15.0, 15.0, 0.0);
        assert_eq!(hook_check(&level, true, TarsusMode::Rigid, &m), AttachmentState::Free);
    }

    #[test]
    fn coupling_thresholds() {
        let lim = ForceLimits::default();
        let at = resolve_coupling(1.0, &lim, 2.46, 0.0, 0.0);
        assert!(!at.saturated);
        assert_eq!(at.vertical, 2.46);
        let over = resolve_coupling(1.0, &lim, -3.0, 0.0, 0.0);
        assert!(over.saturated);
        assert_eq!(over.vertical, 2.46);
        assert_eq!(over.deflection, -2.46);
        assert!(!resolve_coupling(1.0, &lim, 0.0, 0.0, 28.98).failed);
        assert!(resolve_coupling(1.0, &lim, 0.0, 0.0, 28.99).failed);
        let z = resolve_coupling(1.0, &lim, 0.0, 0.0, 0.0);
        assert_eq!((z.vertical, z.horizontal), (0.0, 0.0));
    }

    #[test]
    fn attachment_round_trip() {
        for a in [AttachmentState::Free, AttachmentState::Hooked(17)] {
            assert_eq!(a.to_string().parse::<AttachmentState>().unwrap(), a);
        }
        assert!("hooked:x".parse::<AttachmentState>().is_err());
    }

    #[test]
    fn high_leg_stays_free() {
        let cfg = SimConfig::default();
        let q = JointVector([0.0, 0.5, -0.5, 0.0]);
        let mut sim = SimState::new(&cfg, q, MeshGrid::robot_default());
        for mode in [TarsusMode::Rigid, TarsusMode::Flexible] {
            for _ in 0..50 {
                sim = step(
                    &cfg,
                    &sim,
                    10.0,
                    &SimCommand {
                        joint_targets: q,
                        mode,
                        horizontal_pull: 0.0,
                    },
                );
                assert_eq!(sim.attachment, AttachmentState::Free);
                assert!(sim.mesh.at_rest());
            }
        }
    }

    #[test]
    fn step_is_deterministic() {
        let cfg = SimConfig::default();
        let sim = SimState::new(&cfg, JointVector([0.1, 0.2, -0.9, -0.6]), MeshGrid::robot_default());
        let cmd = SimCommand {
            joint_targets: JointVector([0.0, 0.0, -1.0, -0.5]),
            mode: TarsusMode::Rigid,
            horizontal_pull: 0.0,
        };
        assert_eq!(step(&cfg, &sim, 7.0, &cmd), step(&cfg, &sim, 7.0, &cmd));
        assert_eq!(step(&cfg, &sim, 0.0, &cmd), sim);
    }

    #[test]
    fn flexible_script_leaves_mesh_at_rest() {
        let mut sc = Scenario::fig10c();
        for p in &mut sc.phases {
            p.mode = TarsusMode::Flexible;
        }
        let run = run_demo_cycle(&SimConfig::default(), MeshGrid::robot_default(), &sc).unwrap();
        assert!(run.samples.iter().all(|s| s.mesh_z == -60.0));
        assert!(run.events.is_empty());
    }

    #[test]
    fn empty_script() {
        let sc = Scenario {
            phases: vec![],
            ..Scenario::fig10c()
        };
        let run = run_demo_cycle(&SimConfig::default(), MeshGrid::robot_default(), &sc).unwrap();
        assert!(run.samples.is_empty());
    }

    #[test]
    fn unreachable_phase_propagates() {
        let mut sc = Scenario::fig10c();
        sc.phases[1].target_mm = [500.0, 0.0, 0.0];
        let err = run_demo_cycle(&SimConfig::default(), MeshGrid::robot_default(), &sc).unwrap_err();
        assert!(matches!(err, Error::NotReachable { .. }));
    }
}
