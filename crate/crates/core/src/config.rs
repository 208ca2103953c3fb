//! `tarsim.conf`: TOML with units spelled out in every key name.
//!
//! Every section is optional and falls back to the shipped defaults. Unknown
//! keys are rejected; the error names the offending key, lists the valid ones
//! and carries the line number.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainGeometry, SegmentGeometry, StiffnessModel, SEGMENT_COUNT};
use crate::contact::{ForceLimits, MeshGrid, Phase, Scenario, SimConfig};
use crate::error::{Error, Result};
use crate::gait::{Aggregation, AmplitudeDefinition, CycleParams, Side};
use crate::leg::{DhRow, IkParams, JointTrackOptions, LegModel, Retarget, ScaleOrigin, JOINT_COUNT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSection {
    pub radius_mm: Option<f64>,
    pub h1_mm: f64,
    pub h2_mm: f64,
    pub d1_mm: f64,
    pub alpha_max_deg: Vec<f64>,
    pub axial_cap_mm: Vec<f64>,
    pub segment_length_mm: Vec<f64>,
    pub socket_slack_mm: Vec<f64>,
    pub k_spring_n_per_mm: f64,
    pub rigid_stiffness_ratio: f64,
    pub vertical_cap_n: f64,
    pub pull_tolerance_mm: f64,
    pub max_iterations: usize,
}

impl Default for ChainSection {
    fn default() -> Self {
        let c = ChainGeometry::calibrated();
        let s = c.segments();
        Self {
            radius_mm: None,
            h1_mm: s[0].h1,
            h2_mm: s[0].h2,
            d1_mm: s[0].d1,
            alpha_max_deg: s.iter().map(|g| g.alpha_max.to_degrees()).collect(),
            axial_cap_mm: s.iter().map(|g| g.axial_cap).collect(),
            segment_length_mm: c.segment_lengths().to_vec(),
            socket_slack_mm: c.socket_slack().to_vec(),
            k_spring_n_per_mm: c.k_spring,
            rigid_stiffness_ratio: 10.0,
            vertical_cap_n: crate::chain::DEFAULT_VERTICAL_CAP,
            pull_tolerance_mm: c.pull_tolerance,
            max_iterations: c.max_iterations,
        }
    }
}

impl ChainSection {
    /// Without `radius_mm` the radius is the calibrated one for the default
    /// anchor layout.
    pub fn geometry(&self) -> Result<ChainGeometry> {
        let r = match self.radius_mm {
            Some(r) => r,
            None => ChainGeometry::calibrated().segments()[0].r,
        };
        for (name, v) in [
            ("alpha_max_deg", &self.alpha_max_deg),
            ("axial_cap_mm", &self.axial_cap_mm),
        ] {
            if v.len() != SEGMENT_COUNT {
                return Err(Error::Config(format!(
                    "[chain] {name} needs {SEGMENT_COUNT} entries, got {}",
                    v.len()
                )));
            }
        }
        let segments = (0..SEGMENT_COUNT)
            .map(|i| {
                SegmentGeometry::new(
                    r,
                    self.h1_mm,
                    self.h2_mm,
                    self.alpha_max_deg[i].to_radians(),
                    self.d1_mm,
                    self.axial_cap_mm[i],
                )
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Config(format!("[chain] {e}")))?;
        let mut chain = ChainGeometry::new(
            segments,
            self.k_spring_n_per_mm,
            self.segment_length_mm.clone(),
            self.socket_slack_mm.clone(),
        )
        .map_err(|e| Error::Config(format!("[chain] {e}")))?;
        chain.pull_tolerance = self.pull_tolerance_mm;
        chain.max_iterations = self.max_iterations;
        Ok(chain)
    }

    pub fn stiffness(&self, chain: &ChainGeometry) -> Result<StiffnessModel> {
        StiffnessModel::from_chain(chain, self.rigid_stiffness_ratio, self.vertical_cap_n)
            .map_err(|e| Error::Config(format!("[chain] {e}")))
    }
}

/// One DH row with its joint range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSection {
    pub a_mm: f64,
    pub alpha_twist_deg: f64,
    #[serde(default)]
    pub d_mm: f64,
    #[serde(default)]
    pub theta_offset_deg: f64,
    pub min_deg: f64,
    pub max_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LegSection {
    pub retarget_scale: f64,
    pub retarget_origin: RetargetOrigin,
    /// Robot-frame point the scale origin is moved to; unset keeps it in place.
    pub retarget_placement_mm: Option<[f64; 3]>,
    #[serde(rename = "joint")]
    pub joints: Vec<JointSection>,
}

impl Default for LegSection {
    fn default() -> Self {
        let leg = LegModel::default();
        let joints = leg
            .rows()
            .iter()
            .zip(leg.limits())
            .map(|(r, l)| JointSection {
                a_mm: r.a,
                alpha_twist_deg: r.alpha_twist.to_degrees(),
                d_mm: r.d,
                theta_offset_deg: r.theta_offset.to_degrees(),
                min_deg: l.0.to_degrees(),
                max_deg: l.1.to_degrees(),
            })
            .collect();
        Self {
            retarget_scale: crate::leg::DEFAULT_RETARGET_SCALE,
            retarget_origin: RetargetOrigin::FirstTouchdown,
            retarget_placement_mm: None,
            joints,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetargetOrigin {
    FirstTouchdown,
    FirstSample,
}

impl LegSection {
    pub fn retarget(&self) -> Retarget {
        Retarget {
            scale: self.retarget_scale,
            origin: match self.retarget_origin {
                RetargetOrigin::FirstTouchdown => ScaleOrigin::FirstTouchdown,
                RetargetOrigin::FirstSample => ScaleOrigin::FirstSample,
            },
            placement: self.retarget_placement_mm.map(Vector3::from),
        }
    }

    pub fn model(&self) -> Result<LegModel> {
        if self.joints.len() != JOINT_COUNT {
            return Err(Error::Config(format!(
                "[leg] needs {JOINT_COUNT} [[leg.joint]] tables, got {}",
                self.joints.len()
            )));
        }
        let mut rows = Vec::with_capacity(JOINT_COUNT);
        for (j, js) in self.joints.iter().enumerate() {
            rows.push(
                DhRow::new(
                    js.a_mm,
                    js.alpha_twist_deg.to_radians(),
                    js.d_mm,
                    js.theta_offset_deg.to_radians(),
                )
                .map_err(|e| Error::Config(format!("[leg] joint {}: {e}", j + 1)))?,
            );
        }
        let rows: [DhRow; JOINT_COUNT] = rows.try_into().expect("one row per joint");
        let limits = std::array::from_fn(|j| {
            (
                self.joints[j].min_deg.to_radians(),
                self.joints[j].max_deg.to_radians(),
            )
        });
        LegModel::new(rows, limits).map_err(|e| Error::Config(format!("[leg] {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub ik_damping: f64,
    pub ik_max_step_rad: f64,
    pub ik_tolerance_mm: f64,
    pub ik_max_iterations: usize,
    pub continuity_limit_rad: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let ik = IkParams::default();
        Self {
            ik_damping: ik.damping,
            ik_max_step_rad: ik.max_step,
            ik_tolerance_mm: ik.tolerance,
            ik_max_iterations: ik.max_iterations,
            continuity_limit_rad: JointTrackOptions::default().continuity_limit,
        }
    }
}

impl SolverSection {
    pub fn ik(&self) -> Result<IkParams> {
        if !(self.ik_damping > 0.0 && self.ik_max_step_rad > 0.0 && self.ik_tolerance_mm > 0.0) {
            return Err(Error::Config("[solver] damping, step and tolerance must be positive".into()));
        }
        Ok(IkParams {
            damping: self.ik_damping,
            max_step: self.ik_max_step_rad,
            tolerance: self.ik_tolerance_mm,
            max_iterations: self.ik_max_iterations,
        })
    }

    pub fn tracking(&self) -> Result<JointTrackOptions> {
        Ok(JointTrackOptions {
            ik: self.ik()?,
            continuity_limit: self.continuity_limit_rad,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    pub spacing_mm: f64,
    pub node_stiffness_n_per_mm: f64,
    pub rest_height_mm: f64,
    pub origin_mm: [f64; 2],
    pub cells_x: usize,
    pub cells_y: usize,
}

impl Default for MeshSection {
    fn default() -> Self {
        let m = MeshGrid::robot_default();
        let (nx, ny) = m.dims();
        Self {
            spacing_mm: m.spacing,
            node_stiffness_n_per_mm: m.node_stiffness,
            rest_height_mm: m.rest_height,
            origin_mm: m.origin,
            cells_x: nx,
            cells_y: ny,
        }
    }
}

impl MeshSection {
    pub fn grid(&self) -> Result<MeshGrid> {
        MeshGrid::new(
            self.spacing_mm,
            self.node_stiffness_n_per_mm,
            self.rest_height_mm,
            self.origin_mm,
            self.cells_x,
            self.cells_y,
        )
        .map_err(|e| Error::Config(format!("[mesh] {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactSection {
    pub vertical_max_n: f64,
    pub hooking_max_n: f64,
    pub claw_threshold: f64,
    pub claw_max_opening_deg: f64,
    pub pull_rate_mm_per_ms: f64,
    pub joint_speed_rad_per_ms: f64,
}

impl Default for ContactSection {
    fn default() -> Self {
        let s = SimConfig::default();
        Self {
            vertical_max_n: s.limits.vertical_max,
            hooking_max_n: s.limits.hooking_max,
            claw_threshold: s.claw_threshold,
            claw_max_opening_deg: s.claw_max_opening.to_degrees(),
            pull_rate_mm_per_ms: s.pull_rate,
            joint_speed_rad_per_ms: s.joint_speed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaitSection {
    pub rate_hz: f64,
    pub hysteresis_fraction: f64,
    pub debounce_ms: f64,
    pub amplitude: AmplitudeDefinition,
    pub side: Side,
    pub aggregation: Aggregation,
}

impl Default for GaitSection {
    fn default() -> Self {
        let c = CycleParams::default();
        Self {
            rate_hz: crate::gait::DEFAULT_RATE_HZ,
            hysteresis_fraction: c.hysteresis_fraction,
            debounce_ms: c.debounce_ms,
            amplitude: c.amplitude,
            side: Side::Left,
            aggregation: Aggregation::Beetle,
        }
    }
}

impl GaitSection {
    pub fn cycle_params(&self) -> Result<CycleParams> {
        if !(0.0..0.5).contains(&self.hysteresis_fraction) || !(self.debounce_ms >= 0.0) {
            return Err(Error::Config(
                "[gait] hysteresis_fraction must be in [0, 0.5) and debounce_ms nonnegative".into(),
            ));
        }
        if !(self.rate_hz > 0.0) {
            return Err(Error::Config("[gait] rate_hz must be positive".into()));
        }
        Ok(CycleParams {
            hysteresis_fraction: self.hysteresis_fraction,
            debounce_ms: self.debounce_ms,
            amplitude: self.amplitude,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    #[serde(default = "default_dt")]
    pub dt_ms: f64,
    pub start_mm: [f64; 3],
    #[serde(default)]
    pub forbid_flexible: bool,
    #[serde(default = "default_repeats")]
    pub max_swing_repeats: usize,
    #[serde(default)]
    pub expect_claw_failure: bool,
    #[serde(default, rename = "phase")]
    pub phases: Vec<PhaseSection>,
}

fn default_dt() -> f64 {
    5.0
}

fn default_repeats() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSection {
    pub name: String,
    pub kind: crate::contact::PhaseKind,
    pub mode: crate::chain::TarsusMode,
    pub duration_ms: f64,
    pub target_mm: [f64; 3],
    #[serde(default)]
    pub horizontal_pull_n: f64,
}

impl From<&ScenarioSection> for Scenario {
    fn from(s: &ScenarioSection) -> Self {
        Scenario {
            name: s.name.clone(),
            dt_ms: s.dt_ms,
            start_mm: s.start_mm,
            forbid_flexible: s.forbid_flexible,
            max_swing_repeats: s.max_swing_repeats,
            expect_claw_failure: s.expect_claw_failure,
            phases: s
                .phases
                .iter()
                .map(|p| Phase {
                    name: p.name.clone(),
                    kind: p.kind,
                    mode: p.mode,
                    duration_ms: p.duration_ms,
                    target_mm: p.target_mm,
                    horizontal_pull_n: p.horizontal_pull_n,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub chain: ChainSection,
    pub leg: LegSection,
    pub solver: SolverSection,
    pub mesh: MeshSection,
    pub contact: ContactSection,
    pub gait: GaitSection,
    #[serde(rename = "scenario")]
    pub scenarios: Vec<ScenarioSection>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()
            .map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Builds every derived object once so bad values fail at load time.
    pub fn validate(&self) -> Result<()> {
        let chain = self.chain.geometry()?;
        self.chain.stiffness(&chain)?;
        self.leg.model()?;
        self.solver.tracking()?;
        self.mesh.grid()?;
        self.sim()?;
        self.gait.cycle_params()?;
        for s in &self.scenarios {
            Scenario::from(s)
                .validate()
                .map_err(|e| Error::Config(format!("[[scenario]] {e}")))?;
        }
        Ok(())
    }

    pub fn sim(&self) -> Result<SimConfig> {
        let c = &self.contact;
        let limits = ForceLimits::new(c.vertical_max_n, c.hooking_max_n)
            .map_err(|e| Error::Config(format!("[contact] {e}")))?;
        if !(0.0..1.0).contains(&c.claw_threshold) {
            return Err(Error::Config("[contact] claw_threshold must be in [0, 1)".into()));
        }
        if !(c.claw_max_opening_deg > 0.0 && c.pull_rate_mm_per_ms > 0.0 && c.joint_speed_rad_per_ms > 0.0) {
            return Err(Error::Config(
                "[contact] opening, pull rate and joint speed must be positive".into(),
            ));
        }
        Ok(SimConfig {
            leg: self.leg.model()?,
            chain: self.chain.geometry()?,
            limits,
            claw_threshold: c.claw_threshold,
            claw_max_opening: c.claw_max_opening_deg.to_radians(),
            pull_rate: c.pull_rate_mm_per_ms,
            joint_speed: c.joint_speed_rad_per_ms,
            forbid_flexible: false,
            ik: self.solver.ik()?,
        })
    }

    /// Config scenarios shadow the built-in ones of the same name.
    pub fn scenario(&self, name: &str) -> Result<Scenario> {
        self.scenarios
            .iter()
            .find(|s| s.name == name)
            .map(Scenario::from)
            .or_else(|| Scenario::builtin(name))
            .ok_or_else(|| Error::UnknownScenario(name.to_string()))
    }

    pub fn scenario_names(&self) -> Vec<String> {
        let mut names: Vec<String> = vec!["fig10c".into(), "tubed".into()];
        for s in &self.scenarios {
            if !names.contains(&s.name) {
                names.push(s.name.clone());
            }
        }
        names
    }

    /// Canonical TOML rendering, used for hashing and as a starting template.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retarget_keys() {
        let cfg = Config::parse("[leg]\nretarget_origin = \"first_sample\"\nretarget_placement_mm = [110.0, 0.0, -40.0]\n").unwrap();
        let rt = cfg.leg.retarget();
        assert_eq!(rt.origin, ScaleOrigin::FirstSample);
        assert_eq!(rt.placement, Some(Vector3::new(110.0, 0.0, -40.0)));
        assert_eq!(Config::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn empty_file_is_all_defaults() {
        let cfg = Config::parse("").unwrap();
        assert_eq!(cfg, Config::default());
        let chain = cfg.chain.geometry().unwrap();
        assert!((chain.full_bend_pull() - 5.5).abs() < 1e-9);
        assert_eq!(cfg.leg.model().unwrap(), LegModel::default());
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let text = Config::default().to_toml();
        assert_eq!(Config::parse(&text).unwrap(), Config::default());
    }

    #[test]
    fn unknown_key_lists_valid_keys_and_line() {
        let err = Config::parse("[mesh]\nspacing_mm = 25.0\nstiffness = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("stiffness"), "{msg}");
        assert!(msg.contains("node_stiffness_n_per_mm"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn leg_joint_tables() {
        let text = Config::default().to_toml();
        assert!(text.contains("[[leg.joint]]"), "{text}");
        let one = "[[leg.joint]]\na_mm = 1.0\nalpha_twist_deg = 0.0\nmin_deg = -90.0\nmax_deg = 90.0\n";
        assert!(Config::parse(one).is_err());
    }

    #[test]
    fn bad_values_rejected() {
        assert!(Config::parse("[mesh]\nspacing_mm = -1.0\n").is_err());
        assert!(Config::parse("[chain]\nalpha_max_deg = [1.0, 2.0]\n").is_err());
        assert!(Config::parse("[contact]\nclaw_threshold = 1.0\n").is_err());
    }

    #[test]
    fn scenarios_from_file() {
        let text = r#"
[[scenario]]
name = "short"
start_mm = [110.0, 0.0, -30.0]
[[scenario.phase]]
name = "down"
kind = "stand"
mode = "rigid"
duration_ms = 100.0
target_mm = [110.0, 0.0, -52.0]
"#;
        let cfg = Config::parse(text).unwrap();
        let s = cfg.scenario("short").unwrap();
        assert_eq!(s.phases.len(), 1);
        assert_eq!(s.dt_ms, 5.0);
        assert!(cfg.scenario("fig10c").is_ok());
        assert_eq!(cfg.scenario("nope"), Err(Error::UnknownScenario("nope".into())));
    }
}
