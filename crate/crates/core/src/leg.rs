//! Four-joint leg kinematics (coxa, trochanter, femur, tibia).
//!
//! Standard Denavit-Hartenberg convention: joint `i` contributes
//! `Rz(q_i + theta_offset) * Tz(d) * Tx(a) * Rx(alpha_twist)`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix3x4, Matrix4, Rotation3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const JOINT_COUNT: usize = 4;
pub const JOINT_NAMES: [&str; JOINT_COUNT] = ["coxa", "trochanter", "femur", "tibia"];

/// Scale applied to recorded beetle trajectories to fit the robot leg.
pub const DEFAULT_RETARGET_SCALE: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhRow {
    /// Link length (mm).
    pub a: f64,
    /// Link twist (rad).
    pub alpha_twist: f64,
    /// Link offset (mm).
    pub d: f64,
    /// Joint-angle offset (rad).
    pub theta_offset: f64,
}

impl DhRow {
    pub fn new(a: f64, alpha_twist: f64, d: f64, theta_offset: f64) -> Result<Self> {
        let row = Self {
            a,
            alpha_twist,
            d,
            theta_offset,
        };
        if ![a, alpha_twist, d, theta_offset].iter().all(|v| v.is_finite()) {
            return Err(Error::domain("DH parameters must be finite"));
        }
        if a < 0.0 {
            return Err(Error::domain("DH link length must be nonnegative"));
        }
        Ok(row)
    }

    pub fn transform(&self, q: f64) -> Matrix4<f64> {
        let (st, ct) = (q + self.theta_offset).sin_cos();
        let (sa, ca) = self.alpha_twist.sin_cos();
        Matrix4::new(
            ct, -st * ca, st * sa, self.a * ct,
            st, ct * ca, -ct * sa, self.a * st,
            0.0, sa, ca, self.d,
            0.0, 0.0, 0.0, 1.0,
        )
    }
}

/// Joint angles (rad).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointVector(pub [f64; JOINT_COUNT]);

impl JointVector {
    pub const ZERO: JointVector = JointVector([0.0; JOINT_COUNT]);

    pub fn from_degrees(deg: [f64; JOINT_COUNT]) -> Self {
        JointVector(deg.map(f64::to_radians))
    }

    pub fn to_degrees(self) -> [f64; JOINT_COUNT] {
        self.0.map(f64::to_degrees)
    }

    fn as_vector(&self) -> Vector4<f64> {
        Vector4::from(self.0)
    }

    /// Largest absolute per-joint difference.
    pub fn max_abs_diff(&self, other: &JointVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Tip position and orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub rotation: Rotation3<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegModel {
    rows: [DhRow; JOINT_COUNT],
    limits: [(f64, f64); JOINT_COUNT],
}

impl LegModel {
    pub fn new(rows: [DhRow; JOINT_COUNT], limits: [(f64, f64); JOINT_COUNT]) -> Result<Self> {
        for (i, (lo, hi)) in limits.iter().enumerate() {
            if !(lo < hi) {
                return Err(Error::domain(format!(
                    "joint {} limits must satisfy min < max",
                    JOINT_NAMES[i]
                )));
            }
        }
        for r in &rows {
            DhRow::new(r.a, r.alpha_twist, r.d, r.theta_offset)?;
        }
        Ok(Self { rows, limits })
    }

    pub fn rows(&self) -> &[DhRow; JOINT_COUNT] {
        &self.rows
    }

    pub fn limits(&self) -> &[(f64, f64); JOINT_COUNT] {
        &self.limits
    }

    /// Upper bound on the distance from the base to any reachable tip.
    pub fn reach(&self) -> f64 {
        self.rows.iter().map(|r| r.a + r.d.abs()).sum()
    }

    pub fn within_limits(&self, q: &JointVector) -> bool {
        q.0.iter()
            .zip(&self.limits)
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn clamp(&self, q: &JointVector) -> JointVector {
        let mut out = *q;
        for (v, (lo, hi)) in out.0.iter_mut().zip(&self.limits) {
            *v = v.clamp(*lo, *hi);
        }
        out
    }

    /// Frame transforms `T_0^1 .. T_0^4`.
    fn frames(&self, q: &JointVector) -> [Matrix4<f64>; JOINT_COUNT] {
        let mut acc = Matrix4::identity();
        let mut out = [Matrix4::identity(); JOINT_COUNT];
        for (i, row) in self.rows.iter().enumerate() {
            acc *= row.transform(q.0[i]);
            out[i] = acc;
        }
        out
    }
}

impl Default for LegModel {
    /// Robot-scale leg: a yawing coxa followed by three pitching joints.
    fn default() -> Self {
        let rows = [
            DhRow { a: 10.0, alpha_twist: PI / 2.0, d: 0.0, theta_offset: 0.0 },
            DhRow { a: 20.0, alpha_twist: 0.0, d: 0.0, theta_offset: 0.0 },
            DhRow { a: 60.0, alpha_twist: 0.0, d: 0.0, theta_offset: 0.0 },
            DhRow { a: 80.0, alpha_twist: 0.0, d: 0.0, theta_offset: 0.0 },
        ];
        let deg = |lo: f64, hi: f64| (lo.to_radians(), hi.to_radians());
        let limits = [
            deg(-90.0, 90.0),
            deg(-150.0, 150.0),
            deg(-150.0, 150.0),
            deg(-150.0, 150.0),
        ];
        Self::new(rows, limits).expect("default leg model is valid")
    }
}

pub fn forward_kinematics(model: &LegModel, q: &JointVector) -> Pose {
    let t = model.frames(q)[JOINT_COUNT - 1];
    let position = Vector3::new(t[(0, 3)], t[(1, 3)], t[(2, 3)]);
    let rotation = Rotation3::from_matrix_unchecked(t.fixed_view::<3, 3>(0, 0).into_owned());
    Pose { position, rotation }
}

/// Tip position only.
pub fn tip_position(model: &LegModel, q: &JointVector) -> Vector3<f64> {
    forward_kinematics(model, q).position
}

/// Geometric position Jacobian (mm/rad). Column `i` is `z_{i-1} x (p - o_{i-1})`.
pub fn jacobian(model: &LegModel, q: &JointVector) -> Matrix3x4<f64> {
    let frames = model.frames(q);
    let tip = frames[JOINT_COUNT - 1].fixed_view::<3, 1>(0, 3).into_owned();
    let mut j = Matrix3x4::zeros();
    let mut axis = Vector3::z();
    let mut origin = Vector3::zeros();
    for i in 0..JOINT_COUNT {
        j.set_column(i, &axis.cross(&(tip - origin)));
        axis = frames[i].fixed_view::<3, 1>(0, 2).into_owned();
        origin = frames[i].fixed_view::<3, 1>(0, 3).into_owned();
    }
    j
}

/// Damped least squares parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IkParams {
    pub damping: f64,
    /// Largest per-joint change in one iteration (rad).
    pub max_step: f64,
    /// Convergence threshold on tip position error (mm).
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for IkParams {
    fn default() -> Self {
        Self {
            damping: 1e-3,
            max_step: 0.2,
            tolerance: 1e-6,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSolution {
    pub q: JointVector,
    /// Number of update steps taken; 0 when `q0` already satisfied the target.
    pub iterations: usize,
    pub residual: f64,
}

/// Position-only IK by damped least squares.
///
/// The update `dq = J^T (J J^T + lambda^2 I)^-1 e` is the minimum-norm damped
/// step, which also resolves the one-dimensional redundancy of the 4R leg.
/// Damping adapts Levenberg-style around `params.damping`. A solve that stalls
/// restarts from deterministic seeds spread over the joint-limit box, nearest
/// tip first; all restarts share the `max_iterations` budget.
pub fn inverse_kinematics(
    model: &LegModel,
    target: &Vector3<f64>,
    q0: &JointVector,
    params: &IkParams,
) -> Result<IkSolution> {
    if !target.iter().all(|v| v.is_finite()) {
        return Err(Error::domain("IK target must be finite"));
    }
    if target.norm() > model.reach() {
        return Err(Error::NotReachable {
            best_residual: target.norm() - model.reach(),
            iterations: 0,
        });
    }
    let mut seeds = RestartPool::new(model, target);
    let mut q = model.clamp(q0);
    let mut err = target - tip_position(model, &q);
    let mut residual = err.norm();
    let mut best = (q, residual);
    let mut damping = params.damping;
    let mut window = (0, residual);
    for iteration in 0..params.max_iterations {
        if residual < params.tolerance {
            return Ok(IkSolution {
                q,
                iterations: iteration,
                residual,
            });
        }
        let mut stalled = damping > STALL_DAMPING;
        if iteration - window.0 >= STALL_WINDOW {
            stalled |= residual > (1.0 - STALL_PROGRESS) * window.1;
            window = (iteration, residual);
        }
        if stalled {
            // stuck in a local minimum, usually against a joint limit
            q = seeds.next();
            err = target - tip_position(model, &q);
            residual = err.norm();
            damping = params.damping;
            window = (iteration, residual);
            continue;
        }
        let j = jacobian(model, &q);
        let mut dq = damped_step(model, &q, j, &err, damping * damping);
        let largest = dq.amax();
        if largest > params.max_step {
            dq *= params.max_step / largest;
        }
        let trial = model.clamp(&JointVector((q.as_vector() + dq).into()));
        let taken = trial.as_vector() - q.as_vector();
        let predicted = residual * residual - (err - j * taken).norm_squared();
        let trial_err = target - tip_position(model, &trial);
        let trial_residual = trial_err.norm();
        let actual = residual * residual - trial_residual * trial_residual;
        // Levenberg gain ratio: trust the linear model only where it predicts
        // the actual improvement
        let gain = if predicted > 0.0 { actual / predicted } else { -1.0 };
        if gain > 1e-3 {
            q = trial;
            err = trial_err;
            residual = trial_residual;
            if residual < best.1 {
                best = (q, residual);
            }
        }
        if gain > 0.75 {
            damping = (damping * 0.1).max(params.damping);
        } else if gain < 0.25 {
            damping *= 10.0;
        }
    }
    if best.1 < params.tolerance {
        return Ok(IkSolution {
            q: best.0,
            iterations: params.max_iterations,
            residual: best.1,
        });
    }
    Err(Error::NotReachable {
        best_residual: best.1,
        iterations: params.max_iterations,
    })
}

/// Damping at which a solve is considered stalled and restarted.
const STALL_DAMPING: f64 = 1e4;
/// A solve that improves the residual by less than this fraction over
/// `STALL_WINDOW` iterations is restarted too.
const STALL_PROGRESS: f64 = 0.01;
const STALL_WINDOW: usize = 6;

const RESTART_POOL: usize = 1024;

/// Restart candidates, tried in order of how close their tip already lands to
/// the target. Built on first use so solves that never stall stay cheap.
struct RestartPool<'a> {
    model: &'a LegModel,
    target: Vector3<f64>,
    ranked: Vec<JointVector>,
    next: usize,
}

impl<'a> RestartPool<'a> {
    fn new(model: &'a LegModel, target: &Vector3<f64>) -> Self {
        Self { model, target: *target, ranked: Vec::new(), next: 0 }
    }

    fn next(&mut self) -> JointVector {
        if self.ranked.is_empty() {
            let mut pool: Vec<(f64, JointVector)> = (1..=RESTART_POOL)
                .map(|k| {
                    let q = halton_seed(self.model, k);
                    ((self.target - tip_position(self.model, &q)).norm(), q)
                })
                .collect();
            pool.sort_by(|a, b| a.0.total_cmp(&b.0));
            self.ranked = pool.into_iter().map(|(_, q)| q).collect();
        }
        let q = self.ranked[self.next % self.ranked.len()];
        self.next += 1;
        q
    }
}

/// Deterministic restart point: the `k`-th Halton point in the joint-limit box.
fn halton_seed(model: &LegModel, k: usize) -> JointVector {
    const BASES: [usize; JOINT_COUNT] = [2, 3, 5, 7];
    JointVector(std::array::from_fn(|i| {
        let (mut f, mut r, mut n) = (1.0, 0.0, k);
        while n > 0 {
            f /= BASES[i] as f64;
            r += f * (n % BASES[i]) as f64;
            n /= BASES[i];
        }
        let (lo, hi) = model.limits[i];
        lo + r * (hi - lo)
    }))
}

/// Damped step with joints that are pinned at a limit, and pushed further
/// out, removed from the solve.
fn damped_step(
    model: &LegModel,
    q: &JointVector,
    mut j: Matrix3x4<f64>,
    err: &Vector3<f64>,
    lambda2: f64,
) -> Vector4<f64> {
    let mut dq = Vector4::zeros();
    for _ in 0..=JOINT_COUNT {
        let jjt: Matrix3<f64> = j * j.transpose() + Matrix3::identity() * lambda2;
        let Some(solved) = jjt.cholesky().map(|c| c.solve(err)) else {
            return Vector4::zeros();
        };
        dq = j.transpose() * solved;
        let mut changed = false;
        for i in 0..JOINT_COUNT {
            let (lo, hi) = model.limits[i];
            let pinned = (q.0[i] <= lo && dq[i] < 0.0) || (q.0[i] >= hi && dq[i] > 0.0);
            if pinned && j.column(i).iter().any(|v| *v != 0.0) {
                j.set_column(i, &Vector3::zeros());
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dq
}

/// One timestamped trajectory sample (ms, mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub p: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn new(samples: Vec<TrajectorySample>) -> Result<Self> {
        if let Some(i) = samples.windows(2).position(|w| !(w[1].t > w[0].t)) {
            return Err(Error::domain(format!(
                "trajectory timestamps must be strictly increasing (sample {})",
                i + 1
            )));
        }
        if samples
            .iter()
            .any(|s| !s.t.is_finite() || !s.p.iter().all(|v| v.is_finite()))
        {
            return Err(Error::domain("trajectory samples must be finite"));
        }
        Ok(Self { samples })
    }

    /// Uniformly sampled trajectory starting at `t = 0`.
    pub fn uniform(step_ms: f64, points: impl IntoIterator<Item = Vector3<f64>>) -> Result<Self> {
        Self::new(
            points
                .into_iter()
                .enumerate()
                .map(|(i, p)| TrajectorySample {
                    t: i as f64 * step_ms,
                    p,
                })
                .collect(),
        )
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Index of the first stance touchdown: the first local minimum of height.
    pub fn first_touchdown(&self) -> Option<usize> {
        let s = &self.samples;
        if s.is_empty() {
            return None;
        }
        (1..s.len().saturating_sub(1))
            .find(|&i| s[i].p.z <= s[i - 1].p.z && s[i].p.z < s[i + 1].p.z)
            .or(Some(0))
    }
}

/// Fixed point of the retargeting scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleOrigin {
    FirstTouchdown,
    FirstSample,
    Point(Vector3<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Retarget {
    pub scale: f64,
    pub origin: ScaleOrigin,
    /// Where the scale origin lands in the robot frame; `None` keeps it in place.
    pub placement: Option<Vector3<f64>>,
}

impl Default for Retarget {
    fn default() -> Self {
        Self {
            scale: DEFAULT_RETARGET_SCALE,
            origin: ScaleOrigin::FirstTouchdown,
            placement: None,
        }
    }
}

impl Retarget {
    pub fn with_scale(scale: f64) -> Self {
        Self {
            scale,
            ..Self::default()
        }
    }
}

/// Scales a recorded trajectory about an origin; timestamps are preserved.
pub fn retarget_trajectory(beetle: &Trajectory, retarget: &Retarget) -> Result<Trajectory> {
    if !(retarget.scale > 0.0) || !retarget.scale.is_finite() {
        return Err(Error::domain(format!(
            "retarget scale must be positive, got {}",
            retarget.scale
        )));
    }
    let origin = match retarget.origin {
        ScaleOrigin::Point(p) => p,
        ScaleOrigin::FirstSample => beetle.samples.first().map(|s| s.p).unwrap_or_default(),
        ScaleOrigin::FirstTouchdown => beetle
            .first_touchdown()
            .map(|i| beetle.samples[i].p)
            .unwrap_or_default(),
    };
    let anchor = retarget.placement.unwrap_or(origin);
    let samples = beetle
        .samples
        .iter()
        .map(|s| TrajectorySample {
            t: s.t,
            p: anchor + (s.p - origin) * retarget.scale,
        })
        .collect();
    Ok(Trajectory { samples })
}

/// Options for converting a trajectory into a joint series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointTrackOptions {
    pub ik: IkParams,
    /// Largest allowed joint change between consecutive samples (rad).
    pub continuity_limit: f64,
}

impl Default for JointTrackOptions {
    fn default() -> Self {
        Self {
            ik: IkParams::default(),
            continuity_limit: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSample {
    pub t: f64,
    pub q: JointVector,
}

/// Per-sample IK, warm-started from the previous solution.
pub fn trajectory_to_joints(
    model: &LegModel,
    traj: &Trajectory,
    q0: &JointVector,
    options: &JointTrackOptions,
) -> Result<Vec<JointSample>> {
    let mut out = Vec::with_capacity(traj.len());
    let mut q = *q0;
    for (index, sample) in traj.samples.iter().enumerate() {
        let sol = inverse_kinematics(model, &sample.p, &q, &options.ik).map_err(|e| {
            Error::TrajectorySample {
                index,
                source: Box::new(e),
            }
        })?;
        if index > 0 {
            let step = sol.q.max_abs_diff(&q);
            if step > options.continuity_limit {
                return Err(Error::ContinuityViolation {
                    index,
                    step,
                    limit: options.continuity_limit,
                });
            }
        }
        q = sol.q;
        out.push(JointSample { t: sample.t, q });
    }
    Ok(out)
}

/// Zero-order hold of a joint series with sequential servo updates.
///
/// Joint `j` latches a new value at `t0 + j * period / 4 + k * period`, which
/// mimics servos refreshed one after another within each update period.
pub fn quantize_joint_series(series: &[JointSample], period_ms: f64) -> Result<Vec<JointSample>> {
    if !(period_ms > 0.0) {
        return Err(Error::domain("hold period must be positive"));
    }
    let Some(first) = series.first() else {
        return Ok(Vec::new());
    };
    let t0 = first.t;
    let mut held = first.q;
    let mut next_update: [f64; JOINT_COUNT] =
        std::array::from_fn(|j| t0 + j as f64 * period_ms / JOINT_COUNT as f64);
    let mut out = Vec::with_capacity(series.len());
    for s in series {
        for j in 0..JOINT_COUNT {
            if s.t >= next_update[j] {
                held.0[j] = s.q.0[j];
                while next_update[j] <= s.t {
                    next_update[j] += period_ms;
                }
            }
        }
        out.push(JointSample { t: s.t, q: held });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_chain_tip() {
        let rows = [
            DhRow::new(10.0, 0.0, 1.0, 0.0).unwrap(),
            DhRow::new(20.0, 0.0, 2.0, 0.0).unwrap(),
            DhRow::new(30.0, 0.0, 0.5, 0.0).unwrap(),
            DhRow::new(40.0, 0.0, 0.0, 0.0).unwrap(),
        ];
        let m = LegModel::new(rows, [(-PI, PI); 4]).unwrap();
        let p = tip_position(&m, &JointVector::ZERO);
        assert!((p - Vector3::new(100.0, 0.0, 3.5)).norm() < 1e-12);
    }

    #[test]
    fn revolute_periodicity() {
        let m = LegModel::default();
        let q = JointVector([0.3, -0.7, 1.1, 0.4]);
        for j in 0..JOINT_COUNT {
            let mut q2 = q;
            q2.0[j] += 2.0 * PI;
            let (a, b) = (forward_kinematics(&m, &q), forward_kinematics(&m, &q2));
            assert!((a.position - b.position).norm() < 1e-12);
            assert!(a.rotation.angle_to(&b.rotation) < 1e-9);
        }
    }

    #[test]
    fn base_column_perpendicular_on_straight_chain() {
        let m = LegModel::default();
        let j = jacobian(&m, &JointVector::ZERO);
        let tip = tip_position(&m, &JointVector::ZERO);
        assert!(j.column(0).dot(&tip).abs() < 1e-9);
    }

    #[test]
    fn zero_length_chain_has_zero_jacobian() {
        let rows = [DhRow::new(0.0, 0.3, 0.0, 0.0).unwrap(); 4];
        let m = LegModel::new(rows, [(-PI, PI); 4]).unwrap();
        let j = jacobian(&m, &JointVector([0.1, 0.2, 0.3, 0.4]));
        assert_eq!(j, Matrix3x4::zeros());
    }

    #[test]
    fn ik_already_converged() {
        let m = LegModel::default();
        let q0 = JointVector([0.2, 0.4, -0.8, 0.5]);
        let target = tip_position(&m, &q0);
        let sol = inverse_kinematics(&m, &target, &q0, &IkParams::default()).unwrap();
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.q, q0);
    }

    #[test]
    fn ik_unreachable() {
        let m = LegModel::default();
        let target = Vector3::new(m.reach() + 1.0, 0.0, 0.0);
        match inverse_kinematics(&m, &target, &JointVector::ZERO, &IkParams::default()) {
            Err(Error::NotReachable { .. }) => {}
            other => panic!("expected NotReachable, got {other:?}"),
        }
    }

    #[test]
    fn invalid_limits_rejected() {
        let m = LegModel::default();
        let mut limits = *m.limits();
        limits[2] = (1.0, 1.0);
        assert!(LegModel::new(*m.rows(), limits).is_err());
        assert!(DhRow::new(-1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn retarget_linear_map() {
        let t = Trajectory::uniform(10.0, [Vector3::zeros(), Vector3::new(1.0, 2.0, 3.0)]).unwrap();
        let r = Retarget {
            scale: 8.0,
            origin: ScaleOrigin::Point(Vector3::zeros()),
            placement: None,
        };
        let out = retarget_trajectory(&t, &r).unwrap();
        assert_eq!(out.samples()[0].p, Vector3::zeros());
        assert_eq!(out.samples()[1].p, Vector3::new(8.0, 16.0, 24.0));
        assert_eq!(out.samples()[1].t, 10.0);
        assert!(retarget_trajectory(&t, &Retarget::with_scale(0.0)).is_err());
    }

    #[test]
    fn first_touchdown_is_first_local_minimum() {
        let zs = [3.0, 2.0, 1.0, 1.5, 0.5, 2.0];
        let t = Trajectory::uniform(10.0, zs.iter().map(|&z| Vector3::new(0.0, 0.0, z))).unwrap();
        assert_eq!(t.first_touchdown(), Some(2));
    }

    #[test]
    fn trajectory_rejects_unordered_time() {
        let s = |t| TrajectorySample { t, p: Vector3::zeros() };
        assert!(Trajectory::new(vec![s(0.0), s(0.0)]).is_err());
    }

    #[test]
    fn constant_trajectory_gives_constant_joints() {
        let m = LegModel::default();
        let q0 = JointVector([0.1, 0.5, -0.9, 0.6]);
        let p = tip_position(&m, &q0);
        let t = Trajectory::uniform(10.0, std::iter::repeat(p).take(5)).unwrap();
        let js = trajectory_to_joints(&m, &t, &q0, &JointTrackOptions::default()).unwrap();
        assert!(js.iter().all(|s| s.q == q0));
    }

    #[test]
    fn unreachable_sample_reports_index() {
        let m = LegModel::default();
        let q0 = JointVector([0.1, 0.5, -0.9, 0.6]);
        let p = tip_position(&m, &q0);
        let far = Vector3::new(1e4, 0.0, 0.0);
        let t = Trajectory::uniform(10.0, [p, p, far]).unwrap();
        match trajectory_to_joints(&m, &t, &q0, &JointTrackOptions::default()) {
            Err(Error::TrajectorySample { index: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_order_hold_staggers_joints() {
        let series: Vec<JointSample> = (0..8)
            .map(|i| JointSample {
                t: i as f64 * 10.0,
                q: JointVector([i as f64; 4]),
            })
            .collect();
        let held = quantize_joint_series(&series, 40.0).unwrap();
        // joint 0 updates at 0, 40; joint 1 at 10, 50; joint 3 at 30, 70
        assert_eq!(held[3].q.0, [0.0, 1.0, 2.0, 3.0]);
        assert_eq!(held[4].q.0, [4.0, 1.0, 2.0, 3.0]);
        assert_eq!(held[7].q.0, [4.0, 5.0, 6.0, 7.0]);
        assert!(quantize_joint_series(&series, 0.0).is_err());
    }
}
