//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use rand::{rngs::StdRng, Rng};
use tarsim::leg::{DhRow, JointVector, LegModel};

/// Row-major 4x4 DH product on plain arrays, independent of nalgebra.
pub fn oracle_tip(model: &LegModel, q: &[f64; 4]) -> [f64; 3] {
    fn mul(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
        let mut c = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        c
    }
    let rz = |t: f64| {
        let (s, c) = t.sin_cos();
        [[c, -s, 0.0, 0.0], [s, c, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]
    };
    let rx = |t: f64| {
        let (s, c) = t.sin_cos();
        [[1.0, 0.0, 0.0, 0.0], [0.0, c, -s, 0.0], [0.0, s, c, 0.0], [0.0, 0.0, 0.0, 1.0]]
    };
    let tr = |x: f64, z: f64| {
        [[1.0, 0.0, 0.0, x], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, z], [0.0, 0.0, 0.0, 1.0]]
    };
    let mut acc = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
    for (row, qi) in model.rows().iter().zip(q) {
        acc = mul(&acc, &rz(qi + row.theta_offset));
        acc = mul(&acc, &tr(0.0, row.d));
        acc = mul(&acc, &tr(row.a, 0.0));
        acc = mul(&acc, &rx(row.alpha_twist));
    }
    [acc[0][3], acc[1][3], acc[2][3]]
}

pub fn random_model(rng: &mut StdRng) -> LegModel {
    let rows = std::array::from_fn(|_| {
        DhRow::new(
            rng.gen_range(0.0..80.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-20.0..20.0),
            rng.gen_range(-1.0..1.0),
        )
        .unwrap()
    });
    LegModel::new(rows, [(-3.0, 3.0); 4]).unwrap()
}

pub fn random_q(rng: &mut StdRng, model: &LegModel, margin: f64) -> JointVector {
    JointVector(std::array::from_fn(|i| {
        let (lo, hi) = model.limits()[i];
        rng.gen_range(lo + margin..hi - margin)
    }))
}

/// Tendon pull across one joint, built point by point in the plane.
///
/// The joint centre sits at the origin and the moving anchor starts at
/// `(r, 0)`. The fixed anchor lies `d1` away along the string, which leaves the
/// moving anchor tilted by `atan2(h2, h1)` from the rotation tangent. Rotating
/// the moving anchor by `alpha` and measuring the new span gives the pull.
/// Returns `(chord, span, pull)`.
pub fn geometric_pull(r: f64, h1: f64, h2: f64, d1: f64, alpha: f64) -> (f64, f64, f64) {
    let rot = |(x, y): (f64, f64), a: f64| {
        let (s, c) = a.sin_cos();
        (c * x - s * y, s * x + c * y)
    };
    let p0 = (r, 0.0);
    let tangent = (0.0, 1.0);
    let dir = rot(tangent, h2.atan2(h1));
    let fixed = (p0.0 + d1 * dir.0, p0.1 + d1 * dir.1);
    let p1 = rot(p0, alpha);
    let chord = (p1.0 - p0.0).hypot(p1.1 - p0.1);
    let span = (fixed.0 - p1.0).hypot(fixed.1 - p1.1);
    (chord, span, d1 - span)
}

/// Closed-form Student t survival functions for small degrees of freedom.
pub fn t_sf_closed_form(t: f64, df: u32) -> Option<f64> {
    let x = t / (df as f64 + t * t).sqrt();
    match df {
        1 => Some(0.5 - t.atan() / std::f64::consts::PI),
        2 => Some(0.5 * (1.0 - x)),
        4 => Some(0.5 * (1.0 - x * (1.0 + 0.5 * (1.0 - x * x)))),
        _ => None,
    }
}

/// Demo state right after the claw hooks the mesh in the standing phase, with
/// the hook anchor reset onto the claw so the strand stretch is exactly zero.
pub fn hooked_state(cfg: &tarsim::contact::SimConfig) -> tarsim::contact::SimState {
    use tarsim::contact::*;
    let mut script = Scenario::fig10c();
    script.phases.truncate(2);
    let run = run_demo_cycle(cfg, MeshGrid::robot_default(), &script).unwrap();
    let mut sim = run.final_state.unwrap();
    assert!(matches!(sim.attachment, AttachmentState::Hooked(_)));
    let hook = sim.hook.as_mut().unwrap();
    hook.anchor = nalgebra::Vector2::new(sim.claw_tip.x, sim.claw_tip.y);
    sim
}

/// Command that holds the current pose in the given mode.
pub fn hold(sim: &tarsim::contact::SimState, mode: tarsim::chain::TarsusMode, horizontal_pull: f64) -> tarsim::contact::SimCommand {
    tarsim::contact::SimCommand {
        joint_targets: sim.q,
        mode,
        horizontal_pull,
    }
}
