// Forward kinematics of the 4-joint leg and a damped least-squares solve back.

use tarsim::leg::{forward_kinematics, inverse_kinematics, IkParams, JointVector, LegModel};

pub fn run_example() -> tarsim::Result<()> {
    let model = LegModel::default();
    let q = JointVector::from_degrees([15.0, -30.0, 60.0, -45.0]);
    let tip = forward_kinematics(&model, &q).position;
    println!("tip at ({:.3}, {:.3}, {:.3}) mm", tip.x, tip.y, tip.z);

    // cold start from the zero pose
    let sol = inverse_kinematics(&model, &tip, &JointVector::default(), &IkParams::default())?;
    let back = forward_kinematics(&model, &sol.q).position;
    println!(
        "ik: {} iterations, residual {:.1e} mm, joints {:?} deg",
        sol.iterations,
        (back - tip).norm(),
        sol.q.to_degrees().map(|d| (d * 10.0).round() / 10.0)
    );
    Ok(())
}

fn main() -> tarsim::Result<()> {
    run_example()
}
