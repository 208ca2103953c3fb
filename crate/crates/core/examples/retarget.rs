// Scale a small recorded claw path up to robot size and track it with the leg.

use nalgebra::Vector3;
use tarsim::leg::{
    retarget_trajectory, trajectory_to_joints, JointTrackOptions, JointVector, LegModel, Retarget, Trajectory,
};

pub fn run_example() -> tarsim::Result<()> {
    // one step of a beetle claw, in mm, sampled every 10 ms
    let path = (0..=20).map(|k| {
        let s = k as f64 / 20.0;
        Vector3::new(4.0 * s, 0.0, 1.5 * (std::f64::consts::PI * s).sin())
    });
    let beetle = Trajectory::uniform(10.0, path)?;
    let retarget = Retarget {
        placement: Some(Vector3::new(110.0, 0.0, -40.0)),
        ..Retarget::default()
    };
    let robot = retarget_trajectory(&beetle, &retarget)?;
    let joints = trajectory_to_joints(&LegModel::default(), &robot, &JointVector::default(), &JointTrackOptions::default())?;
    for (p, j) in robot.samples().iter().zip(&joints).step_by(5) {
        println!(
            "t {:5.1} ms  tip ({:6.1}, {:4.1}, {:6.1})  q {:?}",
            p.t,
            p.p.x,
            p.p.y,
            p.p.z,
            j.q.to_degrees().map(|d| d.round())
        );
    }
    Ok(())
}

fn main() -> tarsim::Result<()> {
    run_example()
}
