// Hook the claw into the mesh, lift it, then release by going flexible.

use tarsim::contact::{run_demo_cycle, EventKind, MeshGrid, Scenario, SimConfig};

pub fn run_example() -> tarsim::Result<()> {
    let cfg = SimConfig::default();
    for scenario in [Scenario::fig10c(), Scenario::tubed()] {
        let run = run_demo_cycle(&cfg, MeshGrid::robot_default(), &scenario)?;
        println!("{}: {} samples", run.scenario, run.samples.len());
        for e in &run.events {
            println!("  {:7.1} ms  {}", e.t, e.kind.as_str());
        }
        let lifted = run.samples.iter().map(|s| s.mesh_z).fold(f64::NEG_INFINITY, f64::max);
        println!(
            "  mesh peak height {lifted:.2} mm, {} repeat swings",
            run.count(EventKind::RepeatSwing)
        );
    }
    Ok(())
}

fn main() -> tarsim::Result<()> {
    run_example()
}
