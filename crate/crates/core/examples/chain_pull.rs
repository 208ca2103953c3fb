// Bend of the calibrated tarsal chain as the string is pulled in.

use tarsim::chain::{solve_bend_from_pull, total_bend_angle, ChainGeometry};

pub fn run_example() -> tarsim::Result<()> {
    let chain = ChainGeometry::calibrated();
    println!(
        "full bend at {:.2} mm pull, all slack taken up at {:.2} mm",
        chain.full_bend_pull(),
        chain.max_pull()
    );
    for pull in [0.0, 1.0, 2.5, 5.5, 9.0, 13.1] {
        let sol = solve_bend_from_pull(&chain, pull)?;
        println!(
            "pull {pull:5.2} mm -> bend {:6.2} deg (saturation {:.3}{})",
            total_bend_angle(&sol.state),
            sol.saturation,
            if sol.clamped { ", clamped" } else { "" }
        );
    }
    Ok(())
}

fn main() -> tarsim::Result<()> {
    run_example()
}
