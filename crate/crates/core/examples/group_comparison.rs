// Pooled two-sample t-tests from summary statistics.

use tarsim::gait::report::{comparison_report, render_text, ComparisonPair};
use tarsim::gait::stats::GroupStats;

pub fn run_example() -> tarsim::Result<()> {
    let pairs = [
        ComparisonPair::new(
            "cycle time (ms)",
            "rigid",
            GroupStats::new(446.1, 21.3, 5)?,
            "flexible",
            GroupStats::new(406.6, 18.9, 5)?,
        ),
        ComparisonPair::new(
            "bend amplitude (deg)",
            "intact",
            GroupStats::new(55.7, 4.2, 5)?,
            "tubed",
            GroupStats::new(12.4, 3.1, 5)?,
        ),
    ];
    print!("{}", render_text(&comparison_report(&pairs)?));
    Ok(())
}

fn main() -> tarsim::Result<()> {
    run_example()
}
