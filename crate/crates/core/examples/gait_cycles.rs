// Step-cycle segmentation of a synthetic marker recording.

use tarsim::gait::synth::SyntheticGait;
use tarsim::gait::{analyze_trial, CycleParams, Side};

pub fn run_example() -> tarsim::Result<()> {
    for period in [446.1, 406.6] {
        let gait = SyntheticGait::with_period(period);
        let rec = gait.recording()?;
        let m = analyze_trial(&rec, Side::Left, "synthetic", "b1", &CycleParams::default())?;
        println!(
            "period {period} ms: {} cycles, mean {:.2} ms, bend amplitude {:.2} deg",
            m.cycles.len(),
            m.mean_cycle_time,
            m.mean_amplitude
        );
    }
    Ok(())
}

fn main() -> tarsim::Result<()> {
    run_example()
}
