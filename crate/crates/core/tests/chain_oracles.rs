use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};
use std::f64::consts::FRAC_PI_2;
use tarsim::chain::*;

mod common;
use common::geometric_pull;

#[test]
fn closed_form_matches_planar_construction() {
    let mut rng = StdRng::seed_from_u64(21);
    for _ in 0..10_000 {
        let g = SegmentGeometry::new(
            rng.gen_range(0.2..10.0),
            rng.gen_range(0.2..6.0),
            rng.gen_range(0.0..4.0),
            rng.gen_range(0.01..FRAC_PI_2 - 0.01),
            rng.gen_range(0.5..25.0),
            0.0,
        )
        .unwrap();
        let alpha = rng.gen_range(0.0..=g.alpha_max);
        let (chord, span, pull) = geometric_pull(g.r, g.h1, g.h2, g.d1, alpha);
        assert!((chord_length(g.r, alpha).unwrap() - chord).abs() < 1e-9);
        assert!((segment_string_span(&g, alpha).unwrap() - span).abs() < 1e-9);
        assert!((segment_pull(&g, alpha).unwrap() - pull).abs() < 1e-9, "{g:?} at {alpha}");
    }
}

#[test]
fn calibrated_chain_constants() {
    let c = ChainGeometry::calibrated();
    assert!((c.full_bend_pull() - 5.5).abs() < 1e-9);
    assert!((total_bend_angle(&c.full_bend_state()) - 65.8).abs() < 1e-9);
    assert!((c.max_pull() - 13.1).abs() < 1e-9);
    let sol = solve_bend_from_pull(&c, c.max_pull() + 1.0).unwrap();
    assert!(sol.clamped);
}

#[test]
fn bend_grows_with_pull() {
    let c = ChainGeometry::calibrated();
    let mut last = -1.0;
    for i in 0..=131 {
        let bend = total_bend_angle(&solve_bend_from_pull(&c, i as f64 * 0.1).unwrap().state);
        assert!(bend >= last);
        last = bend;
    }
}

proptest! {
    #[test]
    fn pull_round_trips_through_bend(frac in 0.0..1.0f64) {
        let c = ChainGeometry::calibrated();
        let pull = frac * c.max_pull();
        let sol = solve_bend_from_pull(&c, pull).unwrap();
        prop_assert!(!sol.clamped);
        prop_assert!((chain_pull(&c, &sol.state).unwrap() - pull).abs() < 1e-9);
        prop_assert!((sol.absorbed_pull - pull).abs() < 1e-9);
    }

    #[test]
    fn saturation_round_trips_through_pull(s in 0.0..=1.0f64) {
        let c = ChainGeometry::calibrated();
        let pull = chain_pull(&c, &c.saturation_state(s)).unwrap();
        let back = solve_bend_from_pull(&c, pull).unwrap();
        prop_assert!((back.saturation - s).abs() < 1e-6);
    }
}
