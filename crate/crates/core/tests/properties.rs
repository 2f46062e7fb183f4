mod common;

use common::oracle::{greedy_open_cover, Open};
use common::props;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn set_cover_solver_matches_enumeration(inst in props::raw_instance()) {
        props::check_raw_setcover(&inst)?;
    }

    #[test]
    fn minimal_subcover_matches_enumeration(case in props::cover_case()) {
        props::check_open_cover(&case)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_loop_traces_replay(x0 in -1.0f64..=1.0, horizon in 1usize..24) {
        props::check_trace_replay(x0, horizon)?;
    }

    #[test]
    fn witnesses_and_coders_round_trip(case in props::artifact_case()) {
        props::check_round_trip(&case)?;
    }

    #[test]
    fn zero_radius_reduces_to_nominal(case in props::artifact_case(), sweep in 2usize..400) {
        props::check_radius_zero(&case, sweep)?;
    }
}

#[test]
fn greedy_oracle_needs_strict_overlap() {
    let touching = [Open { lo: -2.0, hi: 0.0 }, Open { lo: 0.0, hi: 2.0 }];
    assert_eq!(greedy_open_cover(&touching, -1.0, 1.0), None);
    let overlapping = [Open { lo: -2.0, hi: 0.1 }, Open { lo: 0.0, hi: 2.0 }];
    assert_eq!(greedy_open_cover(&overlapping, -1.0, 1.0), Some(2));
}
