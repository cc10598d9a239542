mod common;

use common::props;
use proptest::prelude::*;

fn run(check: props::Check, seed: u64) -> Result<(), TestCaseError> {
    check(seed).map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn d_squared_is_zero(seed in any::<u64>()) { run(props::dd_zero, seed)?; }

    #[test]
    fn wedge_is_graded_commutative(seed in any::<u64>()) { run(props::wedge_graded, seed)?; }

    #[test]
    fn d_is_an_antiderivation(seed in any::<u64>()) { run(props::antiderivation, seed)?; }

    #[test]
    fn total_derivatives_commute(seed in any::<u64>()) { run(props::total_derivatives_commute, seed)?; }

    #[test]
    fn null_divergence_leaves_el_unchanged(seed in any::<u64>()) { run(props::null_divergence_invariance, seed)?; }

    #[test]
    fn cyclic_el_is_current_divergence(seed in any::<u64>()) { run(props::noether_identity, seed)?; }

    #[test]
    fn routhian_at_zero_momentum_is_lagrangian(seed in any::<u64>()) { run(props::routhian_at_zero_momentum, seed)?; }

    #[test]
    fn flat_connection_has_no_gyroscopic_force(seed in any::<u64>()) { run(props::flat_gyroscopic_force_vanishes, seed)?; }

    #[test]
    fn printing_round_trips(seed in any::<u64>()) { run(props::print_parse_round_trip, seed)?; }
}
