use proptest::prelude::*;
use scatterlab::cells;
use scatterlab::report::{Check, Table};
use scatterlab::scenario::parse_scenario;

proptest! {
    #[test]
    fn float_cells_round_trip_bitwise(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        let mut t = Table::new("x.csv", &["v"]);
        t.row(cells![v]);
        let bytes = t.finish().bytes;
        let mut r = csv::Reader::from_reader(bytes.as_slice());
        let rec = r.records().next().unwrap().unwrap();
        let back: f64 = rec[0].parse().unwrap();
        prop_assert_eq!(back.to_bits(), v.to_bits());
    }

    #[test]
    fn at_most_agrees_with_comparison(v in -1e3f64..1e3, limit in -1e3f64..1e3) {
        prop_assert_eq!(Check::at_most("c", v, limit).pass, v <= limit);
        prop_assert_eq!(Check::at_least("c", v, limit).pass, v >= limit);
    }

    #[test]
    fn resolved_echo_reparses_to_the_same_scenario(
        masses in proptest::collection::vec(0.1f64..10.0, 3..5),
        gamma in 1.1f64..3.0,
        seed in any::<u64>(),
    ) {
        let list = masses.iter().map(|m| format!("{m:?}")).collect::<Vec<_>>().join(", ");
        let text = format!(
            "schema = 1\nname = \"p\"\nseed = {seed}\n[partition]\ngamma = {gamma:?}\ncases = [{{ masses = [{list}], dim = 3 }}]\n"
        );
        let first = parse_scenario(&text, true).unwrap().scenario;
        let again = parse_scenario(&first.resolved_toml(), true).unwrap().scenario;
        prop_assert_eq!(first, again);
    }
}

#[test]
fn nan_never_passes() {
    assert!(!Check::at_most("c", f64::NAN, 1.0).pass);
    assert!(!Check::at_least("c", f64::NAN, 1.0).pass);
    assert!(!Check::within("c", f64::NAN, 1.0, 1.0).pass);
}
