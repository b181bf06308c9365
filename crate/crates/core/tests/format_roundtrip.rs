mod common;

use std::fs;

use common::strategies::{mission, network, scenario};
use pearl_sim::check::check_file;
use pearl_sim::formats::{
    parse_mission, parse_route_network, parse_scenario, serialize_mission, serialize_route_network, serialize_scenario,
    FormatError,
};
use proptest::prelude::*;

fn located(e: &FormatError) -> bool {
    match e {
        FormatError::RouteNetwork(r, _) => r.line >= 1,
        FormatError::Schema { line, .. } => *line >= 1,
        FormatError::Invalid { path, .. } => !path.is_empty(),
        FormatError::Io { .. } => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn networks_round_trip(net in network()) {
        let text = serialize_route_network(&net);
        let back = parse_route_network(&text).unwrap();
        prop_assert_eq!(&back, &net);
        prop_assert_eq!(serialize_route_network(&back), text);
    }

    #[test]
    fn scenarios_round_trip(s in scenario()) {
        let text = serialize_scenario(&s);
        let back = parse_scenario(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(serialize_scenario(&back), text);
    }

    #[test]
    fn missions_round_trip(m in mission()) {
        let text = serialize_mission(&m);
        let back = parse_mission(&text).unwrap();
        prop_assert_eq!(&back, &m);
    }

    #[test]
    fn serializing_canonicalizes_once(
        coords in prop::collection::vec((-1e4..1e4f64, -1e4..1e4f64), 2..6),
        width in 0.1..10.0f64,
        pad in "[ \t]{0,3}",
    ) {
        let mut text = format!("# free-form input\nsegment s\n{pad}lane a width {width} speed 12.5 # note\n");
        for (i, (x, y)) in coords.iter().enumerate() {
            text.push_str(&format!("wp p{i}{pad} {x:e} {y}\n"));
        }
        text.push_str("end\ncheckpoint c p0\n");
        let once = serialize_route_network(&parse_route_network(&text).unwrap());
        let twice = serialize_route_network(&parse_route_network(&once).unwrap());
        prop_assert_eq!(once, twice);
    }
}

fn rndf_line() -> impl Strategy<Value = String> {
    let word = prop_oneof![
        Just("segment"),
        Just("lane"),
        Just("wp"),
        Just("checkpoint"),
        Just("end"),
        Just("width"),
        Just("speed"),
        Just("-1"),
        Just("0"),
        Just("3.5"),
        Just("nan"),
        Just("a"),
        Just("b"),
        Just("#"),
    ];
    prop::collection::vec(word, 0..6).prop_map(|w| w.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn random_network_text_never_panics(lines in prop::collection::vec(rndf_line(), 0..20)) {
        if let Err(e) = parse_route_network(&lines.join("\n")) {
            prop_assert!(e.line >= 1 && e.line <= lines.len().max(1));
        }
    }

    #[test]
    fn arbitrary_bytes_never_panic(text in "\\PC{0,200}") {
        if let Err(e) = parse_route_network(&text) {
            prop_assert!(e.line >= 1);
        }
        if let Err(e) = parse_scenario(&text) {
            prop_assert!(located(&e), "{e}");
        }
        if let Err(e) = parse_mission(&text) {
            prop_assert!(located(&e), "{e}");
        }
    }

    #[test]
    fn mangled_scenarios_give_located_errors(s in scenario(), cut in any::<prop::sample::Index>()) {
        let text = serialize_scenario(&s);
        let at = cut.index(text.len());
        if let Err(e) = parse_scenario(&text[..at]) {
            prop_assert!(located(&e), "{e}");
        }
    }
}

fn broken(name: &str) -> String {
    match check_file(common::fixture(&format!("broken/{name}"))) {
        Ok(a) => panic!("{name} should not check, got {a}"),
        Err(e) => e.to_string(),
    }
}

#[test]
fn broken_fixtures_point_at_the_problem() {
    let cases = [
        ("bad_keyword.rndf", "line 4"),
        ("dangling_checkpoint.rndf", "line 7"),
        ("short_lane.rndf", "line 6"),
        ("schema_error.json", "objects[0].shape"),
        ("empty.mission.json", "checkpoints"),
    ];
    for (file, needle) in cases {
        let msg = broken(file);
        assert!(msg.contains(file), "{msg}");
        assert!(msg.contains(needle), "{file}: `{msg}` lacks `{needle}`");
    }
    assert!(broken("schema_error.json").contains("line 4"));
}

#[test]
fn every_broken_fixture_is_covered() {
    let n = fs::read_dir(common::fixture("broken")).unwrap().count();
    assert_eq!(n, 5, "add new broken fixtures to broken_fixtures_point_at_the_problem");
}

#[test]
fn shipped_fixtures_check_clean() {
    for name in ["straight.rndf", "urban.rndf", "straight.json", "stop.json", "urban.json", "regression.suite.json"] {
        check_file(common::fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
