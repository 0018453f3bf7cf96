use subdiv_core::corpus;
use subdiv_core::format::{basis_to_json, mask_to_json, parse_basis_json, parse_mask_json};

#[test]
fn bundled_masks_round_trip_byte_for_byte() {
    for (name, text) in corpus::MASKS {
        let first = mask_to_json(&parse_mask_json(text).unwrap().mask);
        let second = mask_to_json(&parse_mask_json(&first).unwrap().mask);
        assert_eq!(first, second, "{name}");
    }
    let basis = parse_basis_json(corpus::BIVARIATE_BASIS).unwrap();
    assert_eq!(parse_basis_json(&basis_to_json(&basis)).unwrap(), basis);
}

#[test]
fn shifted_masks_are_normalized() {
    let text = r#"{"s":1,"n":1,"d":1,"entries":[{"index":[-3],"value":[["1/2"]]},{"index":[-2],"value":[["1"]]},{"index":[-1],"value":[["1/2"]]}]}"#;
    let v = parse_mask_json(text).unwrap();
    assert_eq!(v.extent(), 2);
    assert_eq!(v.shift.components(), &[3]);
}

#[test]
fn malformed_masks_are_rejected() {
    for text in [
        r#"{"s":1,"n":1,"d":1,"entries":[]}"#,
        r#"{"s":1,"n":1,"d":1,"entries":[{"index":[0],"value":[["1"]]},{"index":[0],"value":[["2"]]}]}"#,
        r#"{"s":2,"n":1,"d":1,"entries":[{"index":[0],"value":[["1"]]}]}"#,
        r#"{"s":1,"n":2,"d":2,"entries":[{"index":[0],"value":[["1","0"]]}]}"#,
        r#"{"s":1,"n":1,"d":1,"entries":[{"index":[0],"value":[["0.5"]]}]}"#,
        "not json",
    ] {
        assert!(parse_mask_json(text).is_err(), "{text}");
    }
}
