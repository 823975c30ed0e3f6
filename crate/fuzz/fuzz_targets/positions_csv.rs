#![no_main]

use conngraph::io::{parse_positions_csv, positions_csv_string};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(points) = parse_positions_csv(text) else {
        return;
    };
    assert!(!points.is_empty());
    for p in &points {
        assert!((0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y), "{p:?}");
    }
    let again = parse_positions_csv(&positions_csv_string(&points)).expect("written positions parse");
    assert_eq!(again, points);
});
