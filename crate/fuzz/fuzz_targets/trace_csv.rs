#![no_main]

use conngraph::io::{parse_trace_csv, trace_csv_string};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(rows) = parse_trace_csv(text) else {
        return;
    };
    assert!(rows.windows(2).all(|w| w[0].iteration < w[1].iteration));
    let with_path = rows.iter().any(|r| r.stats.avg_path_length.is_some());
    // Compare serialized forms so NaN cells do not break equality.
    let written = trace_csv_string(&rows, with_path);
    let again = parse_trace_csv(&written).expect("written trace parses");
    assert_eq!(trace_csv_string(&again, with_path), written);
});
