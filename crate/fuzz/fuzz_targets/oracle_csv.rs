#![no_main]

use conngraph::io::parse_oracle_csv;
use conngraph::oracle::{pair_count, MAX_ORACLE_NODES};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&first, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    let n = usize::from(first) % (MAX_ORACLE_NODES + 2);
    let Ok(dist) = parse_oracle_csv(text, n) else {
        return;
    };
    let slots = pair_count(n);
    for (key, &p) in &dist.masses {
        assert!(key.0 >> slots == 0, "key {} beyond {slots} slots", key.0);
        assert!((0.0..=1.0).contains(&p));
    }
    assert!(dist.total_mass >= 0.0);
});
