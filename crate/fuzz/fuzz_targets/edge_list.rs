#![no_main]

use conngraph::graph::{Point, SpatialGraph};
use conngraph::io::{edge_list_string, parse_edge_list};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(list) = parse_edge_list(text) else {
        return;
    };
    assert!(list.edges.windows(2).all(|w| w[0] < w[1]));
    assert!(list.edges.iter().all(|&(i, j)| i < j && j < list.nodes));
    // The header can claim any node count; only rebuild small graphs.
    if list.nodes == 0 || list.nodes > 4096 {
        return;
    }
    let g = SpatialGraph::from_edges(vec![Point::new(0.5, 0.5); list.nodes], list.edges.iter().copied())
        .expect("parsed edges are valid");
    let again = parse_edge_list(&edge_list_string(&g)).expect("written edge list parses");
    assert_eq!(again, list);
});
