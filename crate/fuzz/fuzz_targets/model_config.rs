#![no_main]

use conngraph::models::ModelConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = ModelConfig::from_json(text) else {
        return;
    };
    let model = cfg.edge_model().expect("accepted config builds a model");
    let p = model.params();
    assert!(p.q() > 0.0 && p.q() <= 1.0 && p.s() >= 0.0, "{p:?}");
    let again = ModelConfig::from_json(&cfg.to_json()).expect("written config parses");
    assert_eq!(again, cfg);
});
