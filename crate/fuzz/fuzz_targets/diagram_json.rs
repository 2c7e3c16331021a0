#![no_main]

use libfuzzer_sys::fuzz_target;
use phosdyn::continuation::BifurcationDiagram;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(d) = BifurcationDiagram::from_json(text) {
        let _ = d.branches().map(|b| b.to_csv()).count();
        let _ = BifurcationDiagram::from_json(&d.to_json());
    }
});
