#![no_main]

use libfuzzer_sys::fuzz_target;
use phosdyn::config::parse_kv;
use phosdyn::integrate::SolverConfig;
use phosdyn::ModelParams;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(file) = parse_kv(text, "fuzz") else { return };
    let _ = SolverConfig::from_kv(&file);
    if let Ok(p) = ModelParams::from_kv(&file) {
        // accepted parameters survive a write and re-read unchanged
        let back = ModelParams::parse_config(&p.to_config_string(), "rt").expect("written config parses");
        assert_eq!(p, back);
    }
});
