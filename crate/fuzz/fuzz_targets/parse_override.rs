#![no_main]

use libfuzzer_sys::fuzz_target;
use qreset::experiment::{apply_overrides, parse_override, scenario_config};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(o) = parse_override(text) {
        let base = scenario_config("fig3c").expect("built-in scenario");
        if let Ok(cfg) = apply_overrides(&base, &[o]) {
            cfg.validate().expect("overridden configs are revalidated");
        }
    }
});
