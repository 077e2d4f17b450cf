#![no_main]

use libfuzzer_sys::fuzz_target;
use qreset::experiment::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ExperimentConfig::parse(text) {
        let again = cfg.to_toml().expect("valid configs serialize");
        assert_eq!(ExperimentConfig::parse(&again).expect("serialized config parses"), cfg);
    }
});
