#![no_main]

use libfuzzer_sys::fuzz_target;
use qreset::experiment::{parse_initial_preset, QubitPreset};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((qubits, _)) = parse_initial_preset(text) {
        for q in qubits {
            assert_eq!(q.to_string().parse::<QubitPreset>().expect("display parses"), q);
        }
    }
});
