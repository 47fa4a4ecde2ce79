#![no_main]

use libfuzzer_sys::fuzz_target;
use qmv::circuit::{circuit_to_json, parse_circuit};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // anything accepted must survive a round trip unchanged
    if let Ok(c) = parse_circuit(text) {
        let canon = circuit_to_json(&c);
        let back = parse_circuit(&canon).expect("canonical form parses");
        assert_eq!(circuit_to_json(&back), canon);
    }
});
