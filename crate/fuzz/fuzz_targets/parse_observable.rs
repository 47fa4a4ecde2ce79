#![no_main]

use libfuzzer_sys::fuzz_target;
use qmv::circuit::{observable_to_json, parse_observable};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(obs) = parse_observable(text) {
        let canon = observable_to_json(&obs);
        let back = parse_observable(&canon).expect("canonical form parses");
        assert_eq!(observable_to_json(&back), canon);
    }
});
