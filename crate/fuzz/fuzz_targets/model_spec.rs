#![no_main]

use std::str::FromStr;

use comonotone::models::ModelSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = ModelSpec::from_str(text) {
            let back = ModelSpec::from_str(&spec.to_string()).expect("printed spec parses");
            assert_eq!(spec, back);
        }
    }
});
