#![no_main]

use comonotone::experiments::parse_n_list;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(ns) = parse_n_list(text) {
            let joined = ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",");
            assert_eq!(parse_n_list(&joined).expect("joined list parses"), ns);
        }
    }
});
