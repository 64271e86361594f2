#![no_main]

use comonotone::partition::PiecewisePolynomial;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(s) = PiecewisePolynomial::from_text(text) {
            let back = PiecewisePolynomial::from_text(&s.to_text()).expect("printed text parses");
            assert_eq!(s, back);
        }
    }
});
