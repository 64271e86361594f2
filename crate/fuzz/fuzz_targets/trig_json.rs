#![no_main]

use comonotone::trig_poly::TrigPolynomial;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(t) = TrigPolynomial::from_json(text) {
            let _ = t.eval(0.5);
        }
    }
});
