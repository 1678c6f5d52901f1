#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = omega_core::polynomial::parse_rational_poly(text);
        if let Ok(json) = serde_json::from_str::<omega_core::polynomial::PolynomialJson>(text) {
            let _ = omega_core::polynomial::FloatPoly::from_json(&json);
        }
    }
});
