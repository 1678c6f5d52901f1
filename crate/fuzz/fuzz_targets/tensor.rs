#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(t) = omega_core::tensorbridge::parse_tensor(text) {
            if t.entries().len() <= 4096 {
                let _ = omega_core::tensorbridge::poly_from_tensor(&t);
            }
        }
    }
});
