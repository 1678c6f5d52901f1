#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(f) = omega_core::familycheck::parse_family(text) {
            let _ = omega_core::familycheck::bounded_positivity_check(&f, 0, 3, 10_000);
        }
    }
});
