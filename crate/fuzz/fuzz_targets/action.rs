#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // actions are read against a fixed small complex
        let c = omega_core::symmetry::standard::circle_rotation(4).expect("valid");
        let _ = omega_core::symmetry::parse_action(c.complex(), text, 64);
    }
});
