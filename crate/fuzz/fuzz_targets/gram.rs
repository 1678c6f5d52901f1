#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(g) = omega_core::positivity::parse_gram(text) {
            if g.dim() <= 64 {
                let _ = g.gram_map();
            }
        }
    }
});
