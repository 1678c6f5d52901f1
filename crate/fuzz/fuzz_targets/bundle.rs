#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(b) = omega_cli::bundle::parse_bundle(text) {
            if let Ok(a) = b.action(64) {
                let _ = b.decomposition(&a);
                let _ = b.terms();
            }
        }
    }
});
