#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(json) = omega_core::decomposition::parse_decomposition(text) {
            let a = omega_core::symmetry::standard::double_edge_free();
            if let Ok(d) = json.to_surd(&a) {
                let _ = d.contract(10_000);
            }
            let _ = json.to_float(&a);
        }
    }
});
