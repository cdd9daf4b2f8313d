#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Err(errs) = nholo_cli::config::parse_config(text) {
        assert!(!errs.0.is_empty());
    }
});
