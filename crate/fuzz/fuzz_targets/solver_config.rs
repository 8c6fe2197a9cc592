#![no_main]

use libfuzzer_sys::fuzz_target;
use mhdlab::io::parse_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(c) = parse_config(s) {
            assert!(c.violations().is_empty());
        }
    }
});
