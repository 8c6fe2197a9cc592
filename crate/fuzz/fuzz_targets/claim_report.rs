//! Claim ids and reports: a known id round-trips, a parsed report only names known claims.

#![no_main]

use libfuzzer_sys::fuzz_target;
use mhdlab::verify::{claim_ids, parse_claim, parse_report};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(c) = parse_claim(s) {
        assert_eq!(c.id(), s);
    }
    if let Ok(r) = parse_report(s) {
        let ids = claim_ids();
        assert!(r.results.keys().all(|k| ids.contains(k)));
    }
});
