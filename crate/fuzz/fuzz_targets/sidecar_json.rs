#![no_main]

use libfuzzer_sys::fuzz_target;
use mhdlab::io::parse_sidecar;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(side) = parse_sidecar(s) {
        assert!(side.nx > 0 && side.ny > 0);
        assert!(side.lx > 0.0 && side.ly > 0.0 && side.time.is_finite());
        let text = serde_json::to_string(&side).expect("serializable");
        assert_eq!(parse_sidecar(&text).expect("re-encoded sidecar parses"), side);
    }
});
