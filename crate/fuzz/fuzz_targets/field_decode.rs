//! Field decoding: the first two bytes pick the grid shape, the rest is the payload.

#![no_main]

use libfuzzer_sys::fuzz_target;
use mhdlab::io::{decode_field, encode_field, Sidecar};

fuzz_target!(|data: &[u8]| {
    let [a, b, payload @ ..] = data else {
        return;
    };
    let side = Sidecar {
        nx: 1 + (*a as usize % 16),
        ny: 1 + (*b as usize % 16),
        lx: 1.0,
        ly: 1.0,
        name: "n".into(),
        time: 0.0,
    };
    if let Ok(v) = decode_field(payload, &side) {
        assert_eq!(v.len(), side.nx * side.ny);
        assert!(v.iter().all(|x| x.is_finite()));
        assert_eq!(encode_field(&v), payload);
    }
});
