//! Fuzzes the experiment-configuration parser.
//!
//! Invariants checked on every input:
//!   - the parser never panics, whatever the bytes;
//!   - any accepted input round-trips: writing the parsed configuration and
//!     parsing it again reproduces the same emitted text (write is a fixed
//!     point after one pass through the parser).

#![no_main]

use libfuzzer_sys::fuzz_target;
use phlab::config::{parse_config, write_config};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_config(text) {
        let emitted = write_config(&cfg);
        let reparsed = parse_config(&emitted).expect("emitted configuration must reparse");
        assert_eq!(
            emitted,
            write_config(&reparsed),
            "write/parse must stabilize after one round trip"
        );
    }
});
