#![no_main]

use libfuzzer_sys::fuzz_target;
use resolvix::forcing::{parse_schedule, write_schedule};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(s) = parse_schedule(src) {
        let back = parse_schedule(&write_schedule(&s)).expect("printed schedule parses");
        assert_eq!(back, s);
    }
});
