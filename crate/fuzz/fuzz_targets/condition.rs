#![no_main]

use libfuzzer_sys::fuzz_target;
use resolvix::forcing::{parse_condition, validate};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(c) = parse_condition(src) {
        // The validator must report, never panic, on arbitrary parsed input.
        let _ = validate(&c);
        let text = c.to_text();
        let back = parse_condition(&text).expect("printed condition parses");
        assert_eq!(back, c);
    }
});
