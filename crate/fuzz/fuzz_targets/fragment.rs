#![no_main]

use libfuzzer_sys::fuzz_target;
use resolvix::forcing::parse_fragment;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(f) = parse_fragment(src) {
        let text = f.to_text();
        let back = parse_fragment(&text).expect("printed fragment parses");
        assert_eq!(back.to_text(), text);
    }
});
