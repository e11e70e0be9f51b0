#![no_main]

use libfuzzer_sys::fuzz_target;
use resolvix::order::parse_poset;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse_poset(src) {
        let text = p.to_text();
        let back = parse_poset(&text).expect("printed poset parses");
        assert_eq!(back.to_text(), text);
    }
});
