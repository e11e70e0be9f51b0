#![no_main]

use libfuzzer_sys::fuzz_target;
use resolvix::family::parse_family;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(f) = parse_family(src) {
        let text = f.to_text();
        let back = parse_family(&text).expect("printed family parses");
        assert_eq!(back.to_text(), text);
    }
});
