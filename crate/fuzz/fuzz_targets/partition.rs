#![no_main]

use libfuzzer_sys::fuzz_target;
use resolvix::partition::parse_partition;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse_partition(src) {
        let back = parse_partition(&p.to_text()).expect("printed partition parses");
        assert_eq!(back, p);
    }
});
