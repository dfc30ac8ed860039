#![no_main]

use geo2vec::ingest::{parse_wkt, to_wkt};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(g) = parse_wkt(text) {
        let again = parse_wkt(&to_wkt(&g)).expect("serialized geometry parses");
        assert_eq!(again, g);
    }
});
