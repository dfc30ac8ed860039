#![no_main]

use geo2vec::ingest::{parse_geojson, to_geojson};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(d) = parse_geojson(text) {
        let again = parse_geojson(&to_geojson(&d)).expect("serialized dataset parses");
        assert_eq!(again.entities(), d.entities());
    }
});
