#![no_main]

use geo2vec::training::{read_embeddings, write_embeddings};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(set) = read_embeddings(data) {
        assert_eq!(write_embeddings(&set).expect("decoded set re-encodes"), data);
    }
});
