#![no_main]

use geo2vec::autodecoder::{read_checkpoint, write_checkpoint};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(c) = read_checkpoint(data, None) {
        let bytes = write_checkpoint(&c).expect("decoded checkpoint re-encodes");
        assert_eq!(bytes, data);
    }
});
