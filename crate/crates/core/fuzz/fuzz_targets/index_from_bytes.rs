#![no_main]

use libfuzzer_sys::fuzz_target;
use thinkflow::vecstore::VectorIndex;

// The first two bytes give the length of the index.vec part; the rest is
// index.meta.
fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    let split = (u16::from_le_bytes([data[0], data[1]]) as usize).min(data.len() - 2);
    let (vec, meta) = data[2..].split_at(split);
    if let Ok(index) = VectorIndex::from_bytes(vec, meta) {
        let (v, m) = index.to_bytes();
        assert_eq!((v.as_slice(), m.as_slice()), (vec, meta));
    }
});
