#![no_main]

use libfuzzer_sys::fuzz_target;
use tabulo::format::{format_splits, parse_splits};

fuzz_target!(|data: &[u8]| {
    if let Ok(splits) = parse_splits(data) {
        assert!(splits.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(parse_splits(&format_splits(&splits)).unwrap(), splits);
    }
});
