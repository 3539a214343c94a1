#![no_main]

use libfuzzer_sys::fuzz_target;
use tabulo::format::{format_entry, parse_entry};

fuzz_target!(|data: &[u8]| {
    if let Ok(entry) = parse_entry(data) {
        assert!(entry.value > 0 && !entry.key.row.is_empty());
        let mut line = Vec::new();
        format_entry(&entry, &mut line);
        let again = parse_entry(line.strip_suffix(b"\n").unwrap_or(&line)).expect("formatted line parses");
        assert_eq!(entry, again);
    }
});
