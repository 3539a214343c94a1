#![no_main]

use libfuzzer_sys::fuzz_target;
use tabulo::report::{parse_report, report_to_string};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = parse_report(data) {
        // re-emitting may round floats; the result must still parse
        let text = report_to_string(&rows);
        let again = parse_report(text.as_bytes()).expect("emitted report parses");
        assert_eq!(again.len(), rows.len());
    }
});
