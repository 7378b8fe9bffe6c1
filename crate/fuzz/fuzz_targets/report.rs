#![no_main]

use helprank::report::{parse_table_csv, read_report_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = read_report_json(text);
        let _ = parse_table_csv("table", text);
    }
});
