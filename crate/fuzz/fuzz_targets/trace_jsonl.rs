#![no_main]

use libfuzzer_sys::fuzz_target;
use lrm::TraceSet;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(set) = TraceSet::from_jsonl_str(text) {
        let again = TraceSet::from_jsonl_str(&set.to_jsonl_string()).expect("written traces parse");
        assert_eq!(again.len(), set.len());
    }
});
