#![no_main]

use libfuzzer_sys::fuzz_target;
use lgstab::report::Report;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = Report::from_json(text) {
        let again = Report::from_json(&r.to_json()).expect("serialized report parses");
        assert_eq!(again, r);
    }
});
