#![no_main]

use libfuzzer_sys::fuzz_target;
use lgstab::exp_laurent::ExpLaurentPoly;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = ExpLaurentPoly::from_json(text) {
        let again = ExpLaurentPoly::from_json(&p.to_json()).expect("serialized polynomial parses");
        assert_eq!(again, p);
    }
});
