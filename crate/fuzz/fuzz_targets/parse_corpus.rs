#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(corpus) = lre_core::data::parse_corpus(text) {
            let again = lre_core::data::render_corpus(&corpus);
            assert_eq!(lre_core::data::parse_corpus(&again).unwrap(), corpus);
        }
    }
});
