#![no_main]

use libfuzzer_sys::fuzz_target;
use relmarg::logic::Vocabulary;

fuzz_target!(|text: &str| {
    let _ = Vocabulary::parse_spec(text);
});
