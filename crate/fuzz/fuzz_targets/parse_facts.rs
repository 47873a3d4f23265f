#![no_main]

use libfuzzer_sys::fuzz_target;
use relmarg::data::GlobalExample;

fuzz_target!(|text: &str| {
    if let Ok(ex) = GlobalExample::parse_facts(text) {
        let again = GlobalExample::parse_facts(&ex.to_facts()).expect("printed facts parse");
        assert_eq!(again.constants(), ex.constants());
        assert_eq!(again.atoms(), ex.atoms());
    }
});
