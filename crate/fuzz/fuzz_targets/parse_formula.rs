#![no_main]

use libfuzzer_sys::fuzz_target;
use relmarg::logic::parse_formula;

fuzz_target!(|text: &str| {
    if let Ok(f) = parse_formula(text) {
        // the printed form parses back to the same tree
        let printed = f.to_string();
        assert_eq!(parse_formula(&printed).ok().as_ref(), Some(&f), "{printed}");
    }
});
