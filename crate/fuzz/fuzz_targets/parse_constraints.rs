#![no_main]

use libfuzzer_sys::fuzz_target;
use relmarg::stats::{parse_constraints, parse_formulas};

fuzz_target!(|text: &str| {
    if let Ok(cs) = parse_constraints(text) {
        for c in &cs {
            assert!((0.0..=1.0).contains(&c.theta.value()));
        }
    }
    let _ = parse_formulas(text);
});
