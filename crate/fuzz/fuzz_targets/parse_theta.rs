#![no_main]

use libfuzzer_sys::fuzz_target;
use relmarg::stats::Theta;

fuzz_target!(|text: &str| {
    if let Ok(t) = text.parse::<Theta>() {
        let v = t.value();
        assert!(v.is_finite());
        let _ = t.to_rational();
    }
});
