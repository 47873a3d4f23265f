use relmarg::verify::{run_suites, Fixtures, SUITES};

#[test]
fn every_suite_passes_on_builtin_fixtures() {
    let report = run_suites(SUITES, &Fixtures::builtin()).unwrap();
    for s in &report.suites {
        println!("{:<9} {:>5} {:.2}s", s.suite, s.passed, s.seconds);
        for c in s.checks.iter().filter(|c| !c.passed) {
            println!("  FAILED {}: {}", c.name, c.detail);
        }
    }
    assert!(report.passed, "failed: {:?}", report.failed_suites);
}

#[test]
fn fixture_directory_matches_builtin() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let loaded = Fixtures::load(&dir).unwrap();
    assert_eq!(loaded.friends, Fixtures::builtin().friends);
    assert!(Fixtures::load(&dir.join("missing")).is_err());
}
