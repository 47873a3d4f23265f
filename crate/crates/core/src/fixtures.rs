//! Structures and formulas shipped with the crate.

/// Friends/smokers structure over alice, bob and eve.
pub const FRIENDS: &str = include_str!("../fixtures/friends.facts");
/// The two smoker formulas evaluated on [`FRIENDS`], one per line.
pub const FRIENDS_FORMULAS: &str = include_str!("../fixtures/friends.formulas");
/// Directed path `e(c1,c2), e(c2,c3)`.
pub const PATH: &str = include_str!("../fixtures/path.facts");
pub const PATH_FORMULAS: &str = include_str!("../fixtures/path.formulas");
/// Two constants, one red.
pub const PIGEONHOLE: &str = include_str!("../fixtures/pigeonhole.facts");
pub const PIGEONHOLE_CONSTRAINTS: &str = include_str!("../fixtures/pigeonhole.constraints");
/// Colored complete triangle. Its size-4 world space has 2^28 worlds, so it
/// is only usable for statistics and sampling.
pub const TRIANGLE3: &str = include_str!("../fixtures/triangle3.facts");
pub const TRIANGLE3_CONSTRAINTS: &str = include_str!("../fixtures/triangle3.constraints");

/// The formula in [`PIGEONHOLE_CONSTRAINTS`].
pub const PIGEONHOLE_FORMULA: &str = "exists X, Y: X != Y & r(X) & ~r(Y)";

/// Fixture files by name, as they appear under `fixtures/`.
pub const ALL: &[(&str, &str)] = &[
    ("friends.facts", FRIENDS),
    ("friends.formulas", FRIENDS_FORMULAS),
    ("path.facts", PATH),
    ("path.formulas", PATH_FORMULAS),
    ("pigeonhole.facts", PIGEONHOLE),
    ("pigeonhole.constraints", PIGEONHOLE_CONSTRAINTS),
    ("triangle3.facts", TRIANGLE3),
    ("triangle3.constraints", TRIANGLE3_CONSTRAINTS),
];
