//! Exact relational marginal statistics over small finite domains.
//!
//! Two semantics are provided for the probability of a closed formula in a
//! relational structure:
//!
//! * **Model A** samples a uniformly random `k`-subset of constants and asks
//!   whether the formula holds classically in the induced fragment.
//!   Quantifiers range over the fragment, so non-injective assignments count.
//! * **Model B** samples a uniformly random *injective* grounding of a
//!   universally quantified formula and asks whether the ground body holds.
//!
//! On top of these the crate builds max-entropy models over enumerated world
//! spaces ([`maxent`]), expansions that carry statistics across domain sizes
//! ([`expansion`]), marginal polytopes ([`polytope`]) and the estimation
//! experiments of [`estimation`]. [`verify`] bundles the property suites.

mod combin;
pub mod data;
pub mod error;
pub mod estimation;
pub mod expansion;
pub mod fixtures;
pub mod logic;
pub mod maxent;
pub mod polytope;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use num_rational::BigRational;
