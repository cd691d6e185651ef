//! Numerical laboratory for hitting-time logarithm laws on sublevel targets
//! `S_r = {f <= r}` of Lipschitz observables.
//!
//! Systems are iterated exactly: the doubling map through a seeded bit
//! reservoir, toral automorphisms and rotations in fixed point. Estimators
//! are pure functions of their inputs and a master seed.

// `!(x > 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fixed;
pub mod flow;
pub mod hitting;
pub mod mixing;
pub mod observables;
pub mod observed;
pub mod par;
pub mod point;
pub mod reservoir;
pub mod returns;
pub mod rng;
pub mod selftest;
pub mod stats;
pub mod system;

pub use error::{Error, Result};
pub use observables::{Observable, RadiusLadder};
pub use observed::ObservationMap;
pub use point::PhasePoint;
pub use system::SystemSpec;
