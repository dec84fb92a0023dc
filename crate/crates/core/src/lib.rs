//! Exact and Monte Carlo laboratory for tail bounds on suprema of partial
//! sums over finite function classes.
//!
//! Everything that can be exact is exact: spaces, classes, measures and
//! probabilities are [`Rational`]s. Floats appear only in closed-form bound
//! values (rounded up so a reported violation is genuine) and in Monte Carlo.

pub mod bounds;
pub mod caps;
pub mod combinat;
pub mod covering;
pub mod dyadic;
pub mod error;
pub mod halving;
pub mod exact;
pub mod inclusion;
pub mod intro;
pub mod mc;
pub mod report;
pub mod space;
pub mod tail;
pub mod textfmt;
pub mod vc;

pub use error::{Error, Result};
pub use exact::Rational;
