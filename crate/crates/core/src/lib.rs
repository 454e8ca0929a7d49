//! Executable fast-rate conditions for statistical and online learning.
//!
//! A [`decision::DecisionProblem`] bundles a loss, a family of data
//! distributions, a finite model and the set of decisions a learner may
//! play. On top of it the crate provides
//!
//! * [`conditions`]: numeric checkers for the central, pseudoprobability
//!   convexity, stochastic mixability, predictor, exp-concavity and JRT
//!   conditions, maximal-η search and Bernstein conversions;
//! * [`momentbounds`]: the κ function, Cramér–Chernoff bounds, the
//!   two-constraint moment problem with its closed-form bound, LP oracle and
//!   dual certificates, and the finite-class rate formulas;
//! * [`learners`]: ERM, the Aggregating Algorithm, online-to-batch
//!   conversion and seeded rate experiments;
//! * [`problems`]: ready-made decision problems with known constants;
//! * [`cli`]: the command-line front end used by the `fastrates` binary.
//!
//! ```
//! use fastrates::{conditions, problems};
//!
//! let recipe = problems::bernoulli_01_at(0.75);
//! let eta = conditions::max_eta(
//!     &recipe.problem,
//!     conditions::ConditionKind::Central,
//!     0.0,
//!     1e-9,
//!     &conditions::SearchFamily::default(),
//! )
//! .unwrap();
//! assert!((eta - 3f64.ln()).abs() < 1e-6);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod conditions;
pub mod decision;
mod error;
pub mod learners;
pub mod momentbounds;
pub mod problems;

pub use error::{Error, Result};
