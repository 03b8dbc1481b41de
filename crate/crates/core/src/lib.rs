//! Weighted operator means, Young-type refinement series, and numeric
//! Loewner-order certification of their refinement and reverse inequalities.
//!
//! The crate is layered bottom-up:
//!
//! - [`scalar_young`]: the scalar Young refinements and reverses together with
//!   the dyadic coefficient schedules that drive the `S_N` series. These are the
//!   ground truth that operator code is cross-checked against on commuting
//!   (diagonal) inputs.
//! - [`matspd`]: Hermitian positive-definite matrices, fractional powers, the
//!   weighted arithmetic / geometric / harmonic means, Loewner-order slack
//!   reports and seeded random instance generation.
//! - [`refinements`]: operator-level Young refinements (Kittaneh-type bounds,
//!   the `S_N` refinement series and their `N = 2` closed forms).
//! - [`posmaps`]: positive linear maps, Ando's inequality and its reverses.
//! - [`hm`]: inner-product (Hoelder-McCarthy) chains.
//! - [`apps`]: Hoelder / Cauchy-Schwarz difference reverses, the power-mean
//!   concavity reverse, Tsallis relative operator entropy and
//!   epsilon-regularized geometric means of singular operators.
//! - [`harness`] and [`cli`]: seeded batch certification with replayable
//!   JSONL records.
//! - [`variants`]: transposed-weight readings of several bounds that do *not*
//!   hold, kept for counterexample search.

pub mod apps;
pub mod cli;
pub mod error;
pub mod harness;
pub mod hm;
pub mod matspd;
pub mod posmaps;
pub mod refinements;
pub mod scalar_young;
pub mod variants;

pub use error::{Error, Result};
pub use matspd::{HpdMatrix, Mat, SlackReport};
pub use scalar_young::{RefinementSchedule, WeightConstants};
