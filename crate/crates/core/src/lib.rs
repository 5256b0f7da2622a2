//! Exact computations around the congruence filtration of `SL_n` over
//! `Z[t]` and `Z[t, t^-1]`, its truncated Malcev completions inside
//! `SL_n(Q[T]/T^r)`, and the cohomology of the graded nilpotent Lie algebras
//! `u_l` together with its `SL_n`-module structure.

pub mod cohomology;
pub mod error;
pub mod exact;
pub mod lie;
pub mod rep;
pub mod series;
pub mod verify;

pub use error::{Error, Result};
