//! Pseudo-spectral simulation of strain dynamics on the periodic box.
//!
//! The crate evolves the strain self-amplification model equation
//! `∂t S = νΔS − ⅔ P_st(S²)`, the full Navier–Stokes strain equation, and
//! the velocity form of Navier–Stokes, and computes the functionals that
//! control enstrophy growth and finite-time blowup along those runs.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod initdata;
pub mod operators;
pub mod oracle;
pub mod spectral;
pub mod verify;

pub use diagnostics::DiagnosticsRecord;
pub use dynamics::{BlowupReport, Equation, Outcome, SimParams, StrainState};
pub use error::{Error, Result};
pub use initdata::{InitKind, InitSpec};
pub use spectral::{Axis, Grid, GridSpec};

#[cfg(test)]
pub(crate) mod testing;
