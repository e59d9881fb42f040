//! Simulation core for generating two-mode entangled cat states of a cavity
//! pumped by an atom beam.
//!
//! The crate is `no_std` (with `alloc`). Everything here is pure computation
//! on truncated Fock spaces; configuration files, CSV output and the command
//! line live in the companion `catbeam` crate.
#![no_std]
// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dynamics;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod observables;
pub mod oracle;
pub mod protocol;
pub mod space;
pub mod state;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use space::{HilbertSpec, Level, Slot, Space};
pub use state::{DensityMatrix, Operator, StateVector};
