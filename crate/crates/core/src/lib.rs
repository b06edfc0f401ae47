//! Numerical toolkit for multi-time correlation functions (MTCs) of open
//! quantum systems.
//!
//! The crate computes MTCs and their underlying bi-probability tables three
//! ways: exactly on a small (possibly composite) Hilbert space, through the
//! quantum regression approximation built on Davies/Redfield/Born
//! propagators, and with the first-order cross-intervention correction that
//! restores detailed balance in thermalization problems.
//!
//! Everything here is `no_std + alloc`; IO, configuration and CSV emission
//! live in the companion CLI crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bath;
pub mod cmatrix;
pub mod eigen;
pub mod error;
pub mod experiments;
pub mod generators;
pub mod opalg;
pub mod oracle;
pub mod perturb;
pub mod quad;
pub mod tolerances;

pub use cmatrix::{CMatrix, C64};
pub use error::{Error, Result};
pub use opalg::{DensityMatrix, HermitianObservable, SuperOperator};
