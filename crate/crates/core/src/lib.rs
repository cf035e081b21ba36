//! Lambda-system formulation of tree-level QED.
//!
//! The crate is split along the physics:
//!
//! * [`units`] and [`lorentz`]: constants, four-vectors, boosts and the
//!   `eta = |P| / P_0` factor; [`kinematics`] builds on-shell Compton and
//!   Møller configurations.
//! * [`dirac`]: gamma matrices, box-normalized Dirac spinors, photon
//!   polarizations and vertex bilinears.
//! * [`dynamics`]: few-level Schrödinger evolution, interaction frame,
//!   second-order averaged Hamiltonian and adiabatic elimination.
//! * [`amplitudes`]: Compton and Møller amplitudes assembled as sums of
//!   three-level transfer amplitudes.
//! * [`vacpol`]: pair-creation energy shift of the exchanged photon and the
//!   first-order corrected Møller amplitude.
//!
//! Everything here is pure computation over immutable values; IO, config
//! files and the command-line driver live in the `qlambda` crate.
#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod amplitudes;
pub mod dirac;
pub mod dynamics;
mod error;
pub mod kinematics;
pub mod linalg;
pub mod lorentz;
pub mod quadrature;
pub mod units;
pub mod vacpol;

pub use error::{Error, Result};
pub use linalg::C64;
pub use lorentz::{Boost, FourVector, ThreeVector};
pub use units::Constants;
