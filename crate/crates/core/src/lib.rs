//! Driven-dissipative multimode optomechanics: excitation-capped Fock
//! bases, Lindblad steady states, effective vibrational temperatures,
//! power spectral densities and hybrid photonic-mode reductions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod config;
pub mod error;
pub mod hybrid;
pub mod krylov;
pub mod liouvillian;
pub mod model;
pub mod observables;
pub mod preconditioner;
pub mod resolvent;
pub mod runner;
pub mod sparse;
pub mod steadystate;
pub mod validation;

pub use error::{Error, Result};
