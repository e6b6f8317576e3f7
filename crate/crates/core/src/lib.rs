//! Geometry kernel for biconservative and biharmonic hypersurfaces.
//!
//! `no_std` with `alloc`. IO, file formats and the command line live in the
//! companion `biconserv` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod catalog;
pub mod chart;
pub mod error;
pub mod expr;
pub mod graph_lab;
pub mod jet;
pub mod kernel;
pub mod linalg;
pub mod evolve;
pub mod ode;
pub mod quad;
pub mod report;
pub mod surfaces;
pub mod verify;

pub use error::{Error, Result};
