//! Equidistant-state POVM tomography for path-encoded qudits.
//!
//! The crate builds the N²-element POVM obtained from the θ = π family of
//! equidistant states, synthesizes a three-stage interferometer on an N × N
//! waveguide grid that realizes it (sector-wise decomposition, layer-wise cyclic
//! permutation, sector-wise Fourier mesh), propagates single photons through the
//! resulting netlist with or without insertion loss, and reconstructs density
//! matrices from the output statistics by linear inversion.
//!
//! Everything here is pure computation on `alloc` collections; file formats and
//! the command-line front end live in the `tomodit` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod circuit;
pub mod equidistant;
mod error;
pub mod linalg;
pub mod mesh;
pub mod povm;
pub mod random;
pub mod simulator;
pub mod state;
pub mod tomography;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, RMatrix};
pub use num_complex::Complex64;
