//! Simulation of PT-symmetric ladder lattices.
//!
//! Circular, Moebius, straight and twisted ladders with balanced gain and loss:
//! Hamiltonians and closed-form spectra ([`lattice`]), complex spectra and
//! exceptional points ([`spectral`]), the complex-angle rotation and the
//! detangled chain picture ([`rotation`]), and two-terminal transport
//! ([`transport`]).

pub mod error;
pub mod lattice;
pub mod rotation;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};
pub use num_complex::Complex64;
