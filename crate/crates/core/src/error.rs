use thiserror::Error;

use crate::lattice::Topology;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("{operation} requires topology {expected}, got {actual:?}")]
    WrongTopology {
        operation: &'static str,
        expected: &'static str,
        actual: Topology,
    },

    #[error("closed form is only defined for {0}")]
    UnsupportedParameters(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "eigensolver did not converge for a {size}x{size} matrix after {iterations} QR sweeps \
         (recent shifts: {shifts:?})"
    )]
    NonConvergence {
        size: usize,
        iterations: usize,
        shifts: Vec<String>,
    },

    #[error("rotation angle is singular at the exceptional point (gamma = {gamma}, d = {d})")]
    SingularAngle { d: f64, gamma: f64 },

    #[error("rotation regime mismatch: requested {requested}, parameters imply {actual}")]
    RegimeMismatch {
        requested: &'static str,
        actual: &'static str,
    },

    #[error("state is not normalized (norm = {0})")]
    NotNormalized(f64),

    #[error("energy {energy} lies outside the lead band |E| < {v0}")]
    OutOfBand { energy: f64, v0: f64 },

    #[error("singular scattering system at energy {energy}: zero pivot in row {row}")]
    Singular { energy: f64, row: usize },
}
