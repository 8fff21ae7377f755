//! Complex spectra of non-Hermitian ladders.
//!
//! [`eigendecompose`] is the general dense solver. Sweeps over the gain/loss
//! strength, phase classification and exceptional-point location are built on
//! [`GammaFamily`], which lets the same code drive a finite lattice or a single
//! Bloch block.

mod eigen;
mod ep;
mod sweep;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_bloch_hamiltonian, build_real_space_hamiltonian, LatticeSpec};

pub use ep::{
    broken_windows, locate_exceptional_points, BrokenWindow, EpKind, EpReport, EpSearch,
    ExceptionalPoint, NearDegeneracy,
};
pub use sweep::{continue_branches, sweep_spectrum, SweepOptions, SweepResult};

/// Eigenvalues (and optionally right eigenvectors) of one matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    /// Column `j` pairs with `eigenvalues[j]`; unit 2-norm.
    pub right_eigenvectors: Option<DMatrix<Complex64>>,
    pub gamma: Option<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest `||H v_j - lambda_j v_j||` over all columns.
    pub fn max_residual(&self, matrix: &DMatrix<Complex64>) -> Option<f64> {
        let v = self.right_eigenvectors.as_ref()?;
        let hv = matrix * v;
        let worst = self
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(j, &l)| (hv.column(j) - v.column(j) * l).norm())
            .fold(0.0, f64::max);
        Some(worst)
    }
}

/// Lexicographic order on `(re, im)`, used to make every spectrum deterministic.
pub fn energy_order(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Largest distance between matched elements of two equally sized multisets.
///
/// Matching is greedy by distance; `INFINITY` when the sizes differ.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    sweep::greedy_match(a, b, 0.0).max_distance
}

fn sorted_spectrum(values: Vec<Complex64>, vectors: Option<DMatrix<Complex64>>) -> Spectrum {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| energy_order(&values[i], &values[j]));
    let eigenvalues = idx.iter().map(|&i| values[i]).collect();
    let right_eigenvectors = vectors.map(|v| v.select_columns(idx.iter()));
    Spectrum {
        eigenvalues,
        right_eigenvectors,
        gamma: None,
    }
}

/// Full eigendecomposition of a square complex matrix.
///
/// Eigenvalues are returned in `(re, im)` lexicographic order.
pub fn eigendecompose(matrix: &DMatrix<Complex64>, want_vectors: bool) -> Result<Spectrum> {
    let e = eigen::complex_eigen(matrix, want_vectors)?;
    Ok(sorted_spectrum(e.values, e.vectors))
}

/// Eigenvalues only, taking the real-Schur path when the matrix is PT-symmetric.
pub fn eigenvalues(matrix: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let values = if eigen::is_pt_symmetric(matrix, 0.0) {
        eigen::pt_eigenvalues(matrix)?
    } else {
        eigen::complex_eigen(matrix, false)?.values
    };
    Ok(sorted_spectrum(values, None).eigenvalues)
}

/// Spectrum of the real-space Hamiltonian of `spec`.
pub fn lattice_spectrum(spec: &LatticeSpec, want_vectors: bool) -> Result<Spectrum> {
    let h = build_real_space_hamiltonian(spec)?;
    let mut s = if want_vectors {
        eigendecompose(&h, true)?
    } else {
        Spectrum {
            eigenvalues: eigenvalues(&h)?,
            right_eigenvectors: None,
            gamma: None,
        }
    };
    s.gamma = Some(spec.gamma);
    Ok(s)
}

/// A matrix-valued function of the gain/loss strength.
pub trait GammaFamily: Sync {
    fn dim(&self) -> usize;

    fn matrix(&self, gamma: f64) -> Result<DMatrix<Complex64>>;

    fn eigenvalues(&self, gamma: f64) -> Result<Vec<Complex64>> {
        eigenvalues(&self.matrix(gamma)?)
    }
}

impl GammaFamily for LatticeSpec {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn matrix(&self, gamma: f64) -> Result<DMatrix<Complex64>> {
        build_real_space_hamiltonian(&self.with_gamma(gamma))
    }
}

/// The 2x2 Bloch block of `spec` at a fixed wave number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochFamily {
    pub spec: LatticeSpec,
    pub k: f64,
}

impl GammaFamily for BlochFamily {
    fn dim(&self) -> usize {
        2
    }

    fn matrix(&self, gamma: f64) -> Result<DMatrix<Complex64>> {
        let h = build_bloch_hamiltonian(&self.spec.with_gamma(gamma), self.k);
        Ok(DMatrix::from_fn(2, 2, |i, j| h[(i, j)]))
    }
}

/// Whether an eigenvalue is real (unbroken) or part of a conjugate pair (broken).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Unbroken,
    Broken,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseLabel {
    pub variant: Phase,
    /// `|Im e|` of the labelled eigenvalue.
    pub im_magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub labels: Vec<PhaseLabel>,
    pub n_unbroken: usize,
    pub n_broken: usize,
    /// Largest `|Im e|` in the spectrum.
    pub max_im: f64,
}

pub fn classify_pt_phase(spectrum: &Spectrum, tol: f64) -> Result<PhaseSummary> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("phase tolerance must be positive, got {tol}")));
    }
    Ok(classify_values(&spectrum.eigenvalues, tol))
}

pub(crate) fn classify_values(values: &[Complex64], tol: f64) -> PhaseSummary {
    let labels: Vec<PhaseLabel> = values
        .iter()
        .map(|e| PhaseLabel {
            variant: if e.im.abs() <= tol { Phase::Unbroken } else { Phase::Broken },
            im_magnitude: e.im.abs(),
        })
        .collect();
    let n_broken = labels.iter().filter(|l| l.variant == Phase::Broken).count();
    PhaseSummary {
        n_unbroken: labels.len() - n_broken,
        n_broken,
        max_im: labels.iter().map(|l| l.im_magnitude).fold(0.0, f64::max),
        labels,
    }
}
