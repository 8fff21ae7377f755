//! Ladder lattice descriptions and their Hamiltonians.
//!
//! A ladder has `N` unit cells, each holding an upper site `a_n` and a lower
//! site `b_n`. Sites are indexed `2n + s` with `s = 0` for the upper leg and
//! `s = 1` for the lower leg. Hoppings carry explicit minus signs:
//!
//! ```text
//! h0 = [[ eps_u, -d    ],      h1 = [[-t, 0 ],      h1_twist = [[0,  -t],
//!       [ -d,    eps_d ]]            [ 0, -t]]                  [-t,  0]]
//! ```
//!
//! with `eps_u = delta/2 + i gamma/2` and `eps_d = -eps_u`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the two ends of the ladder are joined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Ring closed with parallel hoppings (orientable strip).
    CircularPeriodic,
    /// Ring closed with crossed hoppings (Moebius strip).
    MoebiusPeriodic,
    /// Straight ladder with free ends.
    OpenLadder,
    /// Straight ladder with one crossed bond between cells `N/2` and `N/2 + 1`.
    TwistedOpen,
}

impl Topology {
    pub fn is_periodic(self) -> bool {
        matches!(self, Topology::CircularPeriodic | Topology::MoebiusPeriodic)
    }

    pub fn is_twisted(self) -> bool {
        matches!(self, Topology::MoebiusPeriodic | Topology::TwistedOpen)
    }

    /// Short name used in configuration files.
    pub fn key(self) -> &'static str {
        match self {
            Topology::CircularPeriodic => "circular",
            Topology::MoebiusPeriodic => "moebius",
            Topology::OpenLadder => "ladder",
            Topology::TwistedOpen => "twisted",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "circular" | "circular_periodic" | "cll" | "ring" => Ok(Topology::CircularPeriodic),
            "moebius" | "mobius" | "möbius" | "moebius_periodic" | "mll" => {
                Ok(Topology::MoebiusPeriodic)
            }
            "ladder" | "open" | "open_ladder" => Ok(Topology::OpenLadder),
            "twisted" | "twisted_open" | "twisted_ladder" => Ok(Topology::TwistedOpen),
            other => Err(Error::InvalidArgument(format!("unknown topology `{other}`"))),
        }
    }
}

/// Full description of a finite ladder (or of its Bloch counterpart).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Number of unit cells `N`.
    pub n_cells: usize,
    /// Rung hopping `d` inside a unit cell.
    pub intra_hop: f64,
    /// Leg hopping `t` between neighbouring cells.
    pub inter_hop: f64,
    /// Antisymmetric real on-site splitting.
    pub delta: f64,
    /// Balanced gain/loss strength.
    pub gamma: f64,
    pub topology: Topology,
}

impl LatticeSpec {
    /// `d = t = 1` with no on-site potential.
    pub fn new(topology: Topology, n_cells: usize) -> Self {
        LatticeSpec {
            n_cells,
            intra_hop: 1.0,
            inter_hop: 1.0,
            delta: 0.0,
            gamma: 0.0,
            topology,
        }
    }

    pub fn with_hops(mut self, intra_hop: f64, inter_hop: f64) -> Self {
        self.intra_hop = intra_hop;
        self.inter_hop = inter_hop;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let params = [self.intra_hop, self.inter_hop, self.delta, self.gamma];
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidLattice("parameters must be finite".into()));
        }
        let min_cells = if self.topology == Topology::OpenLadder { 1 } else { 2 };
        if self.n_cells < min_cells {
            return Err(Error::InvalidLattice(format!(
                "{} needs at least {min_cells} unit cells, got {}",
                self.topology, self.n_cells
            )));
        }
        if self.topology.is_twisted() && !self.n_cells.is_multiple_of(2) {
            return Err(Error::InvalidLattice(format!(
                "{} needs an even number of unit cells, got {}",
                self.topology, self.n_cells
            )));
        }
        Ok(())
    }

    /// Matrix dimension `2N`.
    pub fn dim(&self) -> usize {
        2 * self.n_cells
    }

    pub fn onsite_upper(&self) -> Complex64 {
        Complex64::new(0.5 * self.delta, 0.5 * self.gamma)
    }

    pub fn onsite_lower(&self) -> Complex64 {
        -self.onsite_upper()
    }

    /// `d^2 + ((delta + i gamma)/2)^2`, the squared half-splitting of a rung.
    pub fn rung_discriminant(&self) -> Complex64 {
        let half = self.onsite_upper();
        Complex64::new(self.intra_hop * self.intra_hop, 0.0) + half * half
    }

    /// Whether the lattice commutes with leg exchange followed by complex conjugation.
    pub fn is_pt_symmetric(&self) -> bool {
        self.delta == 0.0
    }

    /// Index of the bond (between cell `i` and `i + 1`, zero based) that carries the twist.
    pub fn twist_bond(&self) -> Option<usize> {
        (self.topology == Topology::TwistedOpen).then(|| self.n_cells / 2 - 1)
    }
}

/// The three 2x2 blocks a ladder is assembled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitCellBlocks {
    pub h0: Matrix2<Complex64>,
    pub h1: Matrix2<Complex64>,
    pub h1_twist: Matrix2<Complex64>,
}

impl UnitCellBlocks {
    pub fn from_spec(spec: &LatticeSpec) -> Self {
        let d = Complex64::new(-spec.intra_hop, 0.0);
        let t = Complex64::new(-spec.inter_hop, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        UnitCellBlocks {
            h0: Matrix2::new(spec.onsite_upper(), d, d, spec.onsite_lower()),
            h1: Matrix2::new(t, zero, zero, t),
            h1_twist: Matrix2::new(zero, t, t, zero),
        }
    }

    /// Block coupling cell `bond` to cell `bond + 1` for the given lattice.
    pub fn bond(&self, spec: &LatticeSpec, bond: usize) -> Matrix2<Complex64> {
        if spec.twist_bond() == Some(bond) {
            self.h1_twist
        } else {
            self.h1
        }
    }
}

/// Bloch Hamiltonian in vector form, `H(k) = h . sigma + h0(k) I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochPoint {
    pub k: f64,
    /// `(h_x, h_z)`; `h_y` vanishes for this model.
    pub h_vec: [Complex64; 2],
    pub h0_scalar: Complex64,
}

impl BlochPoint {
    pub fn new(spec: &LatticeSpec, k: f64) -> Self {
        BlochPoint {
            k,
            h_vec: [Complex64::new(-spec.intra_hop, 0.0), spec.onsite_upper()],
            h0_scalar: Complex64::new(-2.0 * spec.inter_hop * k.cos(), 0.0),
        }
    }

    pub fn matrix(&self) -> Matrix2<Complex64> {
        let [hx, hz] = self.h_vec;
        let h0 = self.h0_scalar;
        Matrix2::new(h0 + hz, hx, hx, h0 - hz)
    }
}

/// `H(k) = h . sigma + h0(k)` with `h0(k) = -2t cos k`.
pub fn build_bloch_hamiltonian(spec: &LatticeSpec, k: f64) -> Matrix2<Complex64> {
    let band = Complex64::new(-2.0 * spec.inter_hop * k.cos(), 0.0);
    let d = Complex64::new(-spec.intra_hop, 0.0);
    Matrix2::new(
        band + spec.onsite_upper(),
        d,
        d,
        band + spec.onsite_lower(),
    )
}

/// Closed-form Bloch energies `(eps_plus, eps_minus)` using the principal square root.
pub fn bloch_eigenvalues(spec: &LatticeSpec, k: f64) -> (Complex64, Complex64) {
    let band = Complex64::new(-2.0 * spec.inter_hop * k.cos(), 0.0);
    let root = spec.rung_discriminant().sqrt();
    (band + root, band - root)
}

/// Dense `2N x 2N` Hamiltonian in the `(a_1, b_1, ..., a_N, b_N)` basis.
pub fn build_real_space_hamiltonian(spec: &LatticeSpec) -> Result<DMatrix<Complex64>> {
    spec.validate()?;
    let n = spec.n_cells;
    let blocks = UnitCellBlocks::from_spec(spec);
    let mut h = DMatrix::<Complex64>::zeros(2 * n, 2 * n);

    for cell in 0..n {
        add_block(&mut h, cell, cell, &blocks.h0);
    }
    for bond in 0..n.saturating_sub(1) {
        let b = blocks.bond(spec, bond);
        add_block(&mut h, bond, bond + 1, &b);
        add_block(&mut h, bond + 1, bond, &b.transpose());
    }
    let closure = match spec.topology {
        Topology::CircularPeriodic => Some(blocks.h1),
        Topology::MoebiusPeriodic => Some(blocks.h1_twist),
        _ => None,
    };
    if let Some(c) = closure {
        add_block(&mut h, n - 1, 0, &c);
        add_block(&mut h, 0, n - 1, &c.transpose());
    }
    Ok(h)
}

fn add_block(h: &mut DMatrix<Complex64>, row_cell: usize, col_cell: usize, b: &Matrix2<Complex64>) {
    for i in 0..2 {
        for j in 0..2 {
            h[(2 * row_cell + i, 2 * col_cell + j)] += b[(i, j)];
        }
    }
}

/// Parity of a ladder eigenstate under leg exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    /// `u_upper = u_lower`.
    Even,
    /// `u_upper = -u_lower`.
    Odd,
}

/// Closed-form circular-ladder spectrum, `2N` values with parity labels.
pub fn analytic_cll_spectrum(spec: &LatticeSpec) -> Result<Vec<(Complex64, Parity)>> {
    spec.validate()?;
    if spec.topology != Topology::CircularPeriodic {
        return Err(Error::WrongTopology {
            operation: "analytic_cll_spectrum",
            expected: "circular",
            actual: spec.topology,
        });
    }
    let n = spec.n_cells;
    let root = spec.rung_discriminant().sqrt();
    let mut out = Vec::with_capacity(2 * n);
    for m in 1..=n {
        let k = 2.0 * std::f64::consts::PI * m as f64 / n as f64;
        let band = Complex64::new(-2.0 * spec.inter_hop * k.cos(), 0.0);
        out.push((band + root, Parity::Odd));
        out.push((band - root, Parity::Even));
    }
    Ok(out)
}

/// Closed-form Moebius-ladder spectrum. Only defined without on-site potentials.
pub fn analytic_mll_spectrum(spec: &LatticeSpec) -> Result<Vec<(Complex64, Parity)>> {
    spec.validate()?;
    if spec.topology != Topology::MoebiusPeriodic {
        return Err(Error::WrongTopology {
            operation: "analytic_mll_spectrum",
            expected: "moebius",
            actual: spec.topology,
        });
    }
    if spec.gamma != 0.0 || spec.delta != 0.0 {
        return Err(Error::UnsupportedParameters("gamma = 0 and delta = 0"));
    }
    let n = spec.n_cells as f64;
    let (d, t) = (spec.intra_hop, spec.inter_hop);
    let pi = std::f64::consts::PI;
    let mut out = Vec::with_capacity(2 * spec.n_cells);
    for m in 1..=spec.n_cells {
        let m = m as f64;
        let even = -2.0 * t * (2.0 * m * pi / n).cos() - d;
        let odd = -2.0 * t * ((2.0 * m - 1.0) * pi / n).cos() + d;
        out.push((Complex64::new(even, 0.0), Parity::Even));
        out.push((Complex64::new(odd, 0.0), Parity::Odd));
    }
    Ok(out)
}

/// Permutation exchanging the two legs of every cell.
pub fn leg_exchange(index: usize) -> usize {
    index ^ 1
}
