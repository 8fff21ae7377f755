//! Complex-angle rotation of the two-leg basis.
//!
//! A rotation `U(theta) = [[cos, -sin], [sin, cos]]` with complex `theta`
//! removes the rung coupling of `h0` when `cot 2 theta = (delta + i gamma) / 2d`.
//! For complex angles `U` is complex orthogonal, so the similarity transform is
//! `U H U^T`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    bloch_eigenvalues, build_bloch_hamiltonian, build_real_space_hamiltonian, LatticeSpec, Topology,
};

/// `theta = theta_r + i theta_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationAngle {
    pub theta_r: f64,
    pub theta_i: f64,
}

impl RotationAngle {
    pub fn new(theta_r: f64, theta_i: f64) -> Self {
        RotationAngle { theta_r, theta_i }
    }

    pub fn real(theta: f64) -> Self {
        RotationAngle::new(theta, 0.0)
    }

    pub fn theta(&self) -> Complex64 {
        Complex64::new(self.theta_r, self.theta_i)
    }

    /// `cot 2 theta`.
    pub fn cot_double(&self) -> Complex64 {
        let two = self.theta() * 2.0;
        two.cos() / two.sin()
    }
}

/// Which side of the rung exceptional point the parameters sit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `delta = 0`, `gamma < 2d`: `theta_r = pi/4`.
    Unbroken,
    /// `delta = 0`, `gamma > 2d`: `theta_r = 0`.
    Broken,
    /// `delta != 0`: no exceptional point; principal `arccot`.
    General,
}

impl Regime {
    fn name(self) -> &'static str {
        match self {
            Regime::Unbroken => "unbroken",
            Regime::Broken => "broken",
            Regime::General => "general",
        }
    }
}

/// Regime implied by the rung parameters.
pub fn regime(d: f64, delta: f64, gamma: f64) -> Result<Regime> {
    if d == 0.0 || !d.is_finite() || !delta.is_finite() || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "rotation needs finite parameters and d != 0 (d = {d})"
        )));
    }
    if delta != 0.0 {
        return Ok(Regime::General);
    }
    let g = (gamma / (2.0 * d)).abs();
    if g == 1.0 {
        Err(Error::SingularAngle { d, gamma })
    } else if g < 1.0 {
        Ok(Regime::Unbroken)
    } else {
        Ok(Regime::Broken)
    }
}

/// Angle solving `cot 2 theta = (delta + i gamma) / 2d`, principal branch.
///
/// With `delta = 0` and `g = gamma / 2d`:
/// unbroken `theta = pi/4 - (i/2) atanh g`, broken `theta = -(i/2) acoth g`.
pub fn complex_rotation_angle(d: f64, delta: f64, gamma: f64, regime_hint: Option<Regime>) -> Result<RotationAngle> {
    let actual = regime(d, delta, gamma)?;
    if let Some(requested) = regime_hint {
        if requested != actual {
            return Err(Error::RegimeMismatch {
                requested: requested.name(),
                actual: actual.name(),
            });
        }
    }
    let g = gamma / (2.0 * d);
    let angle = match actual {
        Regime::Unbroken => RotationAngle::new(FRAC_PI_4, -0.5 * g.atanh()),
        Regime::Broken => RotationAngle::new(0.0, -0.5 * (1.0 / g).atanh()),
        Regime::General => {
            let z = Complex64::new(delta, gamma) / (2.0 * d);
            let two = Complex64::new(FRAC_PI_2, 0.0) - z.atan();
            RotationAngle::new(0.5 * two.re, 0.5 * two.im)
        }
    };
    Ok(angle)
}

/// `[[cos theta, -sin theta], [sin theta, cos theta]]`.
pub fn rotation_matrix(theta: RotationAngle) -> Matrix2<Complex64> {
    let t = theta.theta();
    let (c, s) = (t.cos(), t.sin());
    Matrix2::new(c, -s, s, c)
}

/// Rung coupling left after rotating `h0` by `theta`:
/// `((delta + i gamma)/2) sin 2 theta - d cos 2 theta`.
pub fn coupling_term(theta: RotationAngle, d: f64, delta: f64, gamma: f64) -> Complex64 {
    let two = theta.theta() * 2.0;
    Complex64::new(0.5 * delta, 0.5 * gamma) * two.sin() - d * two.cos()
}

/// Rotates the Bloch Hamiltonian to diagonal form, `(eps_minus, eps_plus)` on the diagonal.
///
/// The returned angle differs from [`complex_rotation_angle`] by `pi/2` when
/// that is needed to put `eps_minus` first.
pub fn diagonalize_by_rotation(spec: &LatticeSpec, k: f64) -> Result<(Matrix2<Complex64>, RotationAngle)> {
    let base = complex_rotation_angle(spec.intra_hop, spec.delta, spec.gamma, None)?;
    let h = build_bloch_hamiltonian(spec, k);
    let (_, eps_minus) = bloch_eigenvalues(spec, k);

    let flipped = RotationAngle::new(
        if base.theta_r > 0.0 { base.theta_r - FRAC_PI_2 } else { base.theta_r + FRAC_PI_2 },
        base.theta_i,
    );
    let transform = |a: RotationAngle| {
        let u = rotation_matrix(a);
        u * h * u.transpose()
    };
    let d0 = transform(base);
    let d1 = transform(flipped);
    let (mut out, angle) = if (d0[(0, 0)] - eps_minus).norm() <= (d1[(0, 0)] - eps_minus).norm() {
        (d0, base)
    } else {
        (d1, flipped)
    };
    let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
    for (i, j) in [(0, 1), (1, 0)] {
        if out[(i, j)].norm() <= 1e-10 * scale {
            out[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok((out, angle))
}

/// Leg occupations of a state, before and after rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeWeights {
    /// Upper-leg weight `|alpha|^2`.
    pub alpha_sq: f64,
    pub beta_sq: f64,
    /// Weight on the first rotated mode, relative to the rotated norm.
    pub alpha_theta_sq: f64,
    pub beta_theta_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeWeightReport {
    /// `None` for cells the state does not occupy.
    pub per_cell: Vec<Option<ModeWeights>>,
    /// Sums over cells.
    pub aggregate: ModeWeights,
}

/// Site-basis and rotated-basis weights of a unit-norm ladder state.
///
/// Each cell amplitude `(a_n, b_n)` is mapped to `U(theta) (a_n, b_n)`, the
/// coordinates in which `U H U^T` is written. Because `U` is not unitary for
/// complex `theta`, rotated weights are normalized by the rotated norm.
pub fn mode_weights(state: &[Complex64], spec: &LatticeSpec, theta: RotationAngle) -> Result<ModeWeightReport> {
    if state.len() != spec.dim() {
        return Err(Error::InvalidArgument(format!(
            "state has length {}, lattice needs {}",
            state.len(),
            spec.dim()
        )));
    }
    let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(norm));
    }
    let u = rotation_matrix(theta);
    let mut per_cell = Vec::with_capacity(spec.n_cells);
    let (mut sa, mut sb, mut sf, mut sp) = (0.0, 0.0, 0.0, 0.0);
    for cell in state.chunks_exact(2) {
        let (a, b) = (cell[0], cell[1]);
        let f = u[(0, 0)] * a + u[(0, 1)] * b;
        let p = u[(1, 0)] * a + u[(1, 1)] * b;
        let (wa, wb, wf, wp) = (a.norm_sqr(), b.norm_sqr(), f.norm_sqr(), p.norm_sqr());
        sa += wa;
        sb += wb;
        sf += wf;
        sp += wp;
        per_cell.push((wa + wb > 0.0).then(|| ModeWeights {
            alpha_sq: wa / (wa + wb),
            beta_sq: wb / (wa + wb),
            alpha_theta_sq: wf / (wf + wp),
            beta_theta_sq: wp / (wf + wp),
        }));
    }
    Ok(ModeWeightReport {
        per_cell,
        aggregate: ModeWeights {
            alpha_sq: sa,
            beta_sq: sb,
            alpha_theta_sq: sf / (sf + sp),
            beta_theta_sq: sp / (sf + sp),
        },
    })
}

/// Ladder parameters in the `(f_n, p_n)` basis, `f = (a - b)/sqrt 2`, `p = (a + b)/sqrt 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetangledChainPair {
    pub f_onsite: Complex64,
    pub p_onsite: Complex64,
    /// On-site coupling between the two chains.
    pub cross_coupling: Complex64,
    pub chain_hop: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetangledLattice {
    pub chains: DetangledChainPair,
    /// Hamiltonian in the `(f_1, p_1, ..., f_N, p_N)` basis.
    pub matrix: DMatrix<Complex64>,
}

/// Rewrites a straight ladder as two chains coupled only through the on-site potential.
pub fn detangle_transform(spec: &LatticeSpec) -> Result<DetangledLattice> {
    spec.validate()?;
    if spec.topology != Topology::OpenLadder {
        return Err(Error::WrongTopology {
            operation: "detangle_transform",
            expected: "ladder",
            actual: spec.topology,
        });
    }
    let h = build_real_space_hamiltonian(spec)?;
    let u = rotation_matrix(RotationAngle::real(FRAC_PI_4));
    let n = spec.n_cells;
    let mut ub = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    for cell in 0..n {
        for i in 0..2 {
            for j in 0..2 {
                ub[(2 * cell + i, 2 * cell + j)] = u[(i, j)];
            }
        }
    }
    let mut matrix = &ub * h * ub.transpose();
    // the transform is exact; clear rounding left on structurally zero entries
    for z in matrix.iter_mut() {
        if z.re.abs() < 1e-15 {
            z.re = 0.0;
        }
        if z.im.abs() < 1e-15 {
            z.im = 0.0;
        }
    }
    let chains = DetangledChainPair {
        f_onsite: Complex64::new(spec.intra_hop, 0.0),
        p_onsite: Complex64::new(-spec.intra_hop, 0.0),
        cross_coupling: spec.onsite_upper(),
        chain_hop: spec.inter_hop,
    };
    Ok(DetangledLattice { chains, matrix })
}
