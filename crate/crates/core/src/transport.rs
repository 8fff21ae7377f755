//! Two-terminal scattering through straight and twisted ladders.
//!
//! Semi-infinite leads with hopping `V0/2` attach to the first and last cell.
//! The unknowns are `(r, Psi_1, ..., Psi_N, t)` and satisfy the bordered
//! block-tridiagonal system
//!
//! ```text
//! [ V0/2       G_in^T                        ] [ r   ]   [ -V0/2          ]
//! [ e^{iq}G_in H0-E    H1                    ] [ Psi1]   [ -e^{-iq} G_in  ]
//! [            H1^+    H0-E   H1             ] [ ... ] = [ 0              ]
//! [                    H1^+   H0-E  e^{iq}G_o] [ PsiN]   [ 0              ]
//! [                           G_o^T  V0/2    ] [ t   ]   [ 0              ]
//! ```
//!
//! with `G = -(gamma_u, gamma_d)` and `e^{iq}` the lead phase at energy `E`.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, Topology, UnitCellBlocks};
use crate::spectral::{locate_exceptional_points, EpSearch, ExceptionalPoint};

/// Pivot blocks worse conditioned than this send the solve to dense LU.
pub const PIVOT_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadSpec {
    /// Lead bandwidth parameter; the lead hopping is `v0 / 2`.
    pub v0: f64,
    /// `(gamma_u_in, gamma_d_in, gamma_u_out, gamma_d_out)`.
    pub couplings: [f64; 4],
}

impl Default for LeadSpec {
    fn default() -> Self {
        LeadSpec {
            v0: 10.0,
            couplings: [1.0; 4],
        }
    }
}

impl LeadSpec {
    pub fn symmetric(gamma0: f64) -> Self {
        LeadSpec {
            couplings: [gamma0; 4],
            ..LeadSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v0 > 0.0 && self.v0.is_finite()) {
            return Err(Error::InvalidArgument(format!("v0 must be positive, got {}", self.v0)));
        }
        if self.couplings.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidArgument("lead couplings must be finite".into()));
        }
        Ok(())
    }

    /// `G_in = -(gamma_u_in, gamma_d_in)`.
    pub fn g_in(&self) -> Vector2<Complex64> {
        Vector2::new(c(-self.couplings[0]), c(-self.couplings[1]))
    }

    pub fn g_out(&self) -> Vector2<Complex64> {
        Vector2::new(c(-self.couplings[2]), c(-self.couplings[3]))
    }

    pub fn is_symmetric(&self) -> bool {
        self.couplings.iter().all(|&g| g == self.couplings[0])
    }

    /// Input and output leads exchanged.
    pub fn swapped(&self) -> Self {
        let [a, b, c, d] = self.couplings;
        LeadSpec {
            v0: self.v0,
            couplings: [c, d, a, b],
        }
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `(e^{iq}, e^{-iq})` for a propagating lead mode at energy `e`.
pub fn lead_momentum(e: f64, v0: f64) -> Result<(Complex64, Complex64)> {
    if !e.is_finite() || !(v0 > 0.0) || e.abs() >= v0 {
        return Err(Error::OutOfBand { energy: e, v0 });
    }
    let x = e / v0;
    let s = (1.0 - x * x).sqrt();
    Ok((Complex64::new(-x, s), Complex64::new(-x, -s)))
}

/// The bordered linear system at one energy, stored by blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringSystem {
    pub energy: f64,
    pub v0: f64,
    /// `e^{iq}`.
    pub momentum: Complex64,
    pub g_in: Vector2<Complex64>,
    pub g_out: Vector2<Complex64>,
    /// `H0 - E` for every cell.
    pub diag: Vec<Matrix2<Complex64>>,
    /// Block in row `j`, column `j + 1`.
    pub upper: Vec<Matrix2<Complex64>>,
    /// Block in row `j + 1`, column `j`.
    pub lower: Vec<Matrix2<Complex64>>,
    /// Right-hand side, length `2N + 2`.
    pub rhs: DVector<Complex64>,
}

impl ScatteringSystem {
    pub fn n_cells(&self) -> usize {
        self.diag.len()
    }

    pub fn dimension(&self) -> usize {
        2 * self.n_cells() + 2
    }

    /// Dense matrix of the system in the `(r, Psi_1, ..., Psi_N, t)` ordering.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.n_cells();
        let dim = self.dimension();
        let last = dim - 1;
        let mut a = DMatrix::<Complex64>::zeros(dim, dim);
        let half = c(0.5 * self.v0);
        a[(0, 0)] = half;
        a[(last, last)] = half;
        for s in 0..2 {
            a[(0, 1 + s)] = self.g_in[s];
            a[(1 + s, 0)] = self.momentum * self.g_in[s];
            a[(last, 2 * n - 1 + s)] = self.g_out[s];
            a[(2 * n - 1 + s, last)] = self.momentum * self.g_out[s];
        }
        let mut put = |r: usize, col: usize, b: &Matrix2<Complex64>| {
            for i in 0..2 {
                for j in 0..2 {
                    a[(1 + 2 * r + i, 1 + 2 * col + j)] = b[(i, j)];
                }
            }
        };
        for (j, b) in self.diag.iter().enumerate() {
            put(j, j, b);
        }
        for (j, b) in self.upper.iter().enumerate() {
            put(j, j + 1, b);
        }
        for (j, b) in self.lower.iter().enumerate() {
            put(j + 1, j, b);
        }
        a
    }

    /// `||A x - b|| / ||b||` evaluated block-wise.
    pub fn relative_residual(&self, x: &DVector<Complex64>) -> f64 {
        let n = self.n_cells();
        let last = self.dimension() - 1;
        let half = c(0.5 * self.v0);
        let cell = |j: usize| Vector2::new(x[1 + 2 * j], x[2 + 2 * j]);
        let mut sq = 0.0;
        let top = half * x[0] + self.g_in.dot(&cell(0)) - self.rhs[0];
        sq += top.norm_sqr();
        for j in 0..n {
            let mut v = self.diag[j] * cell(j);
            if j > 0 {
                v += self.lower[j - 1] * cell(j - 1);
            }
            if j + 1 < n {
                v += self.upper[j] * cell(j + 1);
            }
            if j == 0 {
                v += self.g_in * (self.momentum * x[0]);
            }
            if j + 1 == n {
                v += self.g_out * (self.momentum * x[last]);
            }
            for s in 0..2 {
                sq += (v[s] - self.rhs[1 + 2 * j + s]).norm_sqr();
            }
        }
        let bottom = half * x[last] + self.g_out.dot(&cell(n - 1)) - self.rhs[last];
        sq += bottom.norm_sqr();
        sq.sqrt() / self.rhs.norm()
    }
}

fn check_transport_topology(spec: &LatticeSpec, operation: &'static str) -> Result<()> {
    match spec.topology {
        Topology::OpenLadder | Topology::TwistedOpen => Ok(()),
        other => Err(Error::WrongTopology {
            operation,
            expected: "ladder or twisted",
            actual: other,
        }),
    }
}

pub fn assemble_scattering_system(spec: &LatticeSpec, leads: &LeadSpec, e: f64) -> Result<ScatteringSystem> {
    spec.validate()?;
    leads.validate()?;
    check_transport_topology(spec, "assemble_scattering_system")?;
    let (eiq, emiq) = lead_momentum(e, leads.v0)?;
    let n = spec.n_cells;
    let blocks = UnitCellBlocks::from_spec(spec);
    let shifted = blocks.h0 - Matrix2::identity() * c(e);
    let upper: Vec<Matrix2<Complex64>> = (0..n - 1).map(|j| blocks.bond(spec, j)).collect();
    let lower = upper.iter().map(|b| b.adjoint()).collect();

    let g_in = leads.g_in();
    let mut rhs = DVector::<Complex64>::zeros(2 * n + 2);
    rhs[0] = c(-0.5 * leads.v0);
    rhs[1] = -emiq * g_in[0];
    rhs[2] = -emiq * g_in[1];
    Ok(ScatteringSystem {
        energy: e,
        v0: leads.v0,
        momentum: eiq,
        g_in,
        g_out: leads.g_out(),
        diag: vec![shifted; n],
        upper,
        lower,
        rhs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringResult {
    pub r: Complex64,
    pub t: Complex64,
    /// `(Psi_1, ..., Psi_N)` flattened cell by cell.
    pub internal: Vec<Complex64>,
    pub reflection_prob: f64,
    pub transmission_prob: f64,
    /// `1 - |r|^2 - |t|^2`.
    pub flux_residual: f64,
    /// Relative residual of the linear solve.
    pub residual: f64,
    pub dense_fallback: bool,
}

impl ScatteringResult {
    fn from_solution(system: &ScatteringSystem, x: DVector<Complex64>, dense_fallback: bool) -> Self {
        let last = x.len() - 1;
        let (r, t) = (x[0], x[last]);
        let (rp, tp) = (r.norm_sqr(), t.norm_sqr());
        ScatteringResult {
            r,
            t,
            internal: x.as_slice()[1..last].to_vec(),
            reflection_prob: rp,
            transmission_prob: tp,
            flux_residual: 1.0 - rp - tp,
            residual: system.relative_residual(&x),
            dense_fallback,
        }
    }
}

fn inverse2(m: &Matrix2<Complex64>) -> Option<(Matrix2<Complex64>, f64)> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    if det.norm() == 0.0 || !det.norm().is_finite() {
        return None;
    }
    let inv = Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det;
    let norm1 = |a: &Matrix2<Complex64>| {
        (0..2)
            .map(|j| a[(0, j)].norm() + a[(1, j)].norm())
            .fold(0.0, f64::max)
    };
    Some((inv, norm1(m) * norm1(&inv)))
}

/// Block Thomas elimination with the lead unknowns folded into the end cells.
///
/// Falls back to [`solve_scattering_dense`] when a pivot block is singular or
/// has condition number above [`PIVOT_CONDITION_LIMIT`].
pub fn solve_scattering(system: &ScatteringSystem) -> Result<ScatteringResult> {
    match thomas(system) {
        Some(x) => Ok(ScatteringResult::from_solution(system, x, false)),
        None => {
            let x = dense_solution(system)?;
            Ok(ScatteringResult::from_solution(system, x, true))
        }
    }
}

fn thomas(system: &ScatteringSystem) -> Option<DVector<Complex64>> {
    let n = system.n_cells();
    let scale = c(2.0 / system.v0);
    let (gi, go) = (system.g_in, system.g_out);
    let eiq = system.momentum;

    // eliminate r and t: r = -1 - (2/V0) G_in^T Psi_1, t = -(2/V0) G_out^T Psi_N
    let mut diag = system.diag.clone();
    diag[0] -= gi * gi.transpose() * (eiq * scale);
    diag[n - 1] -= go * go.transpose() * (eiq * scale);
    let mut rhs: Vec<Vector2<Complex64>> = (0..n)
        .map(|j| Vector2::new(system.rhs[1 + 2 * j], system.rhs[2 + 2 * j]))
        .collect();
    rhs[0] += gi * eiq;

    let mut inv: Vec<Matrix2<Complex64>> = Vec::with_capacity(n);
    for j in 0..n {
        if j > 0 {
            let l = system.lower[j - 1] * inv[j - 1];
            diag[j] -= l * system.upper[j - 1];
            let prev = rhs[j - 1];
            rhs[j] -= l * prev;
        }
        let (m, cond) = inverse2(&diag[j])?;
        if cond > PIVOT_CONDITION_LIMIT {
            return None;
        }
        inv.push(m);
    }
    let mut psi = vec![Vector2::zeros(); n];
    psi[n - 1] = inv[n - 1] * rhs[n - 1];
    for j in (0..n - 1).rev() {
        psi[j] = inv[j] * (rhs[j] - system.upper[j] * psi[j + 1]);
    }

    let mut x = DVector::<Complex64>::zeros(2 * n + 2);
    x[0] = c(-1.0) - scale * gi.dot(&psi[0]);
    x[2 * n + 1] = -scale * go.dot(&psi[n - 1]);
    for (j, p) in psi.iter().enumerate() {
        x[1 + 2 * j] = p[0];
        x[2 + 2 * j] = p[1];
    }
    Some(x)
}

/// Dense LU with partial pivoting on the full bordered matrix.
pub fn solve_scattering_dense(system: &ScatteringSystem) -> Result<ScatteringResult> {
    let x = dense_solution(system)?;
    Ok(ScatteringResult::from_solution(system, x, true))
}

fn dense_solution(system: &ScatteringSystem) -> Result<DVector<Complex64>> {
    let mut a = system.to_dense();
    let mut b = system.rhs.clone();
    let n = a.nrows();
    let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tiny = f64::EPSILON * norm * n as f64;
    for k in 0..n {
        let (p, big) = (k..n)
            .map(|i| (i, a[(i, k)].norm()))
            .fold((k, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if big <= tiny {
            return Err(Error::Singular {
                energy: system.energy,
                row: k,
            });
        }
        if p != k {
            a.swap_rows(p, k);
            b.swap_rows(p, k);
        }
        let pivot = a[(k, k)];
        for i in k + 1..n {
            let f = a[(i, k)] / pivot;
            if f == c(0.0) {
                continue;
            }
            for j in k..n {
                let v = a[(k, j)];
                a[(i, j)] -= f * v;
            }
            let bk = b[k];
            b[i] -= f * bk;
        }
    }
    let mut x = DVector::<Complex64>::zeros(n);
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= a[(i, j)] * x[j];
        }
        x[i] = s / a[(i, i)];
    }
    Ok(x)
}

/// Assembles and solves in one step.
pub fn scatter(spec: &LatticeSpec, leads: &LeadSpec, e: f64) -> Result<ScatteringResult> {
    solve_scattering(&assemble_scattering_system(spec, leads, e)?)
}

/// Transmission and reflection over an `(E, gamma)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionMap {
    pub e_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    /// `t_values[ie][ig] = |t|^2`; `NaN` marks a failed cell.
    pub t_values: Vec<Vec<f64>>,
    pub r_values: Vec<Vec<f64>>,
    pub failures: usize,
}

impl TransmissionMap {
    /// Cells in row-major order (energy outer, gamma inner).
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.e_grid.iter().enumerate().flat_map(move |(ie, &e)| {
            self.gamma_grid
                .iter()
                .enumerate()
                .map(move |(ig, &g)| (e, g, self.t_values[ie][ig], self.r_values[ie][ig]))
        })
    }

    /// `(max_E T)` for one gamma column, ignoring failed cells.
    pub fn column_max(&self, ig: usize) -> f64 {
        self.t_values
            .iter()
            .map(|row| row[ig])
            .filter(|t| !t.is_nan())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_energies(e_grid: &[f64], leads: &LeadSpec) -> Result<()> {
    if e_grid.is_empty() {
        return Err(Error::InvalidArgument("energy grid is empty".into()));
    }
    for &e in e_grid {
        lead_momentum(e, leads.v0)?;
    }
    Ok(())
}

pub fn transmission_map(
    spec: &LatticeSpec,
    leads: &LeadSpec,
    e_grid: &[f64],
    gamma_grid: &[f64],
) -> Result<TransmissionMap> {
    spec.validate()?;
    leads.validate()?;
    check_transport_topology(spec, "transmission_map")?;
    check_energies(e_grid, leads)?;
    if gamma_grid.is_empty() {
        return Err(Error::InvalidArgument("gamma grid is empty".into()));
    }
    let ng = gamma_grid.len();
    let cells: Vec<(f64, f64)> = (0..e_grid.len() * ng)
        .into_par_iter()
        .map(|idx| {
            let (e, g) = (e_grid[idx / ng], gamma_grid[idx % ng]);
            match scatter(&spec.with_gamma(g), leads, e) {
                Ok(s) if s.transmission_prob.is_finite() => (s.transmission_prob, s.reflection_prob),
                _ => (f64::NAN, f64::NAN),
            }
        })
        .collect();
    let failures = cells.iter().filter(|c| c.0.is_nan()).count();
    let t_values = cells.chunks(ng).map(|row| row.iter().map(|c| c.0).collect()).collect();
    let r_values = cells.chunks(ng).map(|row| row.iter().map(|c| c.1).collect()).collect();
    Ok(TransmissionMap {
        e_grid: e_grid.to_vec(),
        gamma_grid: gamma_grid.to_vec(),
        t_values,
        r_values,
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePeak {
    pub gamma: f64,
    pub transmission: f64,
    /// Closest zero-energy exceptional point, twisted ladders only.
    pub nearest_ep: Option<f64>,
}

impl TracePeak {
    pub fn ep_distance(&self) -> Option<f64> {
        self.nearest_ep.map(|g| (g - self.gamma).abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroEnergyTrace {
    /// `(gamma, |t|^2)`; `NaN` marks a failed point.
    pub points: Vec<(f64, f64)>,
    /// Interior local maxima of the trace.
    pub peaks: Vec<TracePeak>,
    /// Exceptional points with `|Re E*|` inside the zero-energy window.
    pub exceptional_points: Vec<ExceptionalPoint>,
    pub failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// EPs with `|Re E*|` at most this count as zero-energy.
    pub zero_energy_window: f64,
    /// Coarse steps of the EP scan; `None` uses one step per trace interval.
    pub ep_coarse_steps: Option<usize>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            zero_energy_window: 0.05,
            ep_coarse_steps: None,
        }
    }
}

/// `T(E = 0, gamma)` along a grid, with local maxima matched to zero-energy EPs.
pub fn zero_energy_trace(
    spec: &LatticeSpec,
    leads: &LeadSpec,
    gamma_grid: &[f64],
    options: &TraceOptions,
) -> Result<ZeroEnergyTrace> {
    let map = transmission_map(spec, leads, &[0.0], gamma_grid)?;
    let points: Vec<(f64, f64)> = gamma_grid.iter().copied().zip(map.t_values[0].iter().copied()).collect();

    let exceptional_points = if spec.topology == Topology::TwistedOpen && gamma_grid.len() >= 2 {
        let w = options.zero_energy_window;
        let steps = options.ep_coarse_steps.unwrap_or(gamma_grid.len() - 1).max(8);
        let search = EpSearch::new(gamma_grid[0], gamma_grid[gamma_grid.len() - 1])
            .with_steps(steps)
            .with_energy_window(-w, w);
        locate_exceptional_points(spec, &search)?.points
    } else {
        Vec::new()
    };

    let mut peaks = Vec::new();
    for i in 1..points.len().saturating_sub(1) {
        let (g, t) = points[i];
        if t > points[i - 1].1 && t >= points[i + 1].1 {
            let nearest_ep = exceptional_points
                .iter()
                .map(|p| p.gamma_star)
                .min_by(|a, b| (a - g).abs().total_cmp(&(b - g).abs()));
            peaks.push(TracePeak {
                gamma: g,
                transmission: t,
                nearest_ep,
            });
        }
    }
    Ok(ZeroEnergyTrace {
        points,
        peaks,
        exceptional_points,
        failures: map.failures,
    })
}

/// Which contact geometry a detangle check ran with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContactVariant {
    /// All four couplings equal.
    Symmetric,
    /// Upper legs uncoupled on both sides.
    LowerOnly,
}

/// A chain eigenenergy and the transmission extremum found next to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub chain_energy: f64,
    pub nearest_extremum: Option<f64>,
    /// Extremum within one grid step of `chain_energy`.
    pub aligned: bool,
    /// Neighbouring levels of the same chain are more than two grid steps away.
    pub resolvable: bool,
    /// `T` solved at `chain_energy` itself.
    pub transmission_at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetangleCheck {
    pub variant: ContactVariant,
    pub transmission: Vec<(f64, f64)>,
    /// `d - 2t cos(m pi / (N + 1))`, the chain decoupled from symmetric leads.
    pub f_energies: Vec<f64>,
    /// `-d - 2t cos(m pi / (N + 1))`.
    pub p_energies: Vec<f64>,
    /// Transmission maxima against p-chain energies.
    pub resonances: Vec<Alignment>,
    /// Transmission minima against f-chain energies.
    pub antiresonances: Vec<Alignment>,
    pub grid_step: f64,
}

impl DetangleCheck {
    /// Every resolvable p-chain level has a transmission maximum next to it.
    pub fn all_resonances_aligned(&self) -> bool {
        self.resonances.iter().filter(|a| a.resolvable).all(|a| a.aligned)
    }

    /// Every resolvable f-chain level has a transmission minimum next to it.
    pub fn all_antiresonances_aligned(&self) -> bool {
        self.antiresonances.iter().filter(|a| a.resolvable).all(|a| a.aligned)
    }

    /// Whether `T` at every f-chain energy is at least `floor`.
    pub fn no_dips_below(&self, floor: f64) -> bool {
        self.antiresonances.iter().all(|a| a.transmission_at >= floor)
    }
}

/// Compares transmission extrema with the eigenenergies of the detangled chains.
///
/// `e_grid` must be uniform and increasing. Chain energies outside it are skipped.
pub fn detangled_transport_check(spec: &LatticeSpec, leads: &LeadSpec, e_grid: &[f64]) -> Result<DetangleCheck> {
    spec.validate()?;
    if spec.topology != Topology::OpenLadder {
        return Err(Error::WrongTopology {
            operation: "detangled_transport_check",
            expected: "ladder",
            actual: spec.topology,
        });
    }
    let variant = if leads.is_symmetric() {
        ContactVariant::Symmetric
    } else if leads.couplings[0] == 0.0 && leads.couplings[2] == 0.0 {
        ContactVariant::LowerOnly
    } else {
        return Err(Error::InvalidArgument(
            "detangle check needs symmetric contacts or uncoupled upper legs".into(),
        ));
    };
    if e_grid.len() < 3 || e_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("energy grid needs at least 3 increasing points".into()));
    }
    let step = (e_grid[e_grid.len() - 1] - e_grid[0]) / (e_grid.len() - 1) as f64;
    let map = transmission_map(spec, leads, e_grid, &[spec.gamma])?;
    let transmission: Vec<(f64, f64)> = e_grid.iter().copied().zip(map.t_values.iter().map(|r| r[0])).collect();

    let n = spec.n_cells;
    let (d, t) = (spec.intra_hop, spec.inter_hop);
    let band: Vec<f64> = (1..=n)
        .map(|m| -2.0 * t * (m as f64 * std::f64::consts::PI / (n + 1) as f64).cos())
        .collect();
    let inside = |e: &f64| *e >= e_grid[0] && *e <= e_grid[e_grid.len() - 1];
    let f_energies: Vec<f64> = band.iter().map(|b| d + b).filter(inside).collect();
    let p_energies: Vec<f64> = band.iter().map(|b| -d + b).filter(inside).collect();

    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for i in 1..transmission.len() - 1 {
        let (prev, (e, v), next) = (transmission[i - 1].1, transmission[i], transmission[i + 1].1);
        if v > prev && v >= next {
            maxima.push(e);
        }
        if v < prev && v <= next {
            minima.push(e);
        }
    }
    let tol = step * (1.0 + 1e-9);
    let align = |energies: &[f64], extrema: &[f64]| -> Vec<Alignment> {
        energies
            .iter()
            .map(|&ce| {
                let nearest = extrema
                    .iter()
                    .copied()
                    .min_by(|a, b| (a - ce).abs().total_cmp(&(b - ce).abs()));
                let spacing = energies
                    .iter()
                    .filter(|&&o| o != ce)
                    .map(|o| (o - ce).abs())
                    .fold(f64::INFINITY, f64::min);
                Alignment {
                    chain_energy: ce,
                    nearest_extremum: nearest,
                    aligned: nearest.is_some_and(|x| (x - ce).abs() <= tol),
                    resolvable: spacing > 2.0 * step,
                    // a dark level can make the system exactly singular
                    transmission_at: scatter(spec, leads, ce).map_or(f64::NAN, |s| s.transmission_prob),
                }
            })
            .collect()
    };
    Ok(DetangleCheck {
        variant,
        resonances: align(&p_energies, &maxima),
        antiresonances: align(&f_energies, &minima),
        f_energies,
        p_energies,
        transmission,
        grid_step: step,
    })
}
