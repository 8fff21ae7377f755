//! Exceptional-point location and broken-phase windows.
//!
//! A coarse scan counts broken eigenvalues at every grid point. Each interval
//! where the count changes is bisected on that count until it is narrower than
//! [`BRACKET_WIDTH`]. The coalescing pairs are the newly complex eigenvalues on
//! the broken side; their branch ids come from continuing the coarse scan.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::{continue_branches, SweepOptions};
use super::GammaFamily;
use crate::error::{Error, Result};

/// Bisection stops once the bracket is this narrow.
pub const BRACKET_WIDTH: f64 = 1e-10;
/// Events closer than this are one event.
const MERGE_WIDTH: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpSearch {
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub coarse_steps: usize,
    /// Bisection also stops once the coalescing pair is closer than this.
    pub ep_tol: f64,
    /// `|Im e|` above this counts as broken.
    pub im_tol: f64,
    /// Only events whose coalescing energy has real part inside this window are refined.
    pub energy_window: Option<(f64, f64)>,
    /// A refined pair further apart than this is reported as a near-degeneracy.
    pub near_degeneracy_gap: f64,
}

impl EpSearch {
    pub fn new(gamma_lo: f64, gamma_hi: f64) -> Self {
        EpSearch {
            gamma_lo,
            gamma_hi,
            coarse_steps: 400,
            ep_tol: 1e-8,
            im_tol: 1e-9,
            energy_window: None,
            near_degeneracy_gap: 1e-3,
        }
    }

    pub fn with_steps(mut self, coarse_steps: usize) -> Self {
        self.coarse_steps = coarse_steps;
        self
    }

    pub fn with_energy_window(mut self, lo: f64, hi: f64) -> Self {
        self.energy_window = Some((lo, hi));
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma_lo.is_finite() && self.gamma_hi.is_finite() && self.gamma_lo < self.gamma_hi) {
            return Err(Error::InvalidArgument(format!(
                "gamma range [{}, {}] is empty",
                self.gamma_lo, self.gamma_hi
            )));
        }
        if self.coarse_steps < 8 {
            return Err(Error::InvalidArgument(format!(
                "coarse_steps must be at least 8, got {}",
                self.coarse_steps
            )));
        }
        if !(self.ep_tol > 0.0) || !(self.im_tol > 0.0) {
            return Err(Error::InvalidArgument("ep_tol and im_tol must be positive".into()));
        }
        if let Some((lo, hi)) = self.energy_window {
            if !(lo <= hi) {
                return Err(Error::InvalidArgument(format!("energy window [{lo}, {hi}] is empty")));
            }
        }
        Ok(())
    }

    fn in_window(&self, e: f64) -> bool {
        self.energy_window.is_none_or(|(lo, hi)| lo <= e && e <= hi)
    }

    /// Broken eigenvalues inside the energy window. Pairs breaking elsewhere in
    /// the same step would otherwise cancel an in-window event.
    fn broken_count(&self, values: &[Complex64]) -> usize {
        values
            .iter()
            .filter(|e| e.im.abs() > self.im_tol && self.in_window(e.re))
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EpKind {
    /// A real pair turns into a conjugate pair as gamma increases.
    MergePoint,
    /// A conjugate pair turns back into a real pair.
    SplitPoint,
}

impl EpKind {
    pub fn name(self) -> &'static str {
        match self {
            EpKind::MergePoint => "merge",
            EpKind::SplitPoint => "split",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalPoint {
    pub gamma_star: f64,
    pub energy_star: Complex64,
    /// Branch ids in the coarse continuation, lower first.
    pub branch_pair: (usize, usize),
    pub kind: EpKind,
    /// `|v^T v| / ||v||^2` of the coalescing right eigenvector at `gamma_star`.
    pub self_orthogonality_measure: f64,
    /// Distance between the two eigenvalues at the bracket ends (largest of the two).
    pub pair_gap: f64,
}

/// Count change whose pair did not close up under bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearDegeneracy {
    pub gamma: f64,
    pub energy: Complex64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpReport {
    /// Sorted by `gamma_star`, then energy.
    pub points: Vec<ExceptionalPoint>,
    pub near_degeneracies: Vec<NearDegeneracy>,
    /// Number of coarse intervals skipped by the energy window.
    pub skipped_candidates: usize,
}

struct Event {
    a: f64,
    b: f64,
    ca: usize,
    cb: usize,
}

pub fn locate_exceptional_points<F: GammaFamily + ?Sized>(family: &F, search: &EpSearch) -> Result<EpReport> {
    search.validate()?;
    let steps = search.coarse_steps;
    let h = (search.gamma_hi - search.gamma_lo) / steps as f64;
    let grid: Vec<f64> = (0..=steps).map(|i| search.gamma_lo + h * i as f64).collect();
    let spectra = grid
        .par_iter()
        .map(|&g| family.eigenvalues(g))
        .collect::<Result<Vec<_>>>()?;
    let counts: Vec<usize> = spectra.iter().map(|s| search.broken_count(s)).collect();
    let sweep = continue_branches(&grid, spectra, &SweepOptions::default(), None)?;

    let mut candidates = Vec::new();
    let mut skipped = 0;
    for i in 0..steps {
        if counts[i] == counts[i + 1] {
            continue;
        }
        let broken_side = if counts[i + 1] > counts[i] { i + 1 } else { i };
        let other = if broken_side == i { i + 1 } else { i };
        let energies: Vec<f64> = sweep
            .branches
            .iter()
            .filter(|b| b[broken_side].im.abs() > search.im_tol && b[other].im.abs() <= search.im_tol)
            .map(|b| b[broken_side].re)
            .collect();
        // a count change the continuation cannot attribute is always refined
        if !energies.is_empty() && !energies.iter().any(|&e| search.in_window(e)) {
            skipped += 1;
            continue;
        }
        candidates.push(i);
    }

    let events: Vec<Event> = candidates
        .par_iter()
        .map(|&i| {
            let mut out = Vec::new();
            bisect(family, search, grid[i], counts[i], grid[i + 1], counts[i + 1], &mut out)?;
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let events = merge_events(events);

    let per_event = events
        .par_iter()
        .map(|ev| resolve_event(family, search, ev, &sweep.gamma_grid, &sweep.branches))
        .collect::<Result<Vec<_>>>()?;

    let mut points = Vec::new();
    let mut near = Vec::new();
    for (p, n) in per_event {
        points.extend(p);
        near.extend(n);
    }
    points.sort_by(|x, y| {
        x.gamma_star
            .total_cmp(&y.gamma_star)
            .then(x.energy_star.re.total_cmp(&y.energy_star.re))
            .then(x.branch_pair.cmp(&y.branch_pair))
    });
    near.sort_by(|x, y| x.gamma.total_cmp(&y.gamma).then(x.energy.re.total_cmp(&y.energy.re)));
    Ok(EpReport {
        points,
        near_degeneracies: near,
        skipped_candidates: skipped,
    })
}

fn bisect<F: GammaFamily + ?Sized>(
    family: &F,
    search: &EpSearch,
    a: f64,
    ca: usize,
    b: f64,
    cb: usize,
    out: &mut Vec<Event>,
) -> Result<()> {
    if b - a <= BRACKET_WIDTH {
        out.push(Event { a, b, ca, cb });
        return Ok(());
    }
    let m = 0.5 * (a + b);
    if m <= a || m >= b {
        out.push(Event { a, b, ca, cb });
        return Ok(());
    }
    let cm = search.broken_count(&family.eigenvalues(m)?);
    if cm != ca {
        bisect(family, search, a, ca, m, cm, out)?;
    }
    if cm != cb {
        bisect(family, search, m, cm, b, cb, out)?;
    }
    Ok(())
}

/// Joins adjacent brackets and drops those whose net count change vanishes.
fn merge_events(mut events: Vec<Event>) -> Vec<Event> {
    events.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut out: Vec<Event> = Vec::new();
    for ev in events {
        match out.last_mut() {
            Some(last) if ev.a - last.b <= MERGE_WIDTH => {
                last.b = ev.b;
                last.cb = ev.cb;
            }
            _ => out.push(ev),
        }
    }
    out.retain(|e| e.ca != e.cb);
    out
}

fn resolve_event<F: GammaFamily + ?Sized>(
    family: &F,
    search: &EpSearch,
    ev: &Event,
    grid: &[f64],
    branches: &[Vec<Complex64>],
) -> Result<(Vec<ExceptionalPoint>, Vec<NearDegeneracy>)> {
    let kind = if ev.cb > ev.ca { EpKind::MergePoint } else { EpKind::SplitPoint };
    let (g_broken, g_real) = match kind {
        EpKind::MergePoint => (ev.b, ev.a),
        EpKind::SplitPoint => (ev.a, ev.b),
    };
    let broken = family.eigenvalues(g_broken)?;
    let real = family.eigenvalues(g_real)?;
    let n_pairs = ev.ca.abs_diff(ev.cb) / 2;
    let gamma_star = 0.5 * (ev.a + ev.b);

    // the newest conjugate pairs have the smallest imaginary parts
    let mut upper: Vec<Complex64> = broken
        .iter()
        .copied()
        .filter(|e| e.im > search.im_tol && search.in_window(e.re))
        .collect();
    upper.sort_by(|x, y| x.im.total_cmp(&y.im).then(x.re.total_cmp(&y.re)));
    upper.truncate(n_pairs.max(1));

    // coarse grid point on the broken side of the event
    let h = grid[1] - grid[0];
    let idx = ((gamma_star - grid[0]) / h).floor().max(0.0) as usize;
    let coarse = match kind {
        EpKind::MergePoint => (idx + 1).min(grid.len() - 1),
        EpKind::SplitPoint => idx.min(grid.len() - 1),
    };

    let matrix = family.matrix(gamma_star)?;
    let at_star = family.eigenvalues(gamma_star)?;
    let mut points = Vec::new();
    let mut near = Vec::new();
    let mut used = vec![false; branches.len()];
    for lam in upper {
        let energy = Complex64::new(lam.re, 0.0);
        let broken_gap = 2.0 * lam.im;
        let real_gap = nearest_pair_gap(&real, lam.re);
        let gap = broken_gap.max(real_gap);
        if gap > search.near_degeneracy_gap {
            near.push(NearDegeneracy {
                gamma: gamma_star,
                energy,
                gap,
            });
            continue;
        }
        let b1 = closest_branch(branches, coarse, lam, &used);
        if let Some(b) = b1 {
            used[b] = true;
        }
        let b2 = closest_branch(branches, coarse, lam.conj(), &used);
        if let Some(b) = b2 {
            used[b] = true;
        }
        let (p, q) = (b1.unwrap_or(usize::MAX), b2.unwrap_or(usize::MAX));
        points.push(ExceptionalPoint {
            gamma_star,
            energy_star: energy,
            branch_pair: (p.min(q), p.max(q)),
            kind,
            self_orthogonality_measure: self_orthogonality(&matrix, nearest(&at_star, lam)),
            pair_gap: gap,
        });
    }
    Ok((points, near))
}

/// Distance between the two real eigenvalues closest to `e`.
fn nearest_pair_gap(values: &[Complex64], e: f64) -> f64 {
    let mut d: Vec<(f64, Complex64)> = values.iter().map(|v| ((v.re - e).abs() + v.im.abs(), *v)).collect();
    d.sort_by(|x, y| x.0.total_cmp(&y.0));
    match d.as_slice() {
        [a, b, ..] => (a.1 - b.1).norm(),
        _ => f64::INFINITY,
    }
}

fn closest_branch(branches: &[Vec<Complex64>], g: usize, target: Complex64, used: &[bool]) -> Option<usize> {
    branches
        .iter()
        .enumerate()
        .filter(|(i, _)| !used[*i])
        .min_by(|x, y| (x.1[g] - target).norm().total_cmp(&(y.1[g] - target).norm()))
        .map(|(i, _)| i)
}

fn nearest(values: &[Complex64], target: Complex64) -> Complex64 {
    values
        .iter()
        .copied()
        .min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()))
        .unwrap_or(target)
}

/// `|v^T v| / ||v||^2` for the eigenvector of `eigenvalue`, by inverse iteration.
///
/// The shift must sit much closer to `eigenvalue` than to its partner, otherwise
/// the iteration returns a mixture of the two nearly parallel eigenvectors.
pub(crate) fn self_orthogonality(matrix: &DMatrix<Complex64>, eigenvalue: Complex64) -> f64 {
    let n = matrix.nrows();
    let scale = matrix.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let sigma = eigenvalue + Complex64::new(1e-13 * scale, 1e-13 * scale);
    let shifted = matrix - DMatrix::<Complex64>::identity(n, n) * sigma;
    let lu = shifted.lu();
    let mut v = DVector::from_fn(n, |i, _| Complex64::new(1.0 + 0.1 * i as f64, 0.3 - 0.01 * i as f64));
    for _ in 0..4 {
        let Some(w) = lu.solve(&v) else { return f64::NAN };
        let norm = w.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return f64::NAN;
        }
        v = w / Complex64::new(norm, 0.0);
    }
    let vtv: Complex64 = v.iter().map(|z| z * z).sum();
    vtv.norm() / v.norm_squared()
}

/// A broken-phase interval bounded by a merge and a split on one branch pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrokenWindow {
    /// `None` when the window was already open at the start of the scan.
    pub gamma_lo: Option<f64>,
    /// `None` when the window is still open at the end of the scan.
    pub gamma_hi: Option<f64>,
    pub width: Option<f64>,
    pub energy: f64,
    pub branch_pair: (usize, usize),
    /// Number of branch pairs sharing these bounds.
    pub multiplicity: usize,
}

impl BrokenWindow {
    pub fn is_closed(&self) -> bool {
        self.gamma_lo.is_some() && self.gamma_hi.is_some()
    }
}

/// Pairs each merge point with the next split point of the same branch pair.
///
/// A split with no matching pair id falls back to the open merge nearest in energy.
/// Windows with equal bounds (within 1e-9) are collapsed into one.
pub fn broken_windows(eps: &[ExceptionalPoint]) -> Vec<BrokenWindow> {
    let mut open: Vec<&ExceptionalPoint> = Vec::new();
    let mut windows: Vec<BrokenWindow> = Vec::new();
    for ep in eps {
        match ep.kind {
            EpKind::MergePoint => open.push(ep),
            EpKind::SplitPoint => {
                let pos = open
                    .iter()
                    .position(|m| m.branch_pair == ep.branch_pair)
                    .or_else(|| {
                        open.iter()
                            .enumerate()
                            .min_by(|a, b| {
                                let da = (a.1.energy_star.re - ep.energy_star.re).abs();
                                let db = (b.1.energy_star.re - ep.energy_star.re).abs();
                                da.total_cmp(&db)
                            })
                            .map(|(i, _)| i)
                    });
                match pos {
                    Some(i) => {
                        let m = open.remove(i);
                        windows.push(BrokenWindow {
                            gamma_lo: Some(m.gamma_star),
                            gamma_hi: Some(ep.gamma_star),
                            width: Some(ep.gamma_star - m.gamma_star),
                            energy: m.energy_star.re,
                            branch_pair: m.branch_pair,
                            multiplicity: 1,
                        });
                    }
                    None => windows.push(BrokenWindow {
                        gamma_lo: None,
                        gamma_hi: Some(ep.gamma_star),
                        width: None,
                        energy: ep.energy_star.re,
                        branch_pair: ep.branch_pair,
                        multiplicity: 1,
                    }),
                }
            }
        }
    }
    for m in open {
        windows.push(BrokenWindow {
            gamma_lo: Some(m.gamma_star),
            gamma_hi: None,
            width: None,
            energy: m.energy_star.re,
            branch_pair: m.branch_pair,
            multiplicity: 1,
        });
    }

    let key = |w: &BrokenWindow| w.gamma_lo.or(w.gamma_hi).unwrap_or(0.0);
    windows.sort_by(|a, b| key(a).total_cmp(&key(b)).then(a.energy.total_cmp(&b.energy)));
    let same = |x: Option<f64>, y: Option<f64>| match (x, y) {
        (Some(x), Some(y)) => (x - y).abs() <= MERGE_WIDTH,
        (None, None) => true,
        _ => false,
    };
    let mut out: Vec<BrokenWindow> = Vec::new();
    for w in windows {
        if let Some(prev) = out
            .iter_mut()
            .find(|p| same(p.gamma_lo, w.gamma_lo) && same(p.gamma_hi, w.gamma_hi))
        {
            prev.multiplicity += 1;
            continue;
        }
        out.push(w);
    }
    out
}
