//! Eigenvalue branches over a gain/loss grid.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GammaFamily;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Two candidate matches closer than this in cost make a step ambiguous.
    pub matching_tol: f64,
    /// How many times an ambiguous step may be bisected and re-solved.
    pub max_halvings: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            matching_tol: 1e-7,
            max_halvings: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub gamma_grid: Vec<f64>,
    /// `branches[b][g]` is branch `b` at `gamma_grid[g]`.
    pub branches: Vec<Vec<Complex64>>,
    /// Largest distance any branch moved across one step.
    pub continuation_residual: f64,
    /// Steps `g -> g + 1` whose matching stayed ambiguous after halving.
    pub ambiguous_steps: Vec<usize>,
}

impl SweepResult {
    /// All branch values at one grid point, in branch order.
    pub fn at(&self, g: usize) -> Vec<Complex64> {
        self.branches.iter().map(|b| b[g]).collect()
    }
}

pub fn sweep_spectrum<F: GammaFamily + ?Sized>(family: &F, gamma_grid: &[f64]) -> Result<SweepResult> {
    sweep_spectrum_with(family, gamma_grid, &SweepOptions::default())
}

pub fn sweep_spectrum_with<F: GammaFamily + ?Sized>(
    family: &F,
    gamma_grid: &[f64],
    options: &SweepOptions,
) -> Result<SweepResult> {
    check_grid(gamma_grid)?;
    let spectra = gamma_grid
        .par_iter()
        .map(|&g| family.eigenvalues(g))
        .collect::<Result<Vec<_>>>()?;
    continue_branches(gamma_grid, spectra, options, Some(&|g| family.eigenvalues(g)))
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("gamma grid is empty".into()));
    }
    if grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidArgument("gamma grid has non-finite values".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("gamma grid must be strictly increasing".into()));
    }
    Ok(())
}

type Resolver<'a> = &'a (dyn Fn(f64) -> Result<Vec<Complex64>> + Sync);

/// Orders precomputed spectra into continuous branches.
///
/// `resolve`, when given, is used to bisect steps whose matching is ambiguous.
pub fn continue_branches(
    gamma_grid: &[f64],
    spectra: Vec<Vec<Complex64>>,
    options: &SweepOptions,
    resolve: Option<Resolver<'_>>,
) -> Result<SweepResult> {
    check_grid(gamma_grid)?;
    if spectra.len() != gamma_grid.len() {
        return Err(Error::InvalidArgument(format!(
            "{} spectra for {} grid points",
            spectra.len(),
            gamma_grid.len()
        )));
    }
    let n = spectra[0].len();
    if spectra.iter().any(|s| s.len() != n) {
        return Err(Error::InvalidArgument("spectra differ in size".into()));
    }

    let mut branches: Vec<Vec<Complex64>> = (0..n).map(|_| Vec::with_capacity(spectra.len())).collect();
    let mut current = spectra[0].clone();
    for (b, v) in branches.iter_mut().zip(&current) {
        b.push(*v);
    }
    let mut residual = 0.0f64;
    let mut ambiguous = Vec::new();
    for (g, next) in spectra.into_iter().enumerate().skip(1) {
        let step = refine_step(
            &current,
            gamma_grid[g - 1],
            next,
            gamma_grid[g],
            options,
            resolve,
            0,
        )?;
        residual = residual.max(step.max_distance);
        if step.ambiguous {
            ambiguous.push(g - 1);
        }
        for (b, v) in branches.iter_mut().zip(&step.ordered) {
            b.push(*v);
        }
        current = step.ordered;
    }
    Ok(SweepResult {
        gamma_grid: gamma_grid.to_vec(),
        branches,
        continuation_residual: residual,
        ambiguous_steps: ambiguous,
    })
}

struct Step {
    ordered: Vec<Complex64>,
    max_distance: f64,
    ambiguous: bool,
}

fn refine_step(
    prev: &[Complex64],
    g0: f64,
    next: Vec<Complex64>,
    g1: f64,
    options: &SweepOptions,
    resolve: Option<Resolver<'_>>,
    depth: usize,
) -> Result<Step> {
    let m = greedy_match(prev, &next, options.matching_tol);
    let resolve = match resolve {
        Some(r) if m.ambiguous && depth < options.max_halvings => r,
        _ => {
            return Ok(Step {
                ordered: m.assignment.iter().map(|&j| next[j]).collect(),
                max_distance: m.max_distance,
                ambiguous: m.ambiguous,
            })
        }
    };
    let gm = 0.5 * (g0 + g1);
    let mid = resolve(gm)?;
    let first = refine_step(prev, g0, mid, gm, options, Some(resolve), depth + 1)?;
    let second = refine_step(&first.ordered, gm, next, g1, options, Some(resolve), depth + 1)?;
    Ok(Step {
        ordered: second.ordered,
        max_distance: first.max_distance.max(second.max_distance),
        ambiguous: first.ambiguous || second.ambiguous,
    })
}

pub(crate) struct Matching {
    /// `assignment[i]` is the index in `next` continuing branch `i`.
    pub assignment: Vec<usize>,
    pub max_distance: f64,
    pub ambiguous: bool,
}

/// Greedy minimal-distance bipartite assignment.
pub(crate) fn greedy_match(prev: &[Complex64], next: &[Complex64], tol: f64) -> Matching {
    let n = prev.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, p) in prev.iter().enumerate() {
        for (j, q) in next.iter().enumerate() {
            pairs.push(((p - q).norm(), i, j));
        }
    }
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut assignment = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    let mut left = n;
    let mut max_distance = 0.0f64;
    for &(d, i, j) in &pairs {
        if left == 0 {
            break;
        }
        if assignment[i] != usize::MAX || taken[j] {
            continue;
        }
        assignment[i] = j;
        taken[j] = true;
        left -= 1;
        max_distance = max_distance.max(d);
    }

    let ambiguous = prev.iter().enumerate().any(|(i, p)| {
        let chosen = next[assignment[i]];
        let d1 = (p - chosen).norm();
        next.iter()
            .filter(|q| (*q - chosen).norm() > tol)
            .any(|q| (p - q).norm() - d1 <= tol)
    });
    Matching {
        assignment,
        max_distance,
        ambiguous,
    }
}
