//! One function per experiment, each producing a [`Table`].

use ptladder_core::rotation::{complex_rotation_angle, mode_weights};
use ptladder_core::spectral::{locate_exceptional_points, sweep_spectrum, EpSearch, ExceptionalPoint};
use ptladder_core::transport::{detangled_transport_check, transmission_map, zero_energy_trace, TraceOptions};
use ptladder_core::{spectral, Error, Result};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Experiment, ExperimentConfig};
use crate::output::{Cell, Table};

pub fn run_experiment(config: &ExperimentConfig) -> Result<Table> {
    match config.experiment {
        Experiment::SpectrumSweep => spectrum_sweep(config),
        Experiment::EpSearch => ep_search(config),
        Experiment::TransmissionMap => map(config),
        Experiment::ZeroEnergyTrace => trace(config),
        Experiment::DetangleCheck => detangle(config),
        Experiment::ModeWeights => weights(config),
    }
}

fn spectrum_sweep(config: &ExperimentConfig) -> Result<Table> {
    let sweep = sweep_spectrum(&config.lattice, &config.gamma_grid.points())?;
    let mut table = Table::new(vec!["gamma", "branch_id", "re_e", "im_e"]);
    for (g, &gamma) in sweep.gamma_grid.iter().enumerate() {
        for (b, branch) in sweep.branches.iter().enumerate() {
            table.rows.push(vec![
                Cell::Num(gamma),
                Cell::Int(b as i64),
                Cell::Num(branch[g].re),
                Cell::Num(branch[g].im),
            ]);
        }
    }
    table.summary = json!({
        "continuation_residual": sweep.continuation_residual,
        "ambiguous_steps": sweep.ambiguous_steps,
    });
    Ok(table)
}

fn ep_rows(table: &mut Table, points: &[ExceptionalPoint]) {
    for p in points {
        table.rows.push(vec![
            Cell::Num(p.gamma_star),
            Cell::Num(p.energy_star.re),
            Cell::Num(p.energy_star.im),
            Cell::Text(p.kind.name().into()),
            Cell::Int(p.branch_pair.0 as i64),
            Cell::Int(p.branch_pair.1 as i64),
            Cell::Num(p.self_orthogonality_measure),
        ]);
    }
}

const EP_COLUMNS: [&str; 7] = ["gamma_star", "re_e", "im_e", "kind", "pair_lo", "pair_hi", "self_orth"];

fn ep_search(config: &ExperimentConfig) -> Result<Table> {
    let g = &config.gamma_grid;
    let mut search = EpSearch::new(g.min, g.max).with_steps(g.count - 1);
    if let Some((lo, hi)) = config.energy_window {
        search = search.with_energy_window(lo, hi);
    }
    let report = locate_exceptional_points(&config.lattice, &search)?;
    let mut table = Table::new(EP_COLUMNS.to_vec());
    ep_rows(&mut table, &report.points);
    let near: Vec<_> = report
        .near_degeneracies
        .iter()
        .map(|n| json!({"gamma": n.gamma, "re_e": n.energy.re, "im_e": n.energy.im, "gap": n.gap}))
        .collect();
    table.summary = json!({
        "near_degeneracies": near,
        "skipped_candidates": report.skipped_candidates,
        "windows": spectral::broken_windows(&report.points),
    });
    Ok(table)
}

fn map(config: &ExperimentConfig) -> Result<Table> {
    let m = transmission_map(&config.lattice, &config.leads, &config.e_grid.points(), &config.gamma_grid.points())?;
    let mut table = Table::new(vec!["e", "gamma", "t", "r"]);
    for (e, gamma, t, r) in m.cells() {
        table.rows.push(vec![Cell::Num(e), Cell::Num(gamma), Cell::Num(t), Cell::Num(r)]);
    }
    table.failures = m.failures;
    Ok(table)
}

fn trace(config: &ExperimentConfig) -> Result<Table> {
    let tr = zero_energy_trace(&config.lattice, &config.leads, &config.gamma_grid.points(), &TraceOptions::default())?;
    let mut table = Table::new(vec!["gamma", "t"]);
    for &(gamma, t) in &tr.points {
        table.rows.push(vec![Cell::Num(gamma), Cell::Num(t)]);
    }
    table.failures = tr.failures;
    table.summary = json!({
        "peaks": tr.peaks,
        "exceptional_points": tr.exceptional_points,
    });
    Ok(table)
}

fn detangle(config: &ExperimentConfig) -> Result<Table> {
    let check = detangled_transport_check(&config.lattice, &config.leads, &config.e_grid.points())?;
    let mut table = Table::new(vec![
        "chain",
        "level",
        "nearest_extremum",
        "aligned",
        "resolvable",
        "t_at_level",
    ]);
    let groups = [("p", &check.resonances), ("f", &check.antiresonances)];
    for (chain, list) in groups {
        for a in list.iter() {
            table.rows.push(vec![
                Cell::Text(chain.into()),
                Cell::Num(a.chain_energy),
                Cell::Num(a.nearest_extremum.unwrap_or(f64::NAN)),
                Cell::Int(a.aligned as i64),
                Cell::Int(a.resolvable as i64),
                Cell::Num(a.transmission_at),
            ]);
        }
    }
    table.summary = json!({
        "variant": check.variant,
        "grid_step": check.grid_step,
        "all_resonances_aligned": check.all_resonances_aligned(),
        "all_antiresonances_aligned": check.all_antiresonances_aligned(),
        "no_dips_below_0.01": check.no_dips_below(0.01),
        "transmission": check.transmission,
    });
    Ok(table)
}

type WeightRow = (usize, f64, f64, f64, f64, f64, f64);

fn weights_at(config: &ExperimentConfig, gamma: f64) -> Result<Vec<WeightRow>> {
    let spec = config.lattice.with_gamma(gamma);
    let theta = match complex_rotation_angle(spec.intra_hop, spec.delta, gamma, None) {
        Ok(theta) => theta,
        // no rotation exists at the collective exceptional point
        Err(Error::SingularAngle { .. }) => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let s = spectral::lattice_spectrum(&spec, true)?;
    let vectors = s.right_eigenvectors.as_ref().expect("requested eigenvectors");
    let mut rows = Vec::new();
    for (j, e) in s.eigenvalues.iter().enumerate() {
        if config.energy_window.is_some_and(|(lo, hi)| e.re < lo || e.re > hi) {
            continue;
        }
        let state: Vec<_> = vectors.column(j).iter().copied().collect();
        let w = mode_weights(&state, &spec, theta)?.aggregate;
        rows.push((j, e.re, e.im, w.alpha_sq, w.beta_sq, w.alpha_theta_sq, w.beta_theta_sq));
    }
    Ok(rows)
}

fn weights(config: &ExperimentConfig) -> Result<Table> {
    let gammas = config.gamma_grid.points();
    let per_gamma = gammas
        .par_iter()
        .map(|&g| weights_at(config, g))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(vec![
        "gamma",
        "state",
        "re_e",
        "im_e",
        "alpha_sq",
        "beta_sq",
        "alpha_theta_sq",
        "beta_theta_sq",
    ]);
    for (&gamma, rows) in gammas.iter().zip(per_gamma) {
        for (j, re, im, a, b, at, bt) in rows {
            table.rows.push(vec![
                Cell::Num(gamma),
                Cell::Int(j as i64),
                Cell::Num(re),
                Cell::Num(im),
                Cell::Num(a),
                Cell::Num(b),
                Cell::Num(at),
                Cell::Num(bt),
            ]);
        }
    }
    Ok(table)
}
