use ptladder_core::lattice::{LatticeSpec, Topology};
use ptladder_core::transport::{
    assemble_scattering_system, detangled_transport_check, scatter, solve_scattering, solve_scattering_dense,
    transmission_map, LeadSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn banded_and_dense_agree_at_forty_cells() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let leads = LeadSpec::default();
    for _ in 0..50 {
        let e = rng.random_range(-4.0..4.0);
        let gamma = rng.random_range(0.0..3.0);
        let spec = LatticeSpec::new(Topology::OpenLadder, 40).with_gamma(gamma);
        let sys = assemble_scattering_system(&spec, &leads, e).unwrap();
        let a = solve_scattering(&sys).unwrap();
        let b = solve_scattering_dense(&sys).unwrap();
        assert!((a.t - b.t).norm() <= 1e-9, "E={e} gamma={gamma}");
        assert!(a.residual <= 1e-9);
    }
}

#[test]
fn hermitian_flux_is_conserved() {
    let leads = LeadSpec::default();
    for top in [Topology::OpenLadder, Topology::TwistedOpen] {
        for n in [2, 10, 64] {
            // 40 points avoid E = 0 and E = 2, where the dark f chain of N = 2 makes the system singular
            for e in grid(-4.0, 4.0, 40) {
                let s = scatter(&LatticeSpec::new(top, n), &leads, e).unwrap();
                assert!(s.flux_residual.abs() <= 1e-10, "{top} N={n} E={e}: {}", s.flux_residual);
            }
        }
    }
}

#[test]
fn p_chain_energies_are_transmission_peaks() {
    // lead self-energies move the peaks by up to ~2e-3, below the 0.01 map step
    let spec = LatticeSpec::new(Topology::OpenLadder, 100);
    let leads = LeadSpec::default();
    let t = |e: f64| scatter(&spec, &leads, e).unwrap().transmission_prob;
    for m in [10, 37, 50, 81] {
        let e = -1.0 - 2.0 * (m as f64 * std::f64::consts::PI / 101.0).cos();
        let h = 0.01;
        assert!(t(e) > t(e - h) && t(e) > t(e + h), "m={m}");
        assert!(t(e) > 0.9, "m={m}");
    }
}

#[test]
fn symmetric_contacts_only_see_the_p_band() {
    // the f chain is dark at gamma = 0, so nothing transmits above the p band [-3, 1]
    let spec = LatticeSpec::new(Topology::OpenLadder, 100);
    let es = grid(1.5, 4.0, 51);
    let map = transmission_map(&spec, &LeadSpec::default(), &es, &[0.0]).unwrap();
    assert!(map.t_values.iter().all(|row| row[0] < 1e-8));
    let inside = transmission_map(&spec, &LeadSpec::default(), &grid(-2.5, 0.5, 31), &[0.0]).unwrap();
    assert!(inside.column_max(0) > 0.3);
}

#[test]
fn broken_phase_columns_stay_below_hermitian_column() {
    let spec = LatticeSpec::new(Topology::OpenLadder, 100);
    let map = transmission_map(&spec, &LeadSpec::default(), &grid(-4.0, 4.0, 401), &[0.0, 2.2, 2.6, 3.0]).unwrap();
    let reference = map.column_max(0);
    for ig in 1..4 {
        assert!(map.column_max(ig) < reference, "gamma={}", map.gamma_grid[ig]);
    }
}

#[test]
fn reciprocity_with_random_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let n = 2 * rng.random_range(1..20);
        let top = if rng.random_bool(0.5) { Topology::OpenLadder } else { Topology::TwistedOpen };
        let spec = LatticeSpec::new(top, n).with_gamma(rng.random_range(0.0..3.0));
        let leads = LeadSpec::symmetric(rng.random_range(0.2..2.0));
        let e = rng.random_range(-4.0..4.0);
        let a = scatter(&spec, &leads, e).unwrap();
        let b = scatter(&spec, &leads.swapped(), e).unwrap();
        assert!((a.transmission_prob - b.transmission_prob).abs() <= 1e-10);
    }
}

#[test]
fn small_gain_loss_opens_antiresonances_at_f_chain_energies() {
    // at gamma = 0 the f chain is dark under symmetric contacts; a weak
    // gain/loss term side-couples it and carves dips next to its levels
    let spec = LatticeSpec::new(Topology::OpenLadder, 10).with_gamma(0.2);
    let check = detangled_transport_check(&spec, &LeadSpec::default(), &grid(-4.0, 4.0, 8001)).unwrap();
    let t = &check.transmission;
    let minima: Vec<f64> = (1..t.len() - 1)
        .filter(|&i| t[i].1 < t[i - 1].1 && t[i].1 <= t[i + 1].1)
        .map(|i| t[i].0)
        .collect();
    let in_band: Vec<f64> = check.f_energies.iter().copied().filter(|&e| e < 1.0).collect();
    let dips = in_band
        .iter()
        .filter(|&&e| minima.iter().any(|m| (m - e).abs() < 0.01))
        .count();
    assert_eq!(in_band.len(), 5);
    assert!(dips >= 4, "{dips} of {}", in_band.len());
}

#[test]
fn hermitian_resonances_track_the_p_chain() {
    let spec = LatticeSpec::new(Topology::OpenLadder, 100);
    let check = detangled_transport_check(&spec, &LeadSpec::default(), &grid(-4.0, 4.0, 801)).unwrap();
    assert!(check.resonances.iter().filter(|a| a.resolvable).count() > 70);
    assert!(check.all_resonances_aligned());
}

#[test]
fn lower_leg_contacts_show_no_antiresonance() {
    let spec = LatticeSpec::new(Topology::OpenLadder, 10);
    let leads = LeadSpec {
        couplings: [0.0, 1.0, 0.0, 1.0],
        ..LeadSpec::default()
    };
    let check = detangled_transport_check(&spec, &leads, &grid(-4.0, 4.0, 801)).unwrap();
    assert!(check.no_dips_below(0.01));
}
