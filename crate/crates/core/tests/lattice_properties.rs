use nalgebra::DMatrix;
use proptest::prelude::*;
use ptladder_core::lattice::{
    analytic_cll_spectrum, analytic_mll_spectrum, bloch_eigenvalues, build_real_space_hamiltonian, leg_exchange,
    LatticeSpec, Topology,
};
use ptladder_core::spectral::{lattice_spectrum, multiset_distance};
use ptladder_core::Complex64;

fn topology() -> impl Strategy<Value = Topology> {
    prop_oneof![
        Just(Topology::CircularPeriodic),
        Just(Topology::MoebiusPeriodic),
        Just(Topology::OpenLadder),
        Just(Topology::TwistedOpen),
    ]
}

fn pt_image(h: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| h[(leg_exchange(i), leg_exchange(j))].conj())
}

proptest! {
    #[test]
    fn real_space_matrix_is_complex_symmetric(
        top in topology(),
        half in 1usize..12,
        d in -2.0f64..2.0,
        t in -2.0f64..2.0,
        delta in -1.0f64..1.0,
        gamma in 0.0f64..4.0,
    ) {
        let spec = LatticeSpec::new(top, 2 * half).with_hops(d, t).with_delta(delta).with_gamma(gamma);
        let h = build_real_space_hamiltonian(&spec).unwrap();
        prop_assert_eq!(h.transpose(), h);
    }

    #[test]
    fn pt_commutes_without_detuning(
        top in topology(),
        half in 1usize..12,
        d in -2.0f64..2.0,
        t in -2.0f64..2.0,
        gamma in 0.0f64..4.0,
    ) {
        let spec = LatticeSpec::new(top, 2 * half).with_hops(d, t).with_gamma(gamma);
        let h = build_real_space_hamiltonian(&spec).unwrap();
        let diff = (pt_image(&h) - &h).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-14);
    }
}

#[test]
fn detuning_breaks_pt() {
    let spec = LatticeSpec::new(Topology::MoebiusPeriodic, 6).with_gamma(0.5).with_delta(0.3);
    let h = build_real_space_hamiltonian(&spec).unwrap();
    assert!((pt_image(&h) - &h).norm() > 0.1);
}

#[test]
fn hermitian_limit_has_real_spectrum() {
    for top in [Topology::CircularPeriodic, Topology::MoebiusPeriodic, Topology::OpenLadder, Topology::TwistedOpen] {
        let spec = LatticeSpec::new(top, 14).with_delta(0.7);
        let s = lattice_spectrum(&spec, false).unwrap();
        assert!(s.eigenvalues.iter().all(|e| e.im.abs() < 1e-10), "{top}");
    }
}

fn values(pairs: Vec<(Complex64, ptladder_core::lattice::Parity)>) -> Vec<Complex64> {
    pairs.into_iter().map(|p| p.0).collect()
}

#[test]
fn closed_forms_match_dense_spectra() {
    for n in [2, 4, 6, 10, 100] {
        let cll = LatticeSpec::new(Topology::CircularPeriodic, n);
        for gamma in [0.0, 1.0, 2.5] {
            let spec = cll.with_gamma(gamma);
            let dense = lattice_spectrum(&spec, false).unwrap().eigenvalues;
            let closed = values(analytic_cll_spectrum(&spec).unwrap());
            assert!(multiset_distance(&dense, &closed) <= 1e-10, "cll N={n} gamma={gamma}");
        }
        let mll = LatticeSpec::new(Topology::MoebiusPeriodic, n);
        let dense = lattice_spectrum(&mll, false).unwrap().eigenvalues;
        let closed = values(analytic_mll_spectrum(&mll).unwrap());
        assert!(multiset_distance(&dense, &closed) <= 1e-10, "mll N={n}");
    }
}

#[test]
fn moebius_without_rungs_is_one_long_ring() {
    for n in [4, 10, 30] {
        let spec = LatticeSpec::new(Topology::MoebiusPeriodic, n).with_hops(0.0, 1.0);
        let dense = lattice_spectrum(&spec, false).unwrap().eigenvalues;
        let ring: Vec<Complex64> = (0..2 * n)
            .map(|m| Complex64::new(-2.0 * (2.0 * std::f64::consts::PI * m as f64 / (2 * n) as f64).cos(), 0.0))
            .collect();
        assert!(multiset_distance(&dense, &ring) <= 1e-10, "N={n}");
    }
}

#[test]
fn decoupled_dimers() {
    for top in [Topology::CircularPeriodic, Topology::MoebiusPeriodic, Topology::TwistedOpen] {
        let spec = LatticeSpec::new(top, 8).with_hops(1.5, 0.0);
        let dense = lattice_spectrum(&spec, false).unwrap().eigenvalues;
        let want: Vec<Complex64> = (0..16).map(|i| Complex64::new(if i % 2 == 0 { 1.5 } else { -1.5 }, 0.0)).collect();
        assert!(multiset_distance(&dense, &want) <= 1e-10, "{top}");
    }
}

#[test]
fn bloch_bands_sample_the_ring_spectrum() {
    for (n, gamma, delta) in [(8, 0.0, 0.0), (12, 1.3, 0.0), (20, 2.7, 0.4), (100, 0.9, 0.0)] {
        let spec = LatticeSpec::new(Topology::CircularPeriodic, n).with_gamma(gamma).with_delta(delta);
        let dense = lattice_spectrum(&spec, false).unwrap().eigenvalues;
        let bloch: Vec<Complex64> = (1..=n)
            .flat_map(|m| {
                let (a, b) = bloch_eigenvalues(&spec, 2.0 * std::f64::consts::PI * m as f64 / n as f64);
                [a, b]
            })
            .collect();
        assert!(multiset_distance(&dense, &bloch) <= 1e-10, "N={n} gamma={gamma} delta={delta}");
    }
}
