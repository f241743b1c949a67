mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;

use common::*;
use qtdi::dynamics::{build_hamiltonian, HamiltonianSpec};
use qtdi::hilbert::{build_basis, LatticeSpec, Statistics};

/// Ring Hamiltonian assembled directly from occupation lists.
fn naive_hamiltonian(sites: usize, particles: usize, fermions: bool, spec: &HamiltonianSpec) -> DMatrix<Complex64> {
    let mut configs: Vec<Vec<usize>> = Vec::new();
    let mut stack = vec![(Vec::new(), 0usize)];
    while let Some((chosen, next)) = stack.pop() {
        if chosen.len() == particles {
            configs.push(chosen);
            continue;
        }
        for s in (next..sites).rev() {
            let mut c = chosen.clone();
            c.push(s);
            stack.push((c, s + 1));
        }
    }
    configs.sort();
    let occ = |c: &Vec<usize>, s: usize| c.contains(&s);
    let dim = configs.len();
    let mut h = DMatrix::zeros(dim, dim);
    let bonds: Vec<(usize, usize)> = match sites {
        1 => vec![],
        2 => vec![(0, 1)],
        _ => (0..sites).map(|i| (i, (i + 1) % sites)).collect(),
    };
    for (a, cfg) in configs.iter().enumerate() {
        let mut diag = 0.0;
        for &(i, j) in &bonds {
            if occ(cfg, i) && occ(cfg, j) {
                diag += spec.interaction;
            }
        }
        for &s in cfg {
            diag += spec.potentials[s];
        }
        h[(a, a)] += Complex64::new(diag, 0.0);
        for &(i, j) in &bonds {
            for (from, to) in [(i, j), (j, i)] {
                if occ(cfg, from) && !occ(cfg, to) {
                    let mut target: Vec<usize> = cfg.iter().map(|&s| if s == from { to } else { s }).collect();
                    target.sort();
                    let b = configs.iter().position(|c| *c == target).unwrap();
                    let (lo, hi) = (from.min(to), from.max(to));
                    let between = cfg.iter().filter(|&&s| s > lo && s < hi).count();
                    let sign = if fermions && between % 2 == 1 { -1.0 } else { 1.0 };
                    h[(b, a)] += Complex64::new(-spec.hopping * sign, 0.0);
                }
            }
        }
    }
    h
}

#[test]
fn matches_naive_construction() {
    let mut r = rng(2);
    for (sites, particles) in [(1, 1), (2, 1), (3, 1), (3, 2), (4, 2), (5, 2), (6, 3)] {
        for stats in [Statistics::HardCoreBoson, Statistics::SpinlessFermion] {
            let spec = random_hamiltonian_spec(&mut r, sites);
            let basis = build_basis(LatticeSpec::new(sites, particles).with_statistics(stats)).unwrap();
            let h = build_hamiltonian(&basis, &spec).unwrap();
            let naive = naive_hamiltonian(sites, particles, stats == Statistics::SpinlessFermion, &spec);
            assert!((h.matrix() - &naive).camax() < 1e-14, "L={sites} N={particles} {stats:?}");
        }
    }
}

#[test]
fn four_site_spectrum_matches_independent_build() {
    let spec = HamiltonianSpec {
        hopping: 1.0,
        interaction: 1.5,
        potentials: vec![0.0, 0.7, -0.4, 0.2],
    };
    let basis = build_basis(LatticeSpec::new(4, 2)).unwrap();
    let ours = build_hamiltonian(&basis, &spec).unwrap().diagonalize();
    let naive = naive_hamiltonian(4, 2, false, &spec);
    let mut theirs: Vec<f64> = naive.symmetric_eigenvalues().iter().copied().collect();
    theirs.sort_by(f64::total_cmp);
    for (a, b) in ours.energies.iter().zip(&theirs) {
        assert!((a - b).abs() < 1e-12);
    }
    // free fermions on a periodic ring: single-particle energies -2J cos k, summed
    let free = build_hamiltonian(
        &build_basis(LatticeSpec::new(4, 1)).unwrap(),
        &HamiltonianSpec {
            hopping: 1.0,
            interaction: 0.0,
            potentials: vec![0.0; 4],
        },
    )
    .unwrap()
    .diagonalize();
    for (e, want) in free.energies.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
        assert!((e - want).abs() < 1e-12);
    }
}

#[test]
fn spectral_round_trip_and_propagator_properties() {
    let mut r = rng(8);
    for _ in 0..20 {
        let inst = random_instance(&mut r, 6, 3);
        let h = inst.hamiltonian.matrix();
        assert!((inst.spectrum.reconstruct() - h).camax() < 1e-12);
        let (a, b) = (inst.t1, inst.t2);
        let ua = inst.spectrum.propagator(a);
        let ub = inst.spectrum.propagator(b);
        let uab = inst.spectrum.propagator(a + b);
        assert!((ua.matrix() * ub.matrix() - uab.matrix()).camax() < 1e-12);
        assert!(ua.unitarity_error() < 1e-12);
        assert!((ua.matrix() - expm_propagator(h, a)).camax() < 1e-10);

        let e0 = inst.hamiltonian.expectation(&inst.psi);
        let evolved = ub.apply(&inst.psi).unwrap();
        assert!((evolved.norm() - 1.0).abs() < 1e-12);
        assert!((inst.hamiltonian.expectation(&evolved) - e0).abs() < 1e-11);
    }
}
