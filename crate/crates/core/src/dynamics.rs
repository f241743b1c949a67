//! Lattice Hamiltonians and exact unitary evolution by full diagonalization.
//!
//! `H = -J Σ_<ij> (b†_i b_j + h.c.) + V Σ_<ij> n_i n_j + Σ_s v_s n_s` on a ring,
//! with ħ = 1. A two-site ring has a single bond.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QtdiError, Result};
use crate::hilbert::{FockBasis, StateVector, Statistics};

/// Absolute Hermiticity tolerance, scaled by max(1, max |H_ij|).
pub const HERMITIAN_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    /// Hopping amplitude J.
    pub hopping: f64,
    /// Nearest-neighbour density-density interaction.
    #[serde(default)]
    pub interaction: f64,
    /// On-site potentials, one per site; empty means all zero.
    #[serde(default)]
    pub potentials: Vec<f64>,
}

impl Default for HamiltonianSpec {
    fn default() -> Self {
        Self {
            hopping: 1.0,
            interaction: 0.0,
            potentials: Vec::new(),
        }
    }
}

/// Nearest-neighbour bonds of a ring of `sites` sites.
pub fn ring_bonds(sites: usize) -> Vec<(usize, usize)> {
    match sites {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1)],
        l => (0..l).map(|s| (s, (s + 1) % l)).collect(),
    }
}

#[derive(Debug, Clone)]
pub struct Hamiltonian {
    basis: Arc<FockBasis>,
    matrix: DMatrix<Complex64>,
}

impl Hamiltonian {
    /// Wrap an arbitrary matrix, checking dimension and Hermiticity.
    pub fn from_matrix(basis: &Arc<FockBasis>, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(QtdiError::Configuration(format!(
                "matrix is {}x{} but basis dimension is {}",
                matrix.nrows(),
                matrix.ncols(),
                basis.dim()
            )));
        }
        check_hermitian(&matrix, "Hamiltonian")?;
        Ok(Self {
            basis: Arc::clone(basis),
            matrix,
        })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn expectation(&self, state: &StateVector) -> f64 {
        let v = state.amplitudes();
        v.dotc(&(&self.matrix * v)).re
    }

    pub fn diagonalize(&self) -> Arc<Spectrum> {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
        Arc::new(Spectrum {
            basis: Arc::clone(&self.basis),
            energies,
            vectors,
        })
    }
}

pub(crate) fn check_hermitian(m: &DMatrix<Complex64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(QtdiError::Numeric(format!("{what} is not square")));
    }
    let scale = m.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    if worst > HERMITIAN_TOL * scale || !worst.is_finite() {
        return Err(QtdiError::Numeric(format!(
            "{what} is not Hermitian (max |M - M†| = {worst:e})"
        )));
    }
    Ok(())
}

/// Assemble the ring Hamiltonian over `basis`.
pub fn build_hamiltonian(basis: &Arc<FockBasis>, spec: &HamiltonianSpec) -> Result<Hamiltonian> {
    let l = basis.sites();
    if !spec.potentials.is_empty() && spec.potentials.len() != l {
        return Err(QtdiError::Configuration(format!(
            "{} on-site potentials given for {} sites",
            spec.potentials.len(),
            l
        )));
    }
    let fermions = basis.spec().statistics == Statistics::SpinlessFermion;
    let bonds = ring_bonds(l);
    let dim = basis.dim();
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);

    for i in 0..dim {
        let mask = basis.mask(i);
        let mut diag = 0.0;
        for (s, &v) in spec.potentials.iter().enumerate() {
            if basis.occupied(i, s) {
                diag += v;
            }
        }
        for &(a, b) in &bonds {
            let (na, nb) = (basis.occupied(i, a), basis.occupied(i, b));
            if na && nb {
                diag += spec.interaction;
            }
            let (from, to) = match (na, nb) {
                (true, false) => (a, b),
                (false, true) => (b, a),
                _ => continue,
            };
            let target = mask & !(1 << from) | 1 << to;
            let j = basis
                .index_of_mask(target)
                .expect("hopping preserves particle number");
            let sign = if fermions { jordan_wigner_sign(mask, from, to) } else { 1.0 };
            h[(j, i)] += Complex64::new(-spec.hopping * sign, 0.0);
        }
        h[(i, i)] += Complex64::new(diag, 0.0);
    }

    check_hermitian(&h, "assembled Hamiltonian")?;
    Ok(Hamiltonian {
        basis: Arc::clone(basis),
        matrix: h,
    })
}

/// (-1)^(number of occupied sites strictly between `from` and `to`).
fn jordan_wigner_sign(mask: u64, from: usize, to: usize) -> f64 {
    let (lo, hi) = if from < to { (from, to) } else { (to, from) };
    let between = if hi - lo > 1 {
        (mask >> (lo + 1)) & ((1u64 << (hi - lo - 1)) - 1)
    } else {
        0
    };
    if between.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hamiltonian.
#[derive(Debug, Clone)]
pub struct Spectrum {
    basis: Arc<FockBasis>,
    pub energies: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl Spectrum {
    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Σ_k E_k |k⟩⟨k|
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let d = DVector::from_iterator(self.dim(), self.energies.iter().map(|&e| Complex64::new(e, 0.0)));
        &self.vectors * DMatrix::from_diagonal(&d) * self.vectors.adjoint()
    }

    pub fn propagator(self: &Arc<Self>, time: f64) -> Propagator {
        let phases = DVector::from_iterator(
            self.dim(),
            self.energies.iter().map(|&e| Complex64::from_polar(1.0, -e * time)),
        );
        let matrix = &self.vectors * DMatrix::from_diagonal(&phases) * self.vectors.adjoint();
        Propagator {
            time,
            matrix,
            spectrum: Arc::clone(self),
        }
    }
}

/// U(t) = exp(-iHt).
#[derive(Debug, Clone)]
pub struct Propagator {
    pub time: f64,
    matrix: DMatrix<Complex64>,
    spectrum: Arc<Spectrum>,
}

impl Propagator {
    /// Diagonalize `h` and build U(t).
    pub fn new(h: &Hamiltonian, time: f64) -> Self {
        h.diagonalize().propagator(time)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn spectrum(&self) -> &Arc<Spectrum> {
        &self.spectrum
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        self.spectrum.basis()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        ensure_same_sector(state.basis(), self.basis())?;
        Ok(StateVector::from_normalized(
            Arc::clone(state.basis()),
            &self.matrix * state.amplitudes(),
        ))
    }

    /// max |U†U - I|
    pub fn unitarity_error(&self) -> f64 {
        let p = self.matrix.adjoint() * &self.matrix;
        max_deviation_from_identity(&p)
    }
}

pub(crate) fn max_deviation_from_identity(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let id = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m[(i, j)] - Complex64::new(id, 0.0)).norm());
        }
    }
    worst
}

pub(crate) fn ensure_same_sector(a: &FockBasis, b: &FockBasis) -> Result<()> {
    if a.spec() != b.spec() || a.dim() != b.dim() {
        return Err(QtdiError::Configuration(format!(
            "basis mismatch: {:?} vs {:?}",
            a.spec(),
            b.spec()
        )));
    }
    Ok(())
}

/// Heisenberg-picture operator U† · op · U.
pub fn heisenberg(op: &DMatrix<Complex64>, u: &Propagator) -> Result<DMatrix<Complex64>> {
    if op.nrows() != u.dim() || op.ncols() != u.dim() {
        return Err(QtdiError::Configuration(format!(
            "operator is {}x{} but propagator dimension is {}",
            op.nrows(),
            op.ncols(),
            u.dim()
        )));
    }
    Ok(u.matrix.adjoint() * op * &u.matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_basis, density_operator, LatticeSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_site() -> Hamiltonian {
        let b = build_basis(LatticeSpec::new(2, 1)).unwrap();
        build_hamiltonian(&b, &HamiltonianSpec::default()).unwrap()
    }

    #[test]
    fn two_site_single_particle_matrix() {
        let h = two_site();
        let m = h.matrix();
        assert_eq!(m[(0, 0)], c(0.0, 0.0));
        assert_eq!(m[(0, 1)], c(-1.0, 0.0));
        assert_eq!(m[(1, 0)], c(-1.0, 0.0));
        assert_eq!(m[(1, 1)], c(0.0, 0.0));
    }

    #[test]
    fn fully_occupied_pair_is_interaction_only() {
        let b = build_basis(LatticeSpec::new(2, 2)).unwrap();
        let spec = HamiltonianSpec {
            hopping: 1.0,
            interaction: 2.5,
            potentials: vec![],
        };
        let h = build_hamiltonian(&b, &spec).unwrap();
        assert_eq!(h.dim(), 1);
        assert_eq!(h.matrix()[(0, 0)], c(2.5, 0.0));
    }

    #[test]
    fn potential_length_mismatch() {
        let b = build_basis(LatticeSpec::new(3, 1)).unwrap();
        let spec = HamiltonianSpec {
            potentials: vec![0.0, 1.0],
            ..Default::default()
        };
        assert!(matches!(build_hamiltonian(&b, &spec), Err(QtdiError::Configuration(_))));
    }

    #[test]
    fn non_hermitian_matrix_rejected() {
        let b = build_basis(LatticeSpec::new(2, 1)).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(Hamiltonian::from_matrix(&b, m), Err(QtdiError::Numeric(_))));
    }

    #[test]
    fn fermion_wrap_bond_sign() {
        // two fermions on a 3-ring: hopping across the wrap bond passes one particle
        let b = build_basis(LatticeSpec::new(3, 2).with_statistics(Statistics::SpinlessFermion)).unwrap();
        let h = build_hamiltonian(&b, &HamiltonianSpec::default()).unwrap();
        let i = b.index_of(&[1, 1, 0]).unwrap();
        let j = b.index_of(&[0, 1, 1]).unwrap();
        // site 0 -> site 2 jumps over the particle at site 1
        assert_eq!(h.matrix()[(j, i)], c(1.0, 0.0));
        let k = b.index_of(&[1, 0, 1]).unwrap();
        // site 1 -> site 2 is adjacent
        assert_eq!(h.matrix()[(k, i)], c(-1.0, 0.0));
    }

    #[test]
    fn zero_time_is_identity() {
        let u = Propagator::new(&two_site(), 0.0);
        assert!(max_deviation_from_identity(u.matrix()) < 1e-14);
    }

    #[test]
    fn two_site_closed_form() {
        // oracle: truncated power series of exp(-iHt) for H = -σx
        let h = two_site();
        let spectrum = h.diagonalize();
        for &t in &[0.3, 1.1, -2.4, 5.0] {
            let u = spectrum.propagator(t);
            let a = h.matrix() * c(0.0, -t);
            let mut term = DMatrix::<Complex64>::identity(2, 2);
            let mut series = term.clone();
            for k in 1..60 {
                term = &term * &a / c(k as f64, 0.0);
                series += &term;
            }

            let closed = DMatrix::from_row_slice(
                2,
                2,
                &[c(t.cos(), 0.0), c(0.0, t.sin()), c(0.0, t.sin()), c(t.cos(), 0.0)],
            );
            assert!((u.matrix() - &series).camax() < 1e-12);
            assert!((u.matrix() - &closed).camax() < 1e-12);
        }
    }

    #[test]
    fn heisenberg_density_two_site() {
        let h = two_site();
        let b = h.basis().clone();
        let n0 = density_operator(&b, 0).unwrap().to_matrix();
        for &t in &[0.0, 0.4, 1.3] {
            let u = Propagator::new(&h, t);
            let n0t = heisenberg(&n0, &u).unwrap();
            assert!((n0t[(0, 0)].re - t.cos().powi(2)).abs() < 1e-12);
            assert!(n0t[(0, 0)].im.abs() < 1e-12);
            assert!((&n0t - n0t.adjoint()).camax() < 1e-12);
        }
    }

    #[test]
    fn heisenberg_identity_propagator() {
        let h = two_site();
        let u = Propagator::new(&h, 0.0);
        let n0 = density_operator(h.basis(), 0).unwrap().to_matrix();
        assert!((heisenberg(&n0, &u).unwrap() - &n0).camax() < 1e-14);
        assert!(heisenberg(&DMatrix::identity(3, 3), &u).is_err());
    }
}
