//! Occupation-number Hilbert space for N particles on a periodic ring of L sites.
//!
//! At most one particle sits on a site, so every basis state is a subset of
//! occupied sites. Basis states are ordered lexicographically by their sorted
//! list of occupied sites, which puts `(1,0,..)` before `(0,1,..)`.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QtdiError, Result};

/// Norm tolerance a [`StateVector`] must satisfy.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Statistics {
    #[default]
    HardCoreBoson,
    SpinlessFermion,
}

/// Sites, particle number and exchange statistics of a periodic 1D lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub sites: usize,
    pub particles: usize,
    #[serde(default)]
    pub statistics: Statistics,
}

impl LatticeSpec {
    pub fn new(sites: usize, particles: usize) -> Self {
        Self {
            sites,
            particles,
            statistics: Statistics::HardCoreBoson,
        }
    }

    pub fn with_statistics(mut self, statistics: Statistics) -> Self {
        self.statistics = statistics;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites == 0 {
            return Err(QtdiError::Configuration("lattice needs at least one site".into()));
        }
        if self.sites > 64 {
            return Err(QtdiError::Configuration(format!(
                "at most 64 sites are supported, got {}",
                self.sites
            )));
        }
        if self.particles > self.sites {
            return Err(QtdiError::Capacity {
                sites: self.sites,
                particles: self.particles,
            });
        }
        Ok(())
    }

    /// binomial(L, N)
    pub fn dimension(&self) -> usize {
        binomial(self.sites, self.particles)
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Enumerated occupation configurations, the common eigenbasis of all site densities.
#[derive(Debug, Clone)]
pub struct FockBasis {
    spec: LatticeSpec,
    states: Vec<Vec<u8>>,
    masks: Vec<u64>,
    index: HashMap<u64, usize>,
}

impl FockBasis {
    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    pub fn sites(&self) -> usize {
        self.spec.sites
    }

    pub fn particles(&self) -> usize {
        self.spec.particles
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn occupation(&self, i: usize) -> &[u8] {
        &self.states[i]
    }

    pub fn occupations(&self) -> impl Iterator<Item = &[u8]> {
        self.states.iter().map(|s| s.as_slice())
    }

    /// Bitmask with bit `s` set when site `s` is occupied.
    pub fn mask(&self, i: usize) -> u64 {
        self.masks[i]
    }

    pub fn index_of(&self, occupation: &[u8]) -> Option<usize> {
        if occupation.len() != self.spec.sites || occupation.iter().any(|&n| n > 1) {
            return None;
        }
        self.index_of_mask(occupation_mask(occupation))
    }

    pub fn index_of_mask(&self, mask: u64) -> Option<usize> {
        self.index.get(&mask).copied()
    }

    /// Occupation `n_site` of basis state `i`.
    #[inline]
    pub fn occupied(&self, i: usize, site: usize) -> bool {
        self.masks[i] >> site & 1 == 1
    }
}

fn occupation_mask(occupation: &[u8]) -> u64 {
    occupation
        .iter()
        .enumerate()
        .filter(|(_, &n)| n == 1)
        .fold(0u64, |m, (s, _)| m | 1 << s)
}

/// Enumerate all N-particle configurations in lexicographic order of occupied sites.
pub fn build_basis(spec: LatticeSpec) -> Result<Arc<FockBasis>> {
    spec.validate()?;
    let (l, n) = (spec.sites, spec.particles);
    let mut states = Vec::with_capacity(spec.dimension());
    let mut chosen: Vec<usize> = (0..n).collect();
    loop {
        let mut occ = vec![0u8; l];
        for &s in &chosen {
            occ[s] = 1;
        }
        states.push(occ);

        // advance to the next combination; n = 0 has exactly one state
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(Arc::new(finish_basis(spec, states)));
            }
            k -= 1;
            if chosen[k] < l - n + k {
                chosen[k] += 1;
                for j in k + 1..n {
                    chosen[j] = chosen[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn finish_basis(spec: LatticeSpec, states: Vec<Vec<u8>>) -> FockBasis {
    let masks: Vec<u64> = states.iter().map(|s| occupation_mask(s)).collect();
    let index = masks.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    FockBasis {
        spec,
        states,
        masks,
        index,
    }
}

/// Normalized many-body state over a [`FockBasis`].
#[derive(Debug, Clone)]
pub struct StateVector {
    basis: Arc<FockBasis>,
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    pub fn fock(basis: &Arc<FockBasis>, occupation: &[u8]) -> Result<Self> {
        let i = basis.index_of(occupation).ok_or_else(|| {
            QtdiError::Configuration(format!(
                "occupation {occupation:?} is not a configuration of {} particles on {} sites",
                basis.particles(),
                basis.sites()
            ))
        })?;
        Ok(Self::basis_state(basis, i))
    }

    pub fn basis_state(basis: &Arc<FockBasis>, i: usize) -> Self {
        let mut amplitudes = DVector::zeros(basis.dim());
        amplitudes[i] = Complex64::new(1.0, 0.0);
        Self {
            basis: Arc::clone(basis),
            amplitudes,
        }
    }

    /// Equal-weight superposition of the listed configurations.
    pub fn uniform_superposition(basis: &Arc<FockBasis>, configurations: &[Vec<u8>]) -> Result<Self> {
        if configurations.is_empty() {
            return Err(QtdiError::Configuration("superposition needs at least one configuration".into()));
        }
        let mut amplitudes = DVector::zeros(basis.dim());
        for occ in configurations {
            let i = basis.index_of(occ).ok_or_else(|| {
                QtdiError::Configuration(format!("occupation {occ:?} is not in the basis"))
            })?;
            amplitudes[i] += Complex64::new(1.0, 0.0);
        }
        Self::from_amplitudes(basis, amplitudes).map(|(s, _)| s)
    }

    /// Build from raw amplitudes, renormalizing. The flag is `true` when the
    /// input norm differed from one by more than 1e-9.
    pub fn from_amplitudes(basis: &Arc<FockBasis>, amplitudes: DVector<Complex64>) -> Result<(Self, bool)> {
        if amplitudes.len() != basis.dim() {
            return Err(QtdiError::Configuration(format!(
                "{} amplitudes supplied for a basis of dimension {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(QtdiError::Numeric("state amplitudes have zero or non-finite norm".into()));
        }
        let renormalized = (norm - 1.0).abs() > 1e-9;
        Ok((
            Self {
                basis: Arc::clone(basis),
                amplitudes: amplitudes.unscale(norm),
            },
            renormalized,
        ))
    }

    /// Wrap an already normalized vector (used after unitary evolution).
    pub(crate) fn from_normalized(basis: Arc<FockBasis>, amplitudes: DVector<Complex64>) -> Self {
        debug_assert!((amplitudes.norm() - 1.0).abs() < 1e-10);
        Self { basis, amplitudes }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Born probabilities |ψ_r|² per configuration.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Site density `n_s`, stored as its diagonal in the Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    pub site: usize,
    pub diagonal: Vec<f64>,
}

impl DensityOperator {
    pub fn apply(&self, state: &DVector<Complex64>) -> DVector<Complex64> {
        DVector::from_iterator(
            state.len(),
            state.iter().zip(&self.diagonal).map(|(a, &n)| a * n),
        )
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.diagonal.len(),
            self.diagonal.iter().map(|&n| Complex64::new(n, 0.0)),
        ))
    }
}

pub fn density_operator(basis: &FockBasis, site: usize) -> Result<DensityOperator> {
    if site >= basis.sites() {
        return Err(QtdiError::Index {
            what: "site",
            index: site,
            len: basis.sites(),
        });
    }
    let diagonal = (0..basis.dim())
        .map(|i| if basis.occupied(i, site) { 1.0 } else { 0.0 })
        .collect();
    Ok(DensityOperator { site, diagonal })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sites_one_particle() {
        let b = build_basis(LatticeSpec::new(2, 1)).unwrap();
        assert_eq!(b.dim(), 2);
        assert_eq!(b.occupation(0), &[1, 0]);
        assert_eq!(b.occupation(1), &[0, 1]);
    }

    #[test]
    fn dimensions_are_binomial() {
        assert_eq!(build_basis(LatticeSpec::new(4, 2)).unwrap().dim(), 6);
        assert_eq!(build_basis(LatticeSpec::new(6, 3)).unwrap().dim(), 20);
        assert_eq!(build_basis(LatticeSpec::new(5, 0)).unwrap().dim(), 1);
        assert_eq!(build_basis(LatticeSpec::new(5, 5)).unwrap().dim(), 1);
        assert_eq!(build_basis(LatticeSpec::new(1, 1)).unwrap().dim(), 1);
    }

    #[test]
    fn capacity_error() {
        let err = build_basis(LatticeSpec::new(3, 4)).unwrap_err();
        assert!(matches!(err, QtdiError::Capacity { sites: 3, particles: 4 }));
    }

    #[test]
    fn zero_sites_rejected() {
        assert!(build_basis(LatticeSpec::new(0, 0)).is_err());
    }

    #[test]
    fn order_is_lexicographic_and_index_round_trips() {
        let b = build_basis(LatticeSpec::new(5, 2)).unwrap();
        let occupied: Vec<Vec<usize>> = b
            .occupations()
            .map(|o| o.iter().enumerate().filter(|(_, &n)| n == 1).map(|(s, _)| s).collect())
            .collect();
        assert!(occupied.windows(2).all(|w| w[0] < w[1]));
        for i in 0..b.dim() {
            assert_eq!(b.index_of(b.occupation(i)), Some(i));
        }
    }

    #[test]
    fn density_diagonals() {
        let b = build_basis(LatticeSpec::new(2, 1)).unwrap();
        assert_eq!(density_operator(&b, 0).unwrap().diagonal, vec![1.0, 0.0]);
        assert_eq!(density_operator(&b, 1).unwrap().diagonal, vec![0.0, 1.0]);
        assert!(matches!(
            density_operator(&b, 2),
            Err(QtdiError::Index { index: 2, len: 2, .. })
        ));
    }

    #[test]
    fn densities_sum_to_particle_number() {
        for (l, n) in [(1, 0), (1, 1), (3, 1), (4, 2), (6, 3), (7, 4)] {
            let b = build_basis(LatticeSpec::new(l, n)).unwrap();
            let mut total = vec![0.0; b.dim()];
            for s in 0..l {
                let d = density_operator(&b, s).unwrap();
                assert!(d.diagonal.iter().all(|&x| x == 0.0 || x == 1.0));
                for (t, x) in total.iter_mut().zip(&d.diagonal) {
                    *t += x;
                }
            }
            assert!(total.iter().all(|&t| t == n as f64));
        }
    }

    #[test]
    fn explicit_amplitudes_are_renormalized() {
        let b = build_basis(LatticeSpec::new(2, 1)).unwrap();
        let amps = DVector::from_vec(vec![Complex64::new(3.0, 0.0), Complex64::new(0.0, 4.0)]);
        let (psi, flagged) = StateVector::from_amplitudes(&b, amps).unwrap();
        assert!(flagged);
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        assert!((psi.probabilities()[0] - 0.36).abs() < 1e-12);
    }

    #[test]
    fn fock_state_must_be_in_sector() {
        let b = build_basis(LatticeSpec::new(3, 1)).unwrap();
        assert!(StateVector::fock(&b, &[1, 1, 0]).is_err());
        assert!(StateVector::fock(&b, &[0, 1, 0]).is_ok());
    }
}
