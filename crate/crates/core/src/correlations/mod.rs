//! Two-time density correlations on the lattice.
//!
//! The couple correlation function is
//! `G(d, t1, t2) = Σ_s ⟨ψ| n_s(t1) n_{s+d}(t2) |ψ⟩` with Heisenberg-picture
//! densities, and the intermediate scattering function is its lattice
//! Fourier transform `S(p, t1, t2) = Σ_d G(d, t1, t2) e^{ipd}`.

mod grid;
mod split;
mod symmetry;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use grid::MomentumGrid;
pub(crate) use split::pair_overlap;
pub use split::{
    isf_split, isf_split_all, split_dcf, split_dcf_all, split_generic, CorrelationSplit, DEGENERACY_TOL,
};
pub use symmetry::{
    isf_sym_parts, reconstruct_im_gamma, symmetry_check, ImGammaReconstruction, SymmetryReport,
};

use crate::dynamics::{ensure_same_sector, Propagator};
use crate::error::{QtdiError, Result};
use crate::hilbert::{FockBasis, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordinate {
    Displacement(usize),
    Momentum(f64),
}

/// A correlator value tagged with its times and argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationValue {
    pub value: Complex64,
    pub t1: f64,
    pub t2: f64,
    pub coordinate: Coordinate,
}

/// Everything needed to evaluate correlators between t1 and t2: the evolved
/// states U(t1)ψ, U(t2)ψ and the intermediate evolution W = U(t2)U(t1)†.
#[derive(Debug, Clone)]
pub struct TwoTimeState {
    basis: Arc<FockBasis>,
    pub t1: f64,
    pub t2: f64,
    pub(crate) at_t1: DVector<Complex64>,
    pub(crate) at_t2: DVector<Complex64>,
    pub(crate) between: DMatrix<Complex64>,
}

impl TwoTimeState {
    pub fn new(psi: &StateVector, u1: &Propagator, u2: &Propagator) -> Result<Self> {
        ensure_same_sector(psi.basis(), u1.basis())?;
        ensure_same_sector(psi.basis(), u2.basis())?;
        let at_t1 = u1.matrix() * psi.amplitudes();
        let at_t2 = u2.matrix() * psi.amplitudes();
        let between = u2.matrix() * u1.matrix().adjoint();
        Ok(Self {
            basis: Arc::clone(psi.basis()),
            t1: u1.time,
            t2: u2.time,
            at_t1,
            at_t2,
            between,
        })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn sites(&self) -> usize {
        self.basis.sites()
    }

    pub fn grid(&self) -> MomentumGrid {
        MomentumGrid::new(self.sites())
    }

    /// G(d) for every displacement d = 0..L-1.
    pub fn dcf_all(&self) -> Vec<Complex64> {
        let b = &*self.basis;
        let (l, dim) = (b.sites(), b.dim());
        // v_q = W† n_q U(t2)ψ, so that ⟨ψ|n_s(t1) n_q(t2)|ψ⟩ = (U(t1)ψ)† n_s v_q
        let w_adj = self.between.adjoint();
        let projected: Vec<DVector<Complex64>> = (0..l)
            .map(|q| {
                let masked = DVector::from_fn(dim, |r, _| {
                    if b.occupied(r, q) {
                        self.at_t2[r]
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                &w_adj * masked
            })
            .collect();

        (0..l)
            .map(|d| {
                let mut g = Complex64::new(0.0, 0.0);
                for s in 0..l {
                    let v = &projected[(s + d) % l];
                    for r in 0..dim {
                        if b.occupied(r, s) {
                            g += self.at_t1[r].conj() * v[r];
                        }
                    }
                }
                g
            })
            .collect()
    }

    /// S(p_m) for every grid momentum.
    pub fn isf_all(&self) -> Vec<Complex64> {
        self.grid().forward(&self.dcf_all())
    }
}

/// Couple correlation function at displacement `d`.
pub fn dcf(psi: &StateVector, u1: &Propagator, u2: &Propagator, d: usize) -> Result<CorrelationValue> {
    let tt = TwoTimeState::new(psi, u1, u2)?;
    check_displacement(&tt, d)?;
    Ok(CorrelationValue {
        value: tt.dcf_all()[d],
        t1: tt.t1,
        t2: tt.t2,
        coordinate: Coordinate::Displacement(d),
    })
}

/// Intermediate scattering function at a grid momentum `p`.
pub fn isf(psi: &StateVector, u1: &Propagator, u2: &Propagator, p: f64) -> Result<CorrelationValue> {
    let tt = TwoTimeState::new(psi, u1, u2)?;
    let m = tt.grid().locate(p)?;
    Ok(CorrelationValue {
        value: tt.isf_all()[m],
        t1: tt.t1,
        t2: tt.t2,
        coordinate: Coordinate::Momentum(tt.grid().momentum(m)),
    })
}

pub(crate) fn check_displacement(tt: &TwoTimeState, d: usize) -> Result<()> {
    if d >= tt.sites() {
        return Err(QtdiError::Index {
            what: "displacement",
            index: d,
            len: tt.sites(),
        });
    }
    Ok(())
}
