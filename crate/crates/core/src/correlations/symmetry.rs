//! ±p symmetry decomposition, the Im Γ reconstruction, and symmetry checks.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::split::isf_split_all;
use super::{MomentumGrid, TwoTimeState};
use crate::dynamics::Propagator;
use crate::error::{QtdiError, Result};
use crate::hilbert::StateVector;

/// S± = [S(p) ± S(-p)] / 2
pub fn isf_sym_parts(s_plus_p: Complex64, s_minus_p: Complex64) -> (Complex64, Complex64) {
    ((s_plus_p + s_minus_p) * 0.5, (s_plus_p - s_minus_p) * 0.5)
}

/// Im Γ(d) recovered from ISF values on the full momentum grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImGammaReconstruction {
    /// Im S⁺(p) + Re S⁻(p) per grid momentum.
    pub combination: Vec<f64>,
    /// Σ_d Im Γ(d) e^{ipd} = Im S⁺(p) - i Re S⁻(p) per grid momentum.
    pub transform: Vec<Complex64>,
    /// Im Γ(d), d = 0..L-1.
    pub im_gamma: Vec<f64>,
    /// Largest imaginary part left by the inverse transform.
    pub imaginary_residual: f64,
}

/// Reconstruct Im Γ(d) from `S(p_m)` keyed by grid index `m`.
///
/// Because the equal-and-opposite momentum pairs enter only through S⁺ and S⁻,
/// `Im S⁺ - i Re S⁻` is Hermitian in p and its inverse transform is real.
pub fn reconstruct_im_gamma(
    grid: &MomentumGrid,
    samples: &BTreeMap<usize, Complex64>,
) -> Result<ImGammaReconstruction> {
    let missing: Vec<usize> = (0..grid.len()).filter(|m| !samples.contains_key(m)).collect();
    if !missing.is_empty() {
        return Err(QtdiError::Grid(format!(
            "incomplete momentum grid: missing indices {missing:?} of {}",
            grid.len()
        )));
    }
    if let Some(&m) = samples.keys().find(|&&m| m >= grid.len()) {
        return Err(QtdiError::Grid(format!("momentum index {m} is off the {}-point grid", grid.len())));
    }

    let mut combination = Vec::with_capacity(grid.len());
    let mut transform = Vec::with_capacity(grid.len());
    for m in 0..grid.len() {
        let (sp, sm) = isf_sym_parts(samples[&m], samples[&grid.negate(m)]);
        combination.push(sp.im + sm.re);
        transform.push(Complex64::new(sp.im, -sm.re));
    }
    let back = grid.inverse(&transform);
    let imaginary_residual = back.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
    Ok(ImGammaReconstruction {
        combination,
        transform,
        im_gamma: back.iter().map(|z| z.re).collect(),
        imaginary_residual,
    })
}

/// Maximum violations of the quantum and classical time-reversal symmetries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// max_d |G(d,t1,t2)* - G(-d,t2,t1)|
    pub dcf_quantum: f64,
    /// max_p |S(p,t1,t2)* - S(p,t2,t1)|
    pub isf_quantum: f64,
    /// max_p |S(p,t1,t2)* - S(-p,t1,t2)|; nonzero flags a coherent contribution
    pub isf_classical: f64,
    /// max_p |Re S⁻(p,t1,t2)|
    pub antisymmetric_real: f64,
    /// max_p |S_𝒢(p)* - S_𝒢(-p)| for the projective part alone
    pub projective_classical: f64,
}

impl SymmetryReport {
    pub fn quantum_violation(&self) -> f64 {
        self.dcf_quantum.max(self.isf_quantum)
    }
}

pub fn symmetry_check(psi: &StateVector, u1: &Propagator, u2: &Propagator) -> Result<SymmetryReport> {
    let forward = TwoTimeState::new(psi, u1, u2)?;
    let reversed = TwoTimeState::new(psi, u2, u1)?;
    let grid = forward.grid();

    let g12 = forward.dcf_all();
    let g21 = reversed.dcf_all();
    let s12 = grid.forward(&g12);
    let s21 = grid.forward(&g21);
    let split = isf_split_all(&forward);

    let mut report = SymmetryReport {
        dcf_quantum: 0.0,
        isf_quantum: 0.0,
        isf_classical: 0.0,
        antisymmetric_real: 0.0,
        projective_classical: 0.0,
    };
    for k in 0..grid.len() {
        let nk = grid.negate(k);
        report.dcf_quantum = report.dcf_quantum.max((g12[k].conj() - g21[nk]).norm());
        report.isf_quantum = report.isf_quantum.max((s12[k].conj() - s21[k]).norm());
        report.isf_classical = report.isf_classical.max((s12[k].conj() - s12[nk]).norm());
        let (_, minus) = isf_sym_parts(s12[k], s12[nk]);
        report.antisymmetric_real = report.antisymmetric_real.max(minus.re.abs());
        report.projective_classical = report
            .projective_classical
            .max((split[k].projective.conj() - split[nk].projective).norm());
    }
    Ok(report)
}
