//! Projective/coherent decomposition of two-time correlators.
//!
//! Inserting the eigenprojectors `Π_j(t1)` of the first observable on both
//! sides of `C = ⟨ψ|A(t1)B(t2)|ψ⟩` gives `C = 𝒞 + K`, where the diagonal terms
//! `𝒞 = Σ_j a_j ⟨ψ|Π_j(t1) B(t2) Π_j(t1)|ψ⟩` are Born-rule joint statistics of
//! two consecutive projective measurements and `K` collects the j ≠ m
//! cross terms weighted by the coherences of U(t1)ψ.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_displacement, TwoTimeState};
use crate::dynamics::{check_hermitian, heisenberg, Propagator};
use crate::error::{QtdiError, Result};
use crate::hilbert::StateVector;

/// Eigenvalues of the first observable closer than this share one projector.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSplit {
    /// Born-rule part, real by construction.
    pub projective: Complex64,
    pub coherent: Complex64,
    pub total: Complex64,
}

impl CorrelationSplit {
    /// |total - projective - coherent|
    pub fn closure_error(&self) -> f64 {
        (self.total - self.projective - self.coherent).norm()
    }
}

struct Eigenspace {
    value: f64,
    projector: DMatrix<Complex64>,
}

fn eigenspaces(a: &DMatrix<Complex64>) -> Vec<Eigenspace> {
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for k in order {
        let e = eig.eigenvalues[k];
        match groups.last_mut() {
            Some(g) if e - last <= DEGENERACY_TOL => g.push(k),
            _ => groups.push(vec![k]),
        }
        last = e;
    }

    groups
        .into_iter()
        .map(|g| {
            let value = g.iter().map(|&k| eig.eigenvalues[k]).sum::<f64>() / g.len() as f64;
            let n = a.nrows();
            let mut projector = DMatrix::zeros(n, n);
            for &k in &g {
                let v = eig.eigenvectors.column(k);
                projector += v * v.adjoint();
            }
            Eigenspace { value, projector }
        })
        .collect()
}

/// Split `⟨ψ|A(t1) B(t2)|ψ⟩` for arbitrary Hermitian `A`, `B`.
///
/// Degenerate eigenvalues of `A` (within [`DEGENERACY_TOL`]) are merged into
/// one eigenprojector before the j ≠ m exclusion.
pub fn split_generic(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    psi: &StateVector,
    u1: &Propagator,
    u2: &Propagator,
) -> Result<CorrelationSplit> {
    check_hermitian(a, "first observable")?;
    check_hermitian(b, "second observable")?;
    if a.nrows() != psi.dim() || b.nrows() != psi.dim() {
        return Err(QtdiError::Configuration(format!(
            "observables of dimension {}/{} for a state of dimension {}",
            a.nrows(),
            b.nrows(),
            psi.dim()
        )));
    }
    let tt = TwoTimeState::new(psi, u1, u2)?;
    let v = psi.amplitudes();
    let total = v.dotc(&(heisenberg(a, u1)? * heisenberg(b, u2)? * v));

    let spaces = eigenspaces(a);
    // W Π_j U(t1)ψ for each eigenspace
    let branches: Vec<DVector<Complex64>> = spaces
        .iter()
        .map(|e| &tt.between * (&e.projector * &tt.at_t1))
        .collect();
    let projective: f64 = spaces
        .iter()
        .zip(&branches)
        .map(|(e, eta)| e.value * eta.dotc(&(b * eta)).re)
        .sum();

    let split = CorrelationSplit {
        projective: Complex64::new(projective, 0.0),
        coherent: total - projective,
        total,
    };
    if cfg!(debug_assertions) && psi.dim() <= 64 {
        let mut explicit = Complex64::new(0.0, 0.0);
        for (j, ej) in spaces.iter().enumerate() {
            for (m, em) in branches.iter().enumerate() {
                if j != m {
                    explicit += ej.value * branches[j].dotc(&(b * em));
                }
            }
        }
        let scale = 1.0 + total.norm();
        debug_assert!(
            (explicit - split.coherent).norm() < 1e-9 * scale,
            "coherent part disagrees with explicit cross-term sum"
        );
    }
    Ok(split)
}

/// Displacement-resolved split of G: the first measurement resolves the full
/// particle configuration at t1 (the joint eigenbasis of every site density).
pub fn split_dcf_all(tt: &TwoTimeState) -> Vec<CorrelationSplit> {
    let total = tt.dcf_all();
    let projective = projective_dcf(tt);
    let splits: Vec<CorrelationSplit> = total
        .iter()
        .zip(&projective)
        .map(|(&g, &gp)| CorrelationSplit {
            projective: Complex64::new(gp, 0.0),
            coherent: g - gp,
            total: g,
        })
        .collect();
    if cfg!(debug_assertions) && tt.basis().dim() <= 64 {
        for (d, s) in splits.iter().enumerate() {
            let explicit = coherent_dcf_explicit(tt, d);
            debug_assert!(
                (explicit - s.coherent).norm() < 1e-9 * (1.0 + s.total.norm()),
                "Γ({d}) disagrees with explicit cross-term sum"
            );
        }
    }
    splits
}

pub fn split_dcf(psi: &StateVector, u1: &Propagator, u2: &Propagator, d: usize) -> Result<CorrelationSplit> {
    let tt = TwoTimeState::new(psi, u1, u2)?;
    check_displacement(&tt, d)?;
    Ok(split_dcf_all(&tt)[d])
}

/// Number of sites s with n_s(r) = 1 and n_{s+d}(r̃) = 1.
#[inline]
pub(crate) fn pair_overlap(first: u64, second: u64, d: usize, sites: usize) -> u32 {
    let full = if sites == 64 { u64::MAX } else { (1u64 << sites) - 1 };
    // bit s of `shifted` is bit (s + d) mod L of `second`
    let shifted = if d == 0 {
        second
    } else {
        ((second >> d) | (second << (sites - d))) & full
    };
    (first & shifted).count_ones()
}

/// 𝒢(d) = Σ_{r, r̃} |ψ_r(t1)|² |⟨r̃|W|r⟩|² Σ_s n_s(r) n_{s+d}(r̃)
fn projective_dcf(tt: &TwoTimeState) -> Vec<f64> {
    let b = tt.basis();
    let (l, dim) = (b.sites(), b.dim());
    let mut out = vec![0.0; l];
    for r in 0..dim {
        let p = tt.at_t1[r].norm_sqr();
        if p == 0.0 {
            continue;
        }
        for rt in 0..dim {
            let joint = p * tt.between[(rt, r)].norm_sqr();
            for (d, o) in out.iter_mut().enumerate() {
                *o += joint * pair_overlap(b.mask(r), b.mask(rt), d, l) as f64;
            }
        }
    }
    out
}

/// Γ(d) from the explicit r ≠ r̄ triple sum.
pub(crate) fn coherent_dcf_explicit(tt: &TwoTimeState, d: usize) -> Complex64 {
    let b = tt.basis();
    let (l, dim) = (b.sites(), b.dim());
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..dim {
        for rb in 0..dim {
            if r == rb {
                continue;
            }
            let coherence = tt.at_t1[r].conj() * tt.at_t1[rb];
            if coherence.norm() == 0.0 {
                continue;
            }
            for rt in 0..dim {
                let k = pair_overlap(b.mask(r), b.mask(rt), d, l);
                if k > 0 {
                    acc += coherence * tt.between[(rt, r)].conj() * tt.between[(rt, rb)] * k as f64;
                }
            }
        }
    }
    acc
}

/// Momentum-resolved split, S = S_𝒢 + S_Γ, on the full grid.
pub fn isf_split_all(tt: &TwoTimeState) -> Vec<CorrelationSplit> {
    let splits = split_dcf_all(tt);
    let grid = tt.grid();
    let proj = grid.forward(&splits.iter().map(|s| s.projective).collect::<Vec<_>>());
    let coh = grid.forward(&splits.iter().map(|s| s.coherent).collect::<Vec<_>>());
    let tot = grid.forward(&splits.iter().map(|s| s.total).collect::<Vec<_>>());
    (0..grid.len())
        .map(|m| CorrelationSplit {
            projective: proj[m],
            coherent: coh[m],
            total: tot[m],
        })
        .collect()
}

pub fn isf_split(psi: &StateVector, u1: &Propagator, u2: &Propagator, p: f64) -> Result<CorrelationSplit> {
    let tt = TwoTimeState::new(psi, u1, u2)?;
    let m = tt.grid().locate(p)?;
    Ok(isf_split_all(&tt)[m])
}
