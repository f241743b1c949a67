//! Two-time density correlation G(d, t1, t2) and scattering function
//! S(p, t1, t2) for a particle hopping on a two-site ring.

use qtdi::correlations::{dcf, isf, MomentumGrid};
use qtdi::dynamics::{build_hamiltonian, HamiltonianSpec};
use qtdi::hilbert::{build_basis, LatticeSpec, StateVector};

fn main() -> qtdi::Result<()> {
    let basis = build_basis(LatticeSpec::new(2, 1))?;
    let h = build_hamiltonian(&basis, &HamiltonianSpec::default())?;
    let spectrum = h.diagonalize();
    let psi = StateVector::fock(&basis, &[1, 0])?;
    let grid = MomentumGrid::new(2);

    let u1 = spectrum.propagator(0.0);
    for t2 in [0.0, 0.35, 0.7, 1.4] {
        let u2 = spectrum.propagator(t2);
        let g0 = dcf(&psi, &u1, &u2, 0)?.value;
        let g1 = dcf(&psi, &u1, &u2, 1)?.value;
        let s_pi = isf(&psi, &u1, &u2, grid.momentum(1))?.value;
        println!("t2 = {t2:4.2}: G(0) = {g0:.6}, G(1) = {g1:.6}, S(pi) = {s_pi:.6}");
    }
    Ok(())
}
