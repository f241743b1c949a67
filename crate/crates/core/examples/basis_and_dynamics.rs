//! Build the half-filled four-site ring, list its occupation basis, and check
//! the exact propagator against energy and norm conservation.

use nalgebra::DVector;
use num_complex::Complex64;
use qtdi::dynamics::{build_hamiltonian, HamiltonianSpec};
use qtdi::hilbert::{build_basis, LatticeSpec, StateVector};

fn main() -> qtdi::Result<()> {
    let basis = build_basis(LatticeSpec::new(4, 2))?;
    println!("basis of {} states:", basis.dim());
    for (i, occ) in basis.occupations().enumerate() {
        println!("  {i}: {occ:?}");
    }

    let h = build_hamiltonian(
        &basis,
        &HamiltonianSpec {
            hopping: 1.0,
            interaction: 1.5,
            potentials: vec![0.0, 0.7, -0.4, 0.2],
        },
    )?;
    let spectrum = h.diagonalize();
    println!("energies: {:?}", spectrum.energies.as_slice());

    let amps = DVector::from_fn(basis.dim(), |i, _| Complex64::new(1.0, 0.3 * i as f64));
    let (psi, _) = StateVector::from_amplitudes(&basis, amps)?;
    let e0 = h.expectation(&psi);
    for t in [0.5, 2.0, 10.0] {
        let u = spectrum.propagator(t);
        let evolved = u.apply(&psi)?;
        println!(
            "t = {t:5.1}: |1 - U†U| = {:.1e}, norm = {:.15}, ΔE = {:.1e}",
            u.unitarity_error(),
            evolved.norm(),
            h.expectation(&evolved) - e0
        );
    }
    Ok(())
}
