//! The quantum time-reversal relations hold for every state; the classical
//! relation S(p)* = S(-p) fails once coherences contribute.

use qtdi::cli::RunConfig;
use qtdi::correlations::symmetry_check;
use qtdi::hilbert::StateVector;

fn main() -> qtdi::Result<()> {
    let config = RunConfig::from_toml(include_str!("../configs/ring4_superposition.toml"))?;
    let exp = config.build()?;
    let spectrum = exp.hamiltonian.diagonalize();
    let (t1, t2) = (config.times.t1, config.times.t2);

    let fock = StateVector::fock(&exp.basis, &[1, 0, 1, 0])?;
    for (name, psi, t1) in [("superposition", &exp.state, t1), ("Fock state at t1 = 0", &fock, 0.0)] {
        let r = symmetry_check(psi, &spectrum.propagator(t1), &spectrum.propagator(t2))?;
        println!("{name}:");
        println!("  quantum violation        {:.2e}", r.quantum_violation());
        println!("  classical violation      {:.2e}", r.isf_classical);
        println!("  max |Re S-|              {:.2e}", r.antisymmetric_real);
        println!("  projective part alone    {:.2e}", r.projective_classical);
    }
    Ok(())
}
