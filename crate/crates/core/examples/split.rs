//! Decompose G(d) into the part seen by consecutive projective measurements
//! and the coherent remainder Γ.

use qtdi::cli::RunConfig;
use qtdi::correlations::{split_dcf_all, TwoTimeState};

fn main() -> qtdi::Result<()> {
    let config = RunConfig::from_toml(include_str!("../configs/ring4_superposition.toml"))?;
    let exp = config.build()?;
    let spectrum = exp.hamiltonian.diagonalize();
    let (t1, t2) = (config.times.t1, config.times.t2);
    let tt = TwoTimeState::new(&exp.state, &spectrum.propagator(t1), &spectrum.propagator(t2))?;

    println!("{:>2} {:>22} {:>10} {:>22}", "d", "G", "proj", "Gamma");
    for (d, s) in split_dcf_all(&tt).iter().enumerate() {
        println!(
            "{d:>2} {:>10.6} {:>+10.6}i {:>10.6} {:>10.6} {:>+10.6}i",
            s.total.re, s.total.im, s.projective.re, s.coherent.re, s.coherent.im
        );
    }

    // the product state has no coherences in the occupation basis at t1 = 0
    let psi = qtdi::hilbert::StateVector::fock(&exp.basis, &[1, 0, 1, 0])?;
    let tt0 = TwoTimeState::new(&psi, &spectrum.propagator(0.0), &spectrum.propagator(t2))?;
    let max_gamma = split_dcf_all(&tt0).iter().map(|s| s.coherent.norm()).fold(0.0, f64::max);
    println!("Fock state at t1 = 0: max |Gamma| = {max_gamma:.2e}");
    Ok(())
}
