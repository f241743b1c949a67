//! Reconstruct Im Γ(d) from a recovered momentum scan and compare with the
//! exact coherent part.

use qtdi::cli::RunConfig;
use qtdi::correlations::{split_dcf_all, TwoTimeState};
use qtdi::exec::Parallelism;
use qtdi::recovery::{recover_im_gamma, recover_isf_scan};
use qtdi::scattering::{uniform_phases, NoiseSpec};

fn main() -> qtdi::Result<()> {
    let config = RunConfig::from_toml(include_str!("../configs/ring4_superposition.toml"))?;
    let exp = config.build()?;
    let pair = config.wavepackets()?;
    let spectrum = exp.hamiltonian.diagonalize();
    let tt = TwoTimeState::new(&exp.state, &spectrum.propagator(pair.t_alpha), &spectrum.propagator(pair.t_beta))?;
    let exact = split_dcf_all(&tt);
    let momenta: Vec<usize> = (0..tt.sites()).collect();

    let scan = recover_isf_scan(
        &exp.state,
        &exp.hamiltonian,
        &pair,
        &uniform_phases(16),
        &momenta,
        Some(NoiseSpec { shots: 1_000_000, seed: 11 }),
        Parallelism::Parallel,
    )?;
    let est = recover_im_gamma(&scan)?;
    println!("{:>2} {:>12} {:>10} {:>12}", "d", "Im Gamma", "sigma", "exact");
    for (d, s) in exact.iter().enumerate() {
        println!(
            "{d:>2} {:>12.6} {:>10.2e} {:>12.6}",
            est.reconstruction.im_gamma[d], est.sigma[d], s.coherent.im
        );
    }
    Ok(())
}
