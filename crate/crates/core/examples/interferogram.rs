//! Intensity versus relative phase for two overlapped pulses, with and
//! without photon-count noise.

use qtdi::cli::RunConfig;
use qtdi::scattering::{interferogram, uniform_phases, DetectorConfig, NoiseSpec};

fn main() -> qtdi::Result<()> {
    let config = RunConfig::from_toml(include_str!("../configs/ring4_superposition.toml"))?;
    let exp = config.build()?;
    let pair = config.wavepackets()?;
    let phases = uniform_phases(12);
    let detector = DetectorConfig::overlapped(1);

    let exact = interferogram(&exp.state, &exp.hamiltonian, &pair, &detector, &phases, None)?;
    let noisy = interferogram(
        &exp.state,
        &exp.hamiltonian,
        &pair,
        &detector,
        &phases,
        Some(NoiseSpec { shots: 10_000, seed: 7 }),
    )?;
    println!("p = {:.4}", exact.meta.momentum);
    println!("{:>8} {:>10} {:>10} {:>8}", "phi", "exact", "noisy", "sigma");
    for (a, b) in exact.samples.iter().zip(&noisy.samples) {
        println!("{:>8.4} {:>10.6} {:>10.6} {:>8.4}", a.phi, a.intensity, b.intensity, b.sigma);
    }
    Ok(())
}
