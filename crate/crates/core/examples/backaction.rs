//! Consecutive projective density measurements estimate only the projective
//! part of G; the phase-scan channel returns the full correlator.

use qtdi::backaction::{compare_protocols, format_report};
use qtdi::cli::RunConfig;
use qtdi::exec::Parallelism;

fn main() -> qtdi::Result<()> {
    let config = RunConfig::from_toml(include_str!("../configs/ring4_superposition.toml"))?;
    let exp = config.build()?;
    let report = compare_protocols(
        &exp.state,
        &exp.hamiltonian,
        config.times.t1,
        config.times.t2,
        1_000_000,
        config.noise.seed,
        Parallelism::Parallel,
    )?;
    print!("{}", format_report(&report));
    Ok(())
}
