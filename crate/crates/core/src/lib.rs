//! Exact two-time density correlations of small lattice targets, their
//! projective/coherent decomposition, synthesized time-domain interferograms,
//! and the recovery of the complex intermediate scattering function from
//! phase scans.
//!
//! The pipeline, bottom-up:
//!
//! - [`hilbert`]: occupation basis, states and site densities.
//! - [`dynamics`]: ring Hamiltonians and exact propagators.
//! - [`correlations`]: G(d,t1,t2), S(p,t1,t2), the 𝒢 + Γ split, symmetries.
//! - [`scattering`]: two-pulse detection intensity and phase-scan interferograms.
//! - [`recovery`]: cosine fits, ISF momentum scans, Im Γ reconstruction.
//! - [`backaction`]: Monte Carlo of two consecutive projective measurements.
//! - [`cli`]: configuration files and the `qtdi` subcommands.

pub mod error;
pub mod exec;
pub mod hilbert;
pub mod dynamics;
pub mod correlations;
pub mod scattering;
pub mod recovery;
pub mod backaction;
pub mod cli;

pub use error::{QtdiError, Result};
