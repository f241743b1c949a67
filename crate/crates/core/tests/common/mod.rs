//! Shared fixtures and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qtdi::cli::{Experiment, RunConfig};
use qtdi::dynamics::{build_hamiltonian, Hamiltonian, HamiltonianSpec, Propagator, Spectrum};
use qtdi::hilbert::{build_basis, FockBasis, LatticeSpec, StateVector, Statistics};

pub const FIXTURE_TOML: &str = include_str!("../../configs/ring4_superposition.toml");

/// The frozen L = 4, N = 2 superposition with a large coherent part.
pub fn fixture() -> (RunConfig, Experiment) {
    let config = RunConfig::from_toml(FIXTURE_TOML).expect("fixture config parses");
    let exp = config.build().expect("fixture builds");
    (config, exp)
}

/// G(d) at the fixture times, d = 0..3, frozen on first evaluation.
pub const FIXTURE_G: [(f64, f64); 4] = [
    (0.6250931525211675, 0.17162710624136246),
    (1.4664843758650286, -0.33216665074865037),
    (0.444275188651588, 0.35400375632189796),
    (1.464147282962219, -0.19346421181461046),
];
pub const FIXTURE_PROJECTIVE: [f64; 4] = [0.7354794419276427, 1.3451434592729379, 0.5730075778335948, 1.3463695209658264];

pub struct Instance {
    pub basis: Arc<FockBasis>,
    pub hamiltonian: Hamiltonian,
    pub spectrum: Arc<Spectrum>,
    pub psi: StateVector,
    pub t1: f64,
    pub t2: f64,
}

impl Instance {
    pub fn propagators(&self) -> (Propagator, Propagator) {
        (self.spectrum.propagator(self.t1), self.spectrum.propagator(self.t2))
    }
}

pub fn random_spec(rng: &mut ChaCha8Rng, max_sites: usize, max_particles: usize) -> LatticeSpec {
    let sites = rng.random_range(1..=max_sites);
    let particles = rng.random_range(1..=max_particles.min(sites));
    let statistics = if rng.random_bool(0.5) {
        Statistics::HardCoreBoson
    } else {
        Statistics::SpinlessFermion
    };
    LatticeSpec::new(sites, particles).with_statistics(statistics)
}

pub fn random_hamiltonian_spec(rng: &mut ChaCha8Rng, sites: usize) -> HamiltonianSpec {
    HamiltonianSpec {
        hopping: rng.random_range(0.2..2.0),
        interaction: rng.random_range(-2.0..2.0),
        potentials: (0..sites).map(|_| rng.random_range(-1.0..1.0)).collect(),
    }
}

pub fn random_state(rng: &mut ChaCha8Rng, basis: &Arc<FockBasis>) -> StateVector {
    let amps = DVector::from_fn(basis.dim(), |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    StateVector::from_amplitudes(basis, amps).expect("random state").0
}

/// Random lattice, couplings, normalized state and times t1 < t2.
pub fn random_instance(rng: &mut ChaCha8Rng, max_sites: usize, max_particles: usize) -> Instance {
    let spec = random_spec(rng, max_sites, max_particles);
    let basis = build_basis(spec).unwrap();
    let hamiltonian = build_hamiltonian(&basis, &random_hamiltonian_spec(rng, spec.sites)).unwrap();
    let spectrum = hamiltonian.diagonalize();
    let psi = random_state(rng, &basis);
    let t1 = rng.random_range(0.0..2.0);
    let t2 = t1 + rng.random_range(0.05..2.0);
    Instance {
        basis,
        hamiltonian,
        spectrum,
        psi,
        t1,
        t2,
    }
}

/// Same as [`random_instance`] but starting from a random Fock state at t1 = 0.
pub fn random_fock_instance(rng: &mut ChaCha8Rng, max_sites: usize, max_particles: usize) -> Instance {
    let mut inst = random_instance(rng, max_sites, max_particles);
    let i = rng.random_range(0..inst.basis.dim());
    inst.psi = StateVector::basis_state(&inst.basis, i);
    inst.t2 -= inst.t1;
    inst.t1 = 0.0;
    inst
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// U(t) = exp(-iHt) by the matrix exponential, independent of the eigensolver.
pub fn expm_propagator(h: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    (h * Complex64::new(0.0, -t)).exp()
}

/// Brute-force split of G(d) from explicit Heisenberg projectors.
///
/// With P_r(t1) = U1†|r⟩⟨r|U1 and n_q(t2) = U2† n_q U2,
/// G(d) = Σ_s Σ_{r, r̄} n_s(r) ⟨ψ|P_r(t1) n_{s+d}(t2) P_r̄(t1)|ψ⟩,
/// the r = r̄ terms forming the projective part. Returns (G, projective, coherent).
pub fn triple_sum_split(
    basis: &FockBasis,
    h: &DMatrix<Complex64>,
    psi: &DVector<Complex64>,
    t1: f64,
    t2: f64,
    d: usize,
) -> (Complex64, Complex64, Complex64) {
    let (l, dim) = (basis.sites(), basis.dim());
    let u1 = expm_propagator(h, t1);
    let u2 = expm_propagator(h, t2);
    let a = &u1 * psi; // ⟨r|U1|ψ⟩
    // M[r][r̄] = ⟨r|U1 U2† n_q U2 U1†|r̄⟩ = Σ_r̃ W*_{r̃ r} n_q(r̃) W_{r̃ r̄}
    let w = &u2 * u1.adjoint();
    let occ = |r: usize, s: usize| -> f64 { basis.occupation(r)[s] as f64 };
    let mut total = Complex64::new(0.0, 0.0);
    let mut proj = Complex64::new(0.0, 0.0);
    for s in 0..l {
        let q = (s + d) % l;
        for r in 0..dim {
            if occ(r, s) == 0.0 {
                continue;
            }
            for rb in 0..dim {
                let mut m = Complex64::new(0.0, 0.0);
                for rt in 0..dim {
                    m += w[(rt, r)].conj() * occ(rt, q) * w[(rt, rb)];
                }
                let term = a[r].conj() * m * a[rb];
                total += term;
                if r == rb {
                    proj += term;
                }
            }
        }
    }
    (total, proj, total - proj)
}

/// G(d, t1, t2) from the brute-force split.
pub fn oracle_dcf(inst: &Instance, t1: f64, t2: f64, d: usize) -> Complex64 {
    triple_sum_split(&inst.basis, inst.hamiltonian.matrix(), inst.psi.amplitudes(), t1, t2, d).0
}

pub fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}
