use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{build_hamiltonian, Hamiltonian, HamiltonianSpec};
use crate::error::{QtdiError, Result};
use crate::hilbert::{build_basis, FockBasis, LatticeSpec, StateVector};
use crate::scattering::{EnvelopeShape, NoiseSpec, WavepacketPair};

/// Default shot count of the consecutive-measurement protocol.
pub const DEFAULT_PROTOCOL_SHOTS: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Fock { occupation: Vec<u8> },
    Superposition { configurations: Vec<Vec<u8>> },
    /// `[re, im]` per basis state, in basis order.
    Amplitudes { amplitudes: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Times {
    pub t1: f64,
    pub t2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MomentaSpec {
    Keyword(String),
    List(Vec<usize>),
}

impl Default for MomentaSpec {
    fn default() -> Self {
        MomentaSpec::Keyword("all".into())
    }
}

impl MomentaSpec {
    /// Parse the `--momenta` flag: `all` or a comma-separated list of grid indices.
    pub fn parse_flag(s: &str) -> Result<Self> {
        if s.trim() == "all" {
            return Ok(MomentaSpec::Keyword("all".into()));
        }
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| QtdiError::Parse(format!("--momenta: `{t}` is not a grid index")))
            })
            .collect::<Result<Vec<_>>>()
            .map(MomentaSpec::List)
    }

    pub fn resolve(&self, sites: usize) -> Result<Vec<usize>> {
        match self {
            MomentaSpec::Keyword(k) if k == "all" => Ok((0..sites).collect()),
            MomentaSpec::Keyword(k) => Err(QtdiError::Parse(format!(
                "scan.momenta: expected \"all\" or a list of indices, got \"{k}\""
            ))),
            MomentaSpec::List(list) => {
                if list.is_empty() {
                    return Err(QtdiError::Parse("scan.momenta: empty list".into()));
                }
                if let Some(&m) = list.iter().find(|&&m| m >= sites) {
                    return Err(QtdiError::Grid(format!("scan.momenta: index {m} is off the {sites}-point grid")));
                }
                let mut v = list.clone();
                v.sort_unstable();
                v.dedup();
                Ok(v)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    #[serde(default)]
    pub momenta: MomentaSpec,
    #[serde(default = "default_phases")]
    pub phases: usize,
}

fn default_phases() -> usize {
    16
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self {
            momenta: MomentaSpec::default(),
            phases: default_phases(),
        }
    }
}

/// Interferograms are noisy when `shots` is set; the protocol always samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub shots: Option<u64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavepacketSpec {
    #[serde(default)]
    pub shape: EnvelopeShape,
    #[serde(default = "default_width")]
    pub width: f64,
}

fn default_width() -> f64 {
    1.0
}

impl Default for WavepacketSpec {
    fn default() -> Self {
        Self {
            shape: EnvelopeShape::default(),
            width: default_width(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

/// A complete experiment manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub hamiltonian: HamiltonianSpec,
    pub state: StateSpec,
    pub times: Times,
    #[serde(default)]
    pub scan: ScanSpec,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub wavepacket: WavepacketSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    pub phases: Option<usize>,
    pub momenta: Option<MomentaSpec>,
}

/// Target objects built from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Experiment {
    pub basis: Arc<FockBasis>,
    pub hamiltonian: Hamiltonian,
    pub state: StateVector,
    /// Whether explicit amplitudes had to be renormalized.
    pub renormalized: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| QtdiError::Parse(format!("config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| QtdiError::Parse(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| QtdiError::Parse(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
        if let Some(seed) = o.seed {
            self.noise.seed = seed;
        }
        if let Some(shots) = o.shots {
            self.noise.shots = Some(shots);
        }
        if let Some(p) = o.phases {
            self.scan.phases = p;
        }
        if let Some(m) = &o.momenta {
            self.scan.momenta = m.clone();
        }
    }

    /// SHA-256 of the resolved configuration, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output.dir = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn momenta(&self) -> Result<Vec<usize>> {
        self.scan.momenta.resolve(self.lattice.sites)
    }

    pub fn noise(&self) -> Option<NoiseSpec> {
        self.noise.shots.map(|shots| NoiseSpec {
            shots,
            seed: self.noise.seed,
        })
    }

    pub fn protocol_shots(&self) -> u64 {
        self.noise.shots.unwrap_or(DEFAULT_PROTOCOL_SHOTS)
    }

    pub fn wavepackets(&self) -> Result<WavepacketPair> {
        WavepacketPair::new(self.wavepacket.shape, self.wavepacket.width, self.times.t1, self.times.t2)
    }

    pub fn build(&self) -> Result<Experiment> {
        if self.scan.phases < 3 {
            return Err(QtdiError::Identifiability(format!(
                "scan.phases = {} but at least 3 are needed",
                self.scan.phases
            )));
        }
        if self.noise.shots == Some(0) {
            return Err(QtdiError::Configuration("noise.shots must be positive".into()));
        }
        let basis = build_basis(self.lattice)?;
        let hamiltonian = build_hamiltonian(&basis, &self.hamiltonian)?;
        let (state, renormalized) = match &self.state {
            StateSpec::Fock { occupation } => (StateVector::fock(&basis, occupation)?, false),
            StateSpec::Superposition { configurations } => {
                (StateVector::uniform_superposition(&basis, configurations)?, false)
            }
            StateSpec::Amplitudes { amplitudes } => {
                let v = DVector::from_iterator(
                    amplitudes.len(),
                    amplitudes.iter().map(|&[re, im]| Complex64::new(re, im)),
                );
                StateVector::from_amplitudes(&basis, v)?
            }
        };
        if renormalized {
            log::warn!("state amplitudes were renormalized to unit norm");
        }
        Ok(Experiment {
            basis,
            hamiltonian,
            state,
            renormalized,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[lattice]
sites = 4
particles = 2

[state]
kind = "fock"
occupation = [1, 0, 1, 0]

[times]
t1 = 0.0
t2 = 1.0
"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.scan.phases, 16);
        assert_eq!(cfg.momenta().unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(cfg.noise(), None);
        assert_eq!(cfg.hamiltonian.hopping, 1.0);
        cfg.build().unwrap();
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = MINIMAL.replace("sites = 4", "sites = \"four\"");
        let msg = RunConfig::from_toml(&bad).unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
        let unknown = format!("{MINIMAL}\n[extra]\nfoo = 1\n");
        assert!(RunConfig::from_toml(&unknown).is_err());
    }

    #[test]
    fn overrides_win_and_output_dir_does_not_change_hash() {
        let mut cfg = RunConfig::from_toml(MINIMAL).unwrap();
        let h0 = cfg.hash();
        cfg.apply(&Overrides {
            out: Some(PathBuf::from("elsewhere")),
            ..Default::default()
        });
        assert_eq!(cfg.hash(), h0);
        cfg.apply(&Overrides {
            seed: Some(7),
            shots: Some(100),
            phases: Some(8),
            momenta: Some(MomentaSpec::parse_flag("1,3").unwrap()),
            ..Default::default()
        });
        assert_ne!(cfg.hash(), h0);
        assert_eq!(cfg.noise(), Some(NoiseSpec { shots: 100, seed: 7 }));
        assert_eq!(cfg.momenta().unwrap(), vec![1, 3]);
        assert_eq!(cfg.scan.phases, 8);
    }

    #[test]
    fn momenta_validation() {
        assert!(MomentaSpec::parse_flag("1,x").is_err());
        assert!(MomentaSpec::List(vec![5]).resolve(4).is_err());
        assert!(MomentaSpec::Keyword("some".into()).resolve(4).is_err());
        assert_eq!(MomentaSpec::parse_flag("all").unwrap().resolve(3).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn explicit_amplitudes_flag_renormalization() {
        let text = MINIMAL.replace(
            "kind = \"fock\"\noccupation = [1, 0, 1, 0]",
            "kind = \"amplitudes\"\namplitudes = [[1,0],[0,1],[0,0],[0,0],[0,0],[1,1]]",
        );
        let exp = RunConfig::from_toml(&text).unwrap().build().unwrap();
        assert!(exp.renormalized);
        assert!((exp.state.norm() - 1.0).abs() < 1e-12);
    }
}
