//! Two-pulse detection signal.
//!
//! A photon scattered at t_α or at t_β reaches the detector through one of two
//! channels. With envelope values α, β at the detection offset x = R - ct the
//! intensity is
//!
//! `I = I₀ { |α|² S(p,t_α,t_α) + |β|² S(p,t_β,t_β) + 2 Re[α* β e^{i(φ_β-φ_α)} S(p,t_α,t_β)] }`
//!
//! and for overlapped, equally shaped packets the envelopes factor into Ī₀,
//! leaving a pure cosine in the relative phase φ = φ_β - φ_α.

mod record;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

pub use record::{InterferogramRecord, PhaseSample, RecordMeta};

use crate::correlations::{MomentumGrid, TwoTimeState};
use crate::dynamics::{Hamiltonian, Spectrum};
use crate::error::{QtdiError, Result};
use crate::exec::{map_indexed, Parallelism};
use crate::hilbert::StateVector;

/// Negative intensities smaller than this are clamped to zero.
pub const INTENSITY_TOL: f64 = 1e-10;

/// Packets farther apart than this many widths count as non-overlapping.
pub const OVERLAP_WIDTHS: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeShape {
    #[default]
    Gaussian,
    Rectangular,
}

impl EnvelopeShape {
    /// L²-normalized envelope l(x) of width `width`, centred at zero.
    ///
    /// Gaussian: |l|² has standard deviation `width`. Rectangular: `width` is the
    /// full width.
    pub fn value(self, width: f64, x: f64) -> f64 {
        match self {
            EnvelopeShape::Gaussian => {
                (2.0 * PI * width * width).powf(-0.25) * (-x * x / (4.0 * width * width)).exp()
            }
            EnvelopeShape::Rectangular => {
                if x.abs() <= 0.5 * width {
                    width.sqrt().recip()
                } else {
                    0.0
                }
            }
        }
    }
}

/// The two incident pulses (c = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavepacketPair {
    pub shape: EnvelopeShape,
    pub width: f64,
    pub t_alpha: f64,
    pub t_beta: f64,
    pub phase_alpha: f64,
    pub phase_beta: f64,
}

impl WavepacketPair {
    pub fn new(shape: EnvelopeShape, width: f64, t_alpha: f64, t_beta: f64) -> Result<Self> {
        let pair = Self {
            shape,
            width,
            t_alpha,
            t_beta,
            phase_alpha: 0.0,
            phase_beta: 0.0,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn with_phases(mut self, phase_alpha: f64, phase_beta: f64) -> Self {
        self.phase_alpha = phase_alpha;
        self.phase_beta = phase_beta;
        self
    }

    // negated comparisons so that NaN fails
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(QtdiError::Configuration(format!("envelope width must be positive, got {}", self.width)));
        }
        if !(self.t_alpha < self.t_beta) {
            return Err(QtdiError::Configuration(format!(
                "t_alpha = {} must precede t_beta = {}",
                self.t_alpha, self.t_beta
            )));
        }
        Ok(())
    }

    /// false when the packets are separated by more than six widths.
    pub fn overlapping(&self) -> bool {
        (self.t_beta - self.t_alpha).abs() <= OVERLAP_WIDTHS * self.width
    }

    /// α(x): packet that crossed the target at t_α, evaluated at x = R - ct.
    pub fn alpha(&self, x: f64) -> f64 {
        self.shape.value(self.width, x + self.t_alpha)
    }

    pub fn beta(&self, x: f64) -> f64 {
        self.shape.value(self.width, x + self.t_beta)
    }

    pub fn relative_phase(&self) -> f64 {
        self.phase_beta - self.phase_alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OverlapMode {
    /// Scattered packets re-overlapped with identical envelopes.
    #[default]
    Overlapped,
    /// Envelopes evaluated at their own arrival offsets.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Grid index m of the momentum transfer p = 2πm/L.
    pub momentum: usize,
    pub mode: OverlapMode,
    /// Normalized intensity prefactor Ī₀.
    pub prefactor: f64,
}

impl DetectorConfig {
    pub fn overlapped(momentum: usize) -> Self {
        Self {
            momentum,
            mode: OverlapMode::Overlapped,
            prefactor: 1.0,
        }
    }

    pub fn raw(momentum: usize) -> Self {
        Self {
            mode: OverlapMode::Raw,
            ..Self::overlapped(momentum)
        }
    }
}

/// ISF values entering the intensity at one momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsfTriple {
    /// S(p, t_α, t_α)
    pub early: Complex64,
    /// S(p, t_β, t_β)
    pub late: Complex64,
    /// S(p, t_α, t_β)
    pub cross: Complex64,
}

impl IsfTriple {
    /// Evaluate the three ISFs on the full momentum grid.
    pub fn on_grid(psi: &StateVector, spectrum: &std::sync::Arc<Spectrum>, t_alpha: f64, t_beta: f64) -> Result<Vec<Self>> {
        let ua = spectrum.propagator(t_alpha);
        let ub = spectrum.propagator(t_beta);
        let early = TwoTimeState::new(psi, &ua, &ua)?.isf_all();
        let late = TwoTimeState::new(psi, &ub, &ub)?.isf_all();
        let cross = TwoTimeState::new(psi, &ua, &ub)?.isf_all();
        Ok((0..early.len())
            .map(|m| IsfTriple {
                early: early[m],
                late: late[m],
                cross: cross[m],
            })
            .collect())
    }
}

/// Detected intensity at detection offset `x`.
pub fn intensity(isf: &IsfTriple, pair: &WavepacketPair, config: &DetectorConfig, x: f64) -> Result<f64> {
    let phase = Complex64::from_polar(1.0, pair.relative_phase());
    let (a, b) = match config.mode {
        OverlapMode::Overlapped => (1.0, 1.0),
        OverlapMode::Raw => (pair.alpha(x), pair.beta(x)),
    };
    let value = config.prefactor
        * (a * a * isf.early.re + b * b * isf.late.re + 2.0 * (a * b * phase * isf.cross).re);
    clamp_intensity(value)
}

fn clamp_intensity(value: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -INTENSITY_TOL {
        Ok(0.0)
    } else {
        Err(QtdiError::Numeric(format!(
            "negative intensity {value:e}: the supplied ISF values are inconsistent"
        )))
    }
}

/// Uniform relative-phase grid φ_i = 2πi/n.
pub fn uniform_phases(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

/// Photon-count noise: each point becomes Poisson(M·I)/M.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub shots: u64,
    pub seed: u64,
}

/// Random stream for phase point `i` of the scan at momentum index `m`.
pub fn point_stream(m: usize, i: usize) -> u64 {
    (m as u64) << 32 | i as u64
}

/// Phase-scan interferogram from known ISF values (overlapped mode).
pub fn synthesize(
    isf: &IsfTriple,
    meta: RecordMeta,
    prefactor: f64,
    phases: &[f64],
    noise: Option<NoiseSpec>,
    par: Parallelism,
) -> Result<InterferogramRecord> {
    if phases.len() < 3 {
        return Err(QtdiError::Identifiability(format!(
            "an interferogram needs at least 3 phases, got {}",
            phases.len()
        )));
    }
    let config = DetectorConfig {
        momentum: meta.momentum_index,
        mode: OverlapMode::Overlapped,
        prefactor,
    };
    let m = meta.momentum_index;
    let points = map_indexed(phases.len(), par, |i| -> Result<PhaseSample> {
        let pair = WavepacketPair {
            shape: EnvelopeShape::Gaussian,
            width: 1.0,
            t_alpha: meta.t_alpha,
            t_beta: meta.t_beta,
            phase_alpha: 0.0,
            phase_beta: phases[i],
        };
        let exact = intensity(isf, &pair, &config, 0.0)?;
        Ok(match noise {
            None => PhaseSample {
                phi: phases[i],
                intensity: exact,
                sigma: 0.0,
            },
            Some(n) => {
                let shots = n.shots as f64;
                let mut rng = ChaCha8Rng::seed_from_u64(n.seed);
                rng.set_stream(point_stream(m, i));
                let mean = shots * exact;
                let counts = if mean > 0.0 {
                    Poisson::new(mean)
                        .map_err(|e| QtdiError::Numeric(format!("poisson mean {mean}: {e}")))?
                        .sample(&mut rng)
                } else {
                    0.0
                };
                PhaseSample {
                    phi: phases[i],
                    intensity: counts / shots,
                    sigma: (exact / shots).sqrt(),
                }
            }
        })
    });
    let samples = points.into_iter().collect::<Result<Vec<_>>>()?;
    let meta = RecordMeta {
        shots: noise.map(|n| n.shots),
        seed: noise.map(|n| n.seed),
        ..meta
    };
    InterferogramRecord::new(samples, meta)
}

/// Phase-scan interferogram of `psi` evolving under `h`, at the detector's momentum.
pub fn interferogram(
    psi: &StateVector,
    h: &Hamiltonian,
    pair: &WavepacketPair,
    config: &DetectorConfig,
    phases: &[f64],
    noise: Option<NoiseSpec>,
) -> Result<InterferogramRecord> {
    pair.validate()?;
    if config.mode != OverlapMode::Overlapped {
        return Err(QtdiError::Configuration("interferograms are recorded in overlapped mode".into()));
    }
    if phases.len() < 3 {
        return Err(QtdiError::Identifiability(format!(
            "an interferogram needs at least 3 phases, got {}",
            phases.len()
        )));
    }
    let grid = MomentumGrid::new(psi.basis().sites());
    if config.momentum >= grid.len() {
        return Err(QtdiError::Grid(format!(
            "momentum index {} is off the {}-point grid",
            config.momentum,
            grid.len()
        )));
    }
    let triples = IsfTriple::on_grid(psi, &h.diagonalize(), pair.t_alpha, pair.t_beta)?;
    let meta = RecordMeta::new(&grid, config.momentum, pair.t_alpha, pair.t_beta);
    synthesize(&triples[config.momentum], meta, config.prefactor, phases, noise, Parallelism::Parallel)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn envelopes_are_normalized() {
        for shape in [EnvelopeShape::Gaussian, EnvelopeShape::Rectangular] {
            let w = 0.37;
            // midpoint rule on a fine grid; the rectangle edges sit on cell boundaries
            let n = 200_000;
            let (lo, hi) = (-20.0 * w, 20.0 * w);
            let dx = (hi - lo) / n as f64;
            let norm: f64 = (0..n)
                .map(|k| shape.value(w, lo + (k as f64 + 0.5) * dx).powi(2) * dx)
                .sum();
            assert!((norm - 1.0).abs() < 1e-10, "{shape:?}: {norm}");
        }
    }

    #[test]
    fn pair_validation_and_overlap_flag() {
        assert!(WavepacketPair::new(EnvelopeShape::Gaussian, 0.1, 1.0, 0.5).is_err());
        assert!(WavepacketPair::new(EnvelopeShape::Gaussian, 0.0, 0.0, 0.5).is_err());
        let near = WavepacketPair::new(EnvelopeShape::Gaussian, 0.1, 0.0, 0.5).unwrap();
        assert!(near.overlapping());
        let far = WavepacketPair::new(EnvelopeShape::Gaussian, 0.1, 0.0, 0.7).unwrap();
        assert!(!far.overlapping());
    }

    #[test]
    fn which_time_information_kills_interference() {
        let pair = WavepacketPair::new(EnvelopeShape::Rectangular, 0.2, 0.0, 1.0).unwrap();
        let isf = IsfTriple {
            early: c(1.5, 0.0),
            late: c(0.8, 0.0),
            cross: c(0.3, -0.6),
        };
        // at x = -1 only the late packet is present
        let x = -1.0;
        assert_eq!(pair.alpha(x), 0.0);
        let got = intensity(&isf, &pair, &DetectorConfig::raw(1), x).unwrap();
        assert!((got - pair.beta(x).powi(2) * 0.8).abs() < 1e-15);
    }

    #[test]
    fn overlapped_without_cross_term_is_phase_independent() {
        let isf = IsfTriple {
            early: c(1.5, 0.0),
            late: c(0.8, 0.0),
            cross: c(0.0, 0.0),
        };
        let base = WavepacketPair::new(EnvelopeShape::Gaussian, 0.1, 0.0, 0.3).unwrap();
        for phi in uniform_phases(7) {
            let pair = base.with_phases(0.0, phi);
            let got = intensity(&isf, &pair, &DetectorConfig::overlapped(0), 0.0).unwrap();
            assert!((got - 2.3).abs() < 1e-15);
        }
    }

    #[test]
    fn negative_intensity_rejected() {
        let isf = IsfTriple {
            early: c(0.1, 0.0),
            late: c(0.1, 0.0),
            cross: c(1.0, 0.0),
        };
        let pair = WavepacketPair::new(EnvelopeShape::Gaussian, 0.1, 0.0, 0.3)
            .unwrap()
            .with_phases(0.0, PI);
        assert!(matches!(
            intensity(&isf, &pair, &DetectorConfig::overlapped(0), 0.0),
            Err(QtdiError::Numeric(_))
        ));
    }

    #[test]
    fn real_positive_cross_term_has_minimum_at_pi() {
        let isf = IsfTriple {
            early: c(2.0, 0.0),
            late: c(1.0, 0.0),
            cross: c(0.7, 0.0),
        };
        let grid = MomentumGrid::new(2);
        let meta = RecordMeta::new(&grid, 1, 0.0, 0.5);
        let rec = synthesize(&isf, meta, 1.0, &uniform_phases(16), None, Parallelism::Serial).unwrap();
        let (imin, _) = rec
            .samples
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.intensity.total_cmp(&b.1.intensity))
            .unwrap();
        assert!((rec.samples[imin].phi - PI).abs() < 1e-12);
        let mean = rec.samples.iter().map(|s| s.intensity).sum::<f64>() / 16.0;
        assert!((mean - 3.0).abs() < 1e-12);
        let peak = rec.samples.iter().map(|s| s.intensity).fold(f64::MIN, f64::max);
        assert!((peak - rec.samples[imin].intensity - 4.0 * 0.7).abs() < 1e-12);
    }

    #[test]
    fn too_few_phases() {
        let isf = IsfTriple {
            early: c(1.0, 0.0),
            late: c(1.0, 0.0),
            cross: c(0.2, 0.0),
        };
        let meta = RecordMeta::new(&MomentumGrid::new(2), 0, 0.0, 1.0);
        assert!(matches!(
            synthesize(&isf, meta, 1.0, &[0.0, 1.0], None, Parallelism::Serial),
            Err(QtdiError::Identifiability(_))
        ));
    }

    #[test]
    fn noise_is_seeded_and_parallel_safe() {
        let isf = IsfTriple {
            early: c(1.4, 0.0),
            late: c(1.1, 0.0),
            cross: c(0.3, 0.4),
        };
        let meta = RecordMeta::new(&MomentumGrid::new(4), 1, 0.2, 0.9);
        let noise = Some(NoiseSpec { shots: 10_000, seed: 42 });
        let a = synthesize(&isf, meta.clone(), 1.0, &uniform_phases(16), noise, Parallelism::Serial).unwrap();
        let b = synthesize(&isf, meta.clone(), 1.0, &uniform_phases(16), noise, Parallelism::Parallel).unwrap();
        assert_eq!(a, b);
        let other = Some(NoiseSpec { shots: 10_000, seed: 43 });
        let c2 = synthesize(&isf, meta, 1.0, &uniform_phases(16), other, Parallelism::Serial).unwrap();
        assert_ne!(a, c2);
        assert!(a.samples.iter().all(|s| s.sigma > 0.0));
    }
}
