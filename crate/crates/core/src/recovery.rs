//! Recovering the complex ISF from phase scans.
//!
//! The overlapped interferogram is `A + B cos(φ + φ₀)` with `B = 2Ī₀|S|` and
//! `φ₀ = arg S`. Writing it as `A + x cos φ + y sin φ` makes the fit linear:
//! `x = B cos φ₀`, `y = -B sin φ₀`, hence `S = (x - i y) / 2Ī₀`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector, Matrix3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlations::{reconstruct_im_gamma, ImGammaReconstruction, MomentumGrid};
use crate::dynamics::Hamiltonian;
use crate::error::{QtdiError, Result};
use crate::exec::{map_indexed, Parallelism};
use crate::hilbert::StateVector;
use crate::scattering::{synthesize, InterferogramRecord, IsfTriple, NoiseSpec, PhaseSample, RecordMeta, WavepacketPair};

/// Phase convention stored with every recovered scan.
pub const PHASE_CONVENTION: &str = "I(phi) = A + B cos(phi + phi0); S = (B / 2 I0) exp(+i phi0); phi = phi_beta - phi_alpha";

/// Singular-value ratio below which the design is treated as rank deficient.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosineFit {
    pub offset: f64,
    /// B ≥ 0
    pub amplitude: f64,
    /// φ₀ in (-π, π]
    pub phase: f64,
    pub residual_rms: f64,
    /// Covariance of (A, B, φ₀).
    pub covariance: [[f64; 3]; 3],
    /// Linear coefficients (A, x, y) of 1, cos φ, sin φ.
    pub quadrature: [f64; 3],
    pub quadrature_covariance: [[f64; 3]; 3],
}

impl CosineFit {
    pub fn evaluate(&self, phi: f64) -> f64 {
        self.offset + self.amplitude * (phi + self.phase).cos()
    }
}

/// Wrap an angle into (-π, π].
fn canonical_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

pub fn fit_cosine(record: &InterferogramRecord) -> Result<CosineFit> {
    fit_cosine_samples(&record.samples)
}

/// Weighted linear least squares on {1, cos φ, sin φ}.
///
/// Weights are 1/σ²; a record without any σ gets unit weights and a
/// covariance scaled by the residual variance.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn fit_cosine_samples(samples: &[PhaseSample]) -> Result<CosineFit> {
    let n = samples.len();
    if n < 3 {
        return Err(QtdiError::Identifiability(format!("need at least 3 samples, got {n}")));
    }
    let floor = samples
        .iter()
        .map(|s| s.sigma)
        .filter(|&s| s > 0.0)
        .fold(f64::INFINITY, f64::min);
    let weighted = floor.is_finite();
    let sqrt_w: Vec<f64> = samples
        .iter()
        .map(|s| if weighted { 1.0 / s.sigma.max(floor) } else { 1.0 })
        .collect();

    let design = DMatrix::from_fn(n, 3, |i, j| {
        let phi = samples[i].phi;
        sqrt_w[i] * [1.0, phi.cos(), phi.sin()][j]
    });
    let rhs = DVector::from_fn(n, |i, _| sqrt_w[i] * samples[i].intensity);

    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= RANK_TOL * smax {
        return Err(QtdiError::Identifiability(
            "phases do not determine offset, amplitude and phase (rank-deficient design)".into(),
        ));
    }
    let coef = svd
        .solve(&rhs, RANK_TOL * smax)
        .map_err(|e| QtdiError::Numeric(e.to_string()))?;
    let (a, x, y) = (coef[0], coef[1], coef[2]);

    let v_t = svd.v_t.as_ref().expect("svd computed with V");
    let inv_sq = Matrix3::from_diagonal(&svd.singular_values.map(|s| 1.0 / (s * s)).fixed_rows::<3>(0).into_owned());
    let v_t3: Matrix3<f64> = v_t.fixed_view::<3, 3>(0, 0).into_owned();
    let mut cov = v_t3.transpose() * inv_sq * v_t3;

    let residuals: Vec<f64> = samples
        .iter()
        .map(|s| s.intensity - (a + x * s.phi.cos() + y * s.phi.sin()))
        .collect();
    let residual_rms = (residuals.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
    if !weighted {
        let dof = n.saturating_sub(3);
        let s2 = if dof > 0 {
            residuals.iter().map(|r| r * r).sum::<f64>() / dof as f64
        } else {
            0.0
        };
        cov *= s2;
    }

    // Amplitude below rounding level carries no phase information.
    let mut amplitude = x.hypot(y);
    let mut phase = canonical_angle((-y).atan2(x));
    if amplitude <= 1e-12 * a.abs().max(1.0) {
        amplitude = 0.0;
        phase = 0.0;
    }

    // (A, x, y) -> (A, B, φ₀)
    let jac = if amplitude > 0.0 {
        let b2 = amplitude * amplitude;
        Matrix3::new(
            1.0, 0.0, 0.0,
            0.0, x / amplitude, y / amplitude,
            0.0, y / b2, -x / b2,
        )
    } else {
        Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    };
    let polar = jac * cov * jac.transpose();

    Ok(CosineFit {
        offset: a,
        amplitude,
        phase,
        residual_rms,
        covariance: to_array(&polar),
        quadrature: [a, x, y],
        quadrature_covariance: to_array(&cov),
    })
}

fn to_array(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [[m[(0, 0)], m[(0, 1)], m[(0, 2)]], [m[(1, 0)], m[(1, 1)], m[(1, 2)]], [m[(2, 0)], m[(2, 1)], m[(2, 2)]]]
}

/// One recovered ISF value with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveredPoint {
    pub momentum_index: usize,
    pub momentum: f64,
    pub value: Complex64,
    pub sigma_re: f64,
    pub sigma_im: f64,
    pub cov_re_im: f64,
    pub sigma_abs: f64,
    pub sigma_arg: f64,
    pub fit: CosineFit,
}

impl RecoveredPoint {
    pub fn from_fit(meta: &RecordMeta, fit: CosineFit, prefactor: f64) -> Self {
        let [_, x, y] = fit.quadrature;
        let q = fit.quadrature_covariance;
        let scale = 1.0 / (2.0 * prefactor);
        Self {
            momentum_index: meta.momentum_index,
            momentum: meta.momentum,
            value: Complex64::new(x * scale, -y * scale),
            sigma_re: q[1][1].max(0.0).sqrt() * scale,
            sigma_im: q[2][2].max(0.0).sqrt() * scale,
            cov_re_im: -q[1][2] * scale * scale,
            sigma_abs: fit.covariance[1][1].max(0.0).sqrt() * scale,
            sigma_arg: fit.covariance[2][2].max(0.0).sqrt(),
            fit,
        }
    }
}

/// Complex S(p, t_α, t_β) assembled from per-momentum fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredIsf {
    pub sites: usize,
    pub t_alpha: f64,
    pub t_beta: f64,
    pub convention: String,
    pub points: BTreeMap<usize, RecoveredPoint>,
}

impl RecoveredIsf {
    pub fn grid(&self) -> MomentumGrid {
        MomentumGrid::new(self.sites)
    }

    pub fn values(&self) -> BTreeMap<usize, Complex64> {
        self.points.iter().map(|(&m, p)| (m, p.value)).collect()
    }

    pub fn is_full_grid(&self) -> bool {
        (0..self.sites).all(|m| self.points.contains_key(&m))
    }

    /// G(d) by inverse transform of the recovered S (full grid only).
    pub fn dcf(&self) -> Result<Vec<Complex64>> {
        if !self.is_full_grid() {
            return Err(QtdiError::Grid("incomplete momentum grid: cannot invert the recovered ISF".into()));
        }
        let s: Vec<Complex64> = (0..self.sites).map(|m| self.points[&m].value).collect();
        Ok(self.grid().inverse(&s))
    }

    /// Fit a set of interferograms recorded at common times.
    pub fn from_records(records: &[InterferogramRecord], prefactor: f64) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| QtdiError::Configuration("no interferograms to recover from".into()))?;
        let mut points = BTreeMap::new();
        for r in records {
            let m = &r.meta;
            if m.sites != first.meta.sites || m.t_alpha != first.meta.t_alpha || m.t_beta != first.meta.t_beta {
                return Err(QtdiError::Configuration(
                    "interferograms disagree on lattice size or times".into(),
                ));
            }
            if m.momentum_index >= m.sites {
                return Err(QtdiError::Grid(format!("momentum index {} is off the grid", m.momentum_index)));
            }
            let fit = fit_cosine(r)?;
            if points.insert(m.momentum_index, RecoveredPoint::from_fit(m, fit, prefactor)).is_some() {
                return Err(QtdiError::Configuration(format!(
                    "two interferograms at momentum index {}",
                    m.momentum_index
                )));
            }
        }
        Ok(Self {
            sites: first.meta.sites,
            t_alpha: first.meta.t_alpha,
            t_beta: first.meta.t_beta,
            convention: PHASE_CONVENTION.to_string(),
            points,
        })
    }

    /// `p,re_S,im_S,sigma_abs,sigma_arg`, preceded by `#` comment lines.
    pub fn write_csv<W: Write>(&self, mut out: W, preamble: &[String]) -> Result<()> {
        for line in preamble {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["p", "re_S", "im_S", "sigma_abs", "sigma_arg"])?;
        for p in self.points.values() {
            w.write_record([
                p.momentum.to_string(),
                p.value.re.to_string(),
                p.value.im.to_string(),
                p.sigma_abs.to_string(),
                p.sigma_arg.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Synthesize and fit one interferogram per requested momentum.
#[allow(clippy::too_many_arguments)]
pub fn recover_isf_scan(
    psi: &StateVector,
    h: &Hamiltonian,
    pair: &WavepacketPair,
    phases: &[f64],
    momenta: &[usize],
    noise: Option<NoiseSpec>,
    par: Parallelism,
) -> Result<RecoveredIsf> {
    let records = scan_records(psi, h, pair, phases, momenta, noise, par)?;
    RecoveredIsf::from_records(&records, 1.0)
}

/// The interferograms behind [`recover_isf_scan`].
pub fn scan_records(
    psi: &StateVector,
    h: &Hamiltonian,
    pair: &WavepacketPair,
    phases: &[f64],
    momenta: &[usize],
    noise: Option<NoiseSpec>,
    par: Parallelism,
) -> Result<Vec<InterferogramRecord>> {
    pair.validate()?;
    let grid = MomentumGrid::new(psi.basis().sites());
    if let Some(&m) = momenta.iter().find(|&&m| m >= grid.len()) {
        return Err(QtdiError::Grid(format!("momentum index {m} is off the {}-point grid", grid.len())));
    }
    let triples = IsfTriple::on_grid(psi, &h.diagonalize(), pair.t_alpha, pair.t_beta)?;
    let records = map_indexed(momenta.len(), par, |k| {
        let m = momenta[k];
        let meta = RecordMeta::new(&grid, m, pair.t_alpha, pair.t_beta);
        synthesize(&triples[m], meta, 1.0, phases, noise, Parallelism::Serial)
    });
    records.into_iter().collect()
}

/// Im Γ(d) and its propagated standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImGammaEstimate {
    pub reconstruction: ImGammaReconstruction,
    pub sigma: Vec<f64>,
}

pub fn recover_im_gamma(scan: &RecoveredIsf) -> Result<ImGammaEstimate> {
    let grid = scan.grid();
    let reconstruction = reconstruct_im_gamma(&grid, &scan.values())?;
    let l = grid.len();
    let sigma = (0..l)
        .map(|d| {
            // Im Γ(d) = Σ_k cre[k] Re S(k) + cim[k] Im S(k)
            let mut cre = vec![0.0; l];
            let mut cim = vec![0.0; l];
            for m in 0..l {
                let theta = 2.0 * PI * ((m * d) % l) as f64 / l as f64;
                let (c, s) = (theta.cos() / (2.0 * l as f64), theta.sin() / (2.0 * l as f64));
                let nm = grid.negate(m);
                cim[m] += c;
                cim[nm] += c;
                cre[m] -= s;
                cre[nm] += s;
            }
            (0..l)
                .map(|k| {
                    let p = &scan.points[&k];
                    cre[k] * cre[k] * p.sigma_re * p.sigma_re
                        + cim[k] * cim[k] * p.sigma_im * p.sigma_im
                        + 2.0 * cre[k] * cim[k] * p.cov_re_im
                })
                .sum::<f64>()
                .max(0.0)
                .sqrt()
        })
        .collect();
    Ok(ImGammaEstimate { reconstruction, sigma })
}
