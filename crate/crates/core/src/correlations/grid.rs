use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{QtdiError, Result};

/// Lattice momenta p_m = 2πm/L, m = 0..L-1, lattice constant 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MomentumGrid {
    sites: usize,
}

/// Tolerance used to decide whether a real momentum lies on the grid.
const GRID_TOL: f64 = 1e-9;

impl MomentumGrid {
    pub fn new(sites: usize) -> Self {
        assert!(sites > 0, "momentum grid needs at least one site");
        Self { sites }
    }

    pub fn len(&self) -> usize {
        self.sites
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn momentum(&self, m: usize) -> f64 {
        2.0 * PI * (m % self.sites) as f64 / self.sites as f64
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.sites).map(|m| self.momentum(m)).collect()
    }

    /// Index of -p_m, i.e. L - m modulo L.
    pub fn negate(&self, m: usize) -> usize {
        (self.sites - m % self.sites) % self.sites
    }

    /// Index of -d on the displacement ring.
    pub fn negate_displacement(&self, d: usize) -> usize {
        self.negate(d)
    }

    /// Resolve a real momentum (any branch of 2π) to its grid index.
    pub fn locate(&self, p: f64) -> Result<usize> {
        if !p.is_finite() {
            return Err(QtdiError::Grid(format!("momentum {p} is not finite")));
        }
        let x = p * self.sites as f64 / (2.0 * PI);
        let m = x.round();
        if (x - m).abs() * 2.0 * PI / self.sites as f64 > GRID_TOL {
            return Err(QtdiError::Grid(format!(
                "momentum {p} is not a multiple of 2π/{}",
                self.sites
            )));
        }
        Ok(m.rem_euclid(self.sites as f64) as usize)
    }

    /// e^{+i p_m d}, computed from the reduced integer phase (m·d mod L).
    pub fn phase(&self, m: usize, d: usize) -> Complex64 {
        let k = (m * d) % self.sites;
        Complex64::from_polar(1.0, 2.0 * PI * k as f64 / self.sites as f64)
    }

    /// S(p_m) = Σ_d f(d) e^{+i p_m d}
    pub fn forward(&self, values: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.sites);
        (0..self.sites)
            .map(|m| values.iter().enumerate().map(|(d, &g)| g * self.phase(m, d)).sum())
            .collect()
    }

    /// f(d) = (1/L) Σ_m S(p_m) e^{-i p_m d}
    pub fn inverse(&self, values: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.sites);
        let norm = 1.0 / self.sites as f64;
        (0..self.sites)
            .map(|d| {
                values
                    .iter()
                    .enumerate()
                    .map(|(m, &s)| s * self.phase(m, d).conj())
                    .sum::<Complex64>()
                    * norm
            })
            .collect()
    }
}
