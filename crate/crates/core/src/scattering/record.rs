use std::f64::consts::PI;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::correlations::MomentumGrid;
use crate::error::{QtdiError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSample {
    pub phi: f64,
    pub intensity: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub sites: usize,
    pub momentum_index: usize,
    pub momentum: f64,
    pub t_alpha: f64,
    pub t_beta: f64,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
}

impl RecordMeta {
    pub fn new(grid: &MomentumGrid, momentum_index: usize, t_alpha: f64, t_beta: f64) -> Self {
        Self {
            sites: grid.len(),
            momentum_index,
            momentum: grid.momentum(momentum_index),
            t_alpha,
            t_beta,
            shots: None,
            seed: None,
        }
    }
}

/// Intensity versus relative phase at fixed momentum and times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferogramRecord {
    pub samples: Vec<PhaseSample>,
    pub meta: RecordMeta,
}

impl InterferogramRecord {
    pub fn new(samples: Vec<PhaseSample>, meta: RecordMeta) -> Result<Self> {
        if samples.len() < 3 {
            return Err(QtdiError::Identifiability(format!(
                "a record needs at least 3 phases, got {}",
                samples.len()
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if !(0.0..2.0 * PI).contains(&s.phi) {
                return Err(QtdiError::Configuration(format!("phase {} = {} is outside [0, 2π)", i, s.phi)));
            }
            if i > 0 && s.phi <= samples[i - 1].phi {
                return Err(QtdiError::Configuration("phases must be strictly increasing".into()));
            }
            if !(s.intensity >= 0.0 && s.sigma >= 0.0) {
                return Err(QtdiError::Configuration(format!(
                    "intensity and sigma must be non-negative (row {i})"
                )));
            }
        }
        Ok(Self { samples, meta })
    }

    /// CSV with `#` metadata lines, then `phi,intensity,sigma`.
    pub fn write_csv<W: Write>(&self, mut out: W, preamble: &[String]) -> Result<()> {
        for line in preamble {
            writeln!(out, "# {line}")?;
        }
        let m = &self.meta;
        writeln!(out, "# sites = {}", m.sites)?;
        writeln!(out, "# m = {}", m.momentum_index)?;
        writeln!(out, "# p = {}", m.momentum)?;
        writeln!(out, "# t_alpha = {}", m.t_alpha)?;
        writeln!(out, "# t_beta = {}", m.t_beta)?;
        writeln!(out, "# shots = {}", opt(m.shots))?;
        writeln!(out, "# seed = {}", opt(m.seed))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["phi", "intensity", "sigma"])?;
        for s in &self.samples {
            w.write_record([s.phi.to_string(), s.intensity.to_string(), s.sigma.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut meta = std::collections::HashMap::new();
        let mut body = String::new();
        for line in input.lines() {
            let line = line?;
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((k, v)) = comment.split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
            } else if !line.trim().is_empty() {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let field = |k: &str| -> Result<&String> {
            meta.get(k)
                .ok_or_else(|| QtdiError::Parse(format!("interferogram metadata `{k}` missing")))
        };
        let num = |k: &str| -> Result<f64> {
            field(k)?
                .parse()
                .map_err(|_| QtdiError::Parse(format!("metadata `{k}` is not a number")))
        };
        let int = |k: &str| -> Result<u64> {
            field(k)?
                .parse()
                .map_err(|_| QtdiError::Parse(format!("metadata `{k}` is not an integer")))
        };
        let optional = |k: &str| -> Result<Option<u64>> {
            match meta.get(k).map(String::as_str) {
                None | Some("none") => Ok(None),
                Some(_) => int(k).map(Some),
            }
        };
        let record_meta = RecordMeta {
            sites: int("sites")? as usize,
            momentum_index: int("m")? as usize,
            momentum: num("p")?,
            t_alpha: num("t_alpha")?,
            t_beta: num("t_beta")?,
            shots: optional("shots")?,
            seed: optional("seed")?,
        };

        let mut reader = csv::Reader::from_reader(body.as_bytes());
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["phi", "intensity", "sigma"] {
            return Err(QtdiError::Parse(format!(
                "expected header phi,intensity,sigma, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut samples = Vec::new();
        for (row, rec) in reader.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| QtdiError::Parse(format!("row {}: column {} is not a number", row + 1, i + 1)))
            };
            samples.push(PhaseSample {
                phi: parse(0)?,
                intensity: parse(1)?,
                sigma: parse(2)?,
            });
        }
        Self::new(samples, record_meta)
    }
}

fn opt(v: Option<u64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn meta() -> RecordMeta {
        RecordMeta::new(&MomentumGrid::new(4), 1, 0.2, 0.9)
    }

    #[test]
    fn rejects_unsorted_or_short_records() {
        let s = |phi| PhaseSample {
            phi,
            intensity: 1.0,
            sigma: 0.0,
        };
        assert!(InterferogramRecord::new(vec![s(0.0), s(1.0)], meta()).is_err());
        assert!(InterferogramRecord::new(vec![s(0.0), s(2.0), s(1.0)], meta()).is_err());
        assert!(InterferogramRecord::new(vec![s(0.0), s(1.0), s(2.0 * PI)], meta()).is_err());
    }

    #[test]
    fn header_is_checked() {
        let text = "# sites = 4\n# m = 1\n# p = 1.5\n# t_alpha = 0\n# t_beta = 1\nphi,counts,sigma\n0,1,0\n";
        assert!(matches!(InterferogramRecord::read_csv(text.as_bytes()), Err(QtdiError::Parse(_))));
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(values in prop::collection::vec((0.0f64..100.0, 0.0f64..1.0), 3..20), seed in any::<Option<u64>>()) {
            let n = values.len();
            let samples = values.iter().enumerate().map(|(i, &(intensity, sigma))| PhaseSample {
                phi: 2.0 * PI * i as f64 / n as f64,
                intensity,
                sigma,
            }).collect();
            let mut m = meta();
            m.seed = seed;
            m.shots = seed.map(|s| s % 1000);
            let rec = InterferogramRecord::new(samples, m).unwrap();
            let mut buf = Vec::new();
            rec.write_csv(&mut buf, &["qtdi test".to_string()]).unwrap();
            let back = InterferogramRecord::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, rec);
        }
    }
}
