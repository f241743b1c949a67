//! Configuration files and the `qtdi` subcommands.
//!
//! Every subcommand reads a TOML [`RunConfig`], applies command-line
//! overrides, and writes its artifacts under the output directory. CSV files
//! start with `#` header lines and JSON files carry a `header` object; both
//! record the tool version, the SHA-256 of the resolved config and the seed.

mod config;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::{
    Experiment, MomentaSpec, NoiseConfig, OutputSpec, Overrides, RunConfig, ScanSpec, StateSpec, Times,
    WavepacketSpec, DEFAULT_PROTOCOL_SHOTS,
};

use crate::backaction::{compare_protocols, format_report};
use crate::correlations::{split_dcf_all, symmetry_check, TwoTimeState};
use crate::error::{QtdiError, Result};
use crate::exec::Parallelism;
use crate::recovery::{recover_im_gamma, scan_records, RecoveredIsf};
use crate::scattering::{uniform_phases, InterferogramRecord};

/// Environment variable holding the log filter (`error`, `warn`, `info`, `debug`, `trace`).
pub const LOG_ENV: &str = "QTDI_LOG";

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "qtdi", version, about = "Two-time density correlations and interferometric ISF recovery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// S(p, t1, t2) on the requested momenta.
    Isf(CommonArgs),
    /// G(d) split into projective and coherent parts.
    Split(CommonArgs),
    /// Phase-scan interferograms, one file per momentum.
    Interferogram(CommonArgs),
    /// Fit interferograms and reconstruct S(p) and Im Γ(d).
    Recover(RecoverArgs),
    /// Consecutive projective measurements against interferometric recovery.
    Backaction(CommonArgs),
    /// Quantum and classical symmetry checks.
    Symcheck(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Shots per phase point, or per protocol run for `backaction`.
    #[arg(long)]
    pub shots: Option<u64>,
    /// Number of uniformly spaced relative phases.
    #[arg(long)]
    pub phases: Option<usize>,
    /// `all` or a comma-separated list of momentum indices.
    #[arg(long, value_name = "LIST|all")]
    pub momenta: Option<String>,
    /// Disable the rayon thread pool.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RecoverArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Read `interferogram_m*.csv` from this directory instead of synthesizing.
    #[arg(long)]
    pub from: Option<PathBuf>,
}

/// What a subcommand produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub stdout: String,
}

#[derive(Debug, Clone, Serialize)]
struct Header {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_sha256: Option<String>,
    seed: Option<u64>,
}

impl Header {
    fn lines(&self) -> Vec<String> {
        vec![
            format!("{} {}", self.tool, self.version),
            format!("command = {}", self.command),
            format!("config_sha256 = {}", self.config_sha256.as_deref().unwrap_or("none")),
        ]
    }

    fn lines_with_seed(&self) -> Vec<String> {
        let mut v = self.lines();
        v.push(format!("seed = {}", self.seed.map_or("none".to_string(), |s| s.to_string())));
        v
    }
}

struct Run {
    config: RunConfig,
    par: Parallelism,
}

impl Run {
    fn load(args: &CommonArgs) -> Result<Self> {
        let path = args
            .config
            .as_ref()
            .ok_or_else(|| QtdiError::Configuration("--config is required".into()))?;
        let mut config = RunConfig::from_file(path)?;
        config.apply(&overrides(args)?);
        log::info!("loaded {} (sha256 {})", path.display(), config.hash());
        Ok(Self {
            config,
            par: parallelism(args),
        })
    }

    fn header(&self, command: &'static str, seed: Option<u64>) -> Header {
        Header {
            tool: "qtdi",
            version: VERSION,
            command,
            config_sha256: Some(self.config.hash()),
            seed,
        }
    }

    fn out_dir(&self) -> Result<PathBuf> {
        ensure_dir(&self.config.output.dir)
    }

    fn two_time(&self, exp: &Experiment) -> Result<TwoTimeState> {
        let spectrum = exp.hamiltonian.diagonalize();
        let Times { t1, t2 } = self.config.times;
        TwoTimeState::new(&exp.state, &spectrum.propagator(t1), &spectrum.propagator(t2))
    }

    fn records(&self, exp: &Experiment) -> Result<Vec<InterferogramRecord>> {
        let pair = self.config.wavepackets()?;
        scan_records(
            &exp.state,
            &exp.hamiltonian,
            &pair,
            &uniform_phases(self.config.scan.phases),
            &self.config.momenta()?,
            self.config.noise(),
            self.par,
        )
    }
}

fn overrides(args: &CommonArgs) -> Result<Overrides> {
    Ok(Overrides {
        out: args.out.clone(),
        seed: args.seed,
        shots: args.shots,
        phases: args.phases,
        momenta: args.momenta.as_deref().map(MomentaSpec::parse_flag).transpose()?,
    })
}

fn parallelism(args: &CommonArgs) -> Parallelism {
    if args.serial {
        Parallelism::Serial
    } else {
        Parallelism::Parallel
    }
}

fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    log::debug!("writing {}", path.display());
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_table(path: &Path, header: &[String], columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = create(path)?;
    for line in header {
        writeln!(w, "# {line}")?;
    }
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(columns)?;
    for row in rows {
        csv.write_record(row.iter().map(f64::to_string))?;
    }
    csv.flush()?;
    Ok(())
}

/// Execute one parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Isf(a) => isf(&Run::load(a)?),
        Command::Split(a) => split(&Run::load(a)?),
        Command::Interferogram(a) => interferogram(&Run::load(a)?),
        Command::Recover(a) => recover(a),
        Command::Backaction(a) => backaction(&Run::load(a)?),
        Command::Symcheck(a) => symcheck(&Run::load(a)?),
    }
}

/// Machine-readable error object printed on failure.
pub fn error_json(err: &QtdiError) -> String {
    serde_json::json!({ "error": { "kind": err.kind(), "message": err.to_string() } }).to_string()
}

fn isf(run: &Run) -> Result<Outcome> {
    let exp = run.config.build()?;
    let tt = run.two_time(&exp)?;
    let grid = tt.grid();
    let s = tt.isf_all();
    let rows: Vec<Vec<f64>> = run
        .config
        .momenta()?
        .into_iter()
        .map(|m| vec![grid.momentum(m), tt.t1, tt.t2, s[m].re, s[m].im])
        .collect();
    let path = run.out_dir()?.join("isf.csv");
    write_table(&path, &run.header("isf", None).lines_with_seed(), &["p", "t1", "t2", "re_S", "im_S"], &rows)?;
    Ok(Outcome {
        files: vec![path],
        ..Default::default()
    })
}

fn split(run: &Run) -> Result<Outcome> {
    let exp = run.config.build()?;
    let tt = run.two_time(&exp)?;
    let rows: Vec<Vec<f64>> = split_dcf_all(&tt)
        .iter()
        .enumerate()
        .map(|(d, s)| vec![d as f64, s.total.re, s.total.im, s.projective.re, s.coherent.re, s.coherent.im])
        .collect();
    let path = run.out_dir()?.join("split.csv");
    write_table(
        &path,
        &run.header("split", None).lines_with_seed(),
        &["d", "re_G", "im_G", "re_Gproj", "re_Gamma", "im_Gamma"],
        &rows,
    )?;
    Ok(Outcome {
        files: vec![path],
        ..Default::default()
    })
}

fn interferogram(run: &Run) -> Result<Outcome> {
    let exp = run.config.build()?;
    let records = run.records(&exp)?;
    let dir = run.out_dir()?;
    let seed = run.config.noise().map(|n| n.seed);
    let preamble = run.header("interferogram", seed).lines();
    let mut files = Vec::new();
    for r in &records {
        let path = dir.join(format!("interferogram_m{}.csv", r.meta.momentum_index));
        let mut w = create(&path)?;
        r.write_csv(&mut w, &preamble)?;
        w.flush()?;
        files.push(path);
    }
    Ok(Outcome {
        files,
        ..Default::default()
    })
}

#[derive(Serialize)]
struct RecoveredDoc<'a> {
    header: Header,
    source: String,
    #[serde(flatten)]
    isf: &'a RecoveredIsf,
}

/// Interferogram files of a directory, ordered by momentum index.
pub fn read_interferograms(dir: &Path) -> Result<Vec<InterferogramRecord>> {
    let mut found = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if let Some(index) = name.strip_prefix("interferogram_m").and_then(|n| n.strip_suffix(".csv")) {
            if let Ok(m) = index.parse::<usize>() {
                found.push((m, path));
            }
        }
    }
    if found.is_empty() {
        return Err(QtdiError::Configuration(format!(
            "no interferogram_m*.csv files in {}",
            dir.display()
        )));
    }
    found.sort();
    found
        .into_iter()
        .map(|(_, path)| {
            let file = File::open(&path)?;
            InterferogramRecord::read_csv(BufReader::new(file))
                .map_err(|e| QtdiError::Parse(format!("{}: {e}", path.display())))
        })
        .collect()
}

fn recover(args: &RecoverArgs) -> Result<Outcome> {
    let (records, header, dir, source) = match &args.from {
        Some(from) => {
            let records = read_interferograms(from)?;
            // with a config the header identifies the run; without one the output
            // directory falls back to --out or the input directory
            let (config_sha256, dir) = match &args.common.config {
                Some(_) => {
                    let run = Run::load(&args.common)?;
                    (Some(run.config.hash()), run.out_dir()?)
                }
                None => (None, ensure_dir(args.common.out.as_deref().unwrap_or(from))?),
            };
            let header = Header {
                tool: "qtdi",
                version: VERSION,
                command: "recover",
                config_sha256,
                seed: records[0].meta.seed,
            };
            (records, header, dir, from.display().to_string())
        }
        None => {
            let run = Run::load(&args.common)?;
            let exp = run.config.build()?;
            let records = run.records(&exp)?;
            let header = run.header("recover", run.config.noise().map(|n| n.seed));
            (records, header, run.out_dir()?, "synthesized".to_string())
        }
    };

    let scan = RecoveredIsf::from_records(&records, 1.0)?;
    let csv_path = dir.join("recovered.csv");
    let mut w = create(&csv_path)?;
    scan.write_csv(&mut w, &header.lines_with_seed())?;
    w.flush()?;
    let json_path = dir.join("recovered.json");
    let lines = header.lines_with_seed();
    write_json(
        &json_path,
        &RecoveredDoc {
            header,
            source,
            isf: &scan,
        },
    )?;
    let mut files = vec![csv_path, json_path];

    if !scan.is_full_grid() {
        let missing: Vec<String> = (0..scan.sites)
            .filter(|m| !scan.points.contains_key(m))
            .map(|m| m.to_string())
            .collect();
        return Err(QtdiError::Grid(format!(
            "incomplete momentum grid: Im Gamma needs every momentum index, missing {}",
            missing.join(",")
        )));
    }
    let estimate = recover_im_gamma(&scan)?;
    let rows: Vec<Vec<f64>> = (0..scan.sites)
        .map(|d| {
            vec![
                d as f64,
                estimate.reconstruction.im_gamma[d],
                estimate.sigma[d],
                estimate.reconstruction.combination[d],
            ]
        })
        .collect();
    let gamma_path = dir.join("im_gamma.csv");
    write_table(&gamma_path, &lines, &["d", "im_gamma", "sigma", "combination"], &rows)?;
    files.push(gamma_path);
    Ok(Outcome {
        files,
        ..Default::default()
    })
}

#[derive(Serialize)]
struct Doc<T: Serialize> {
    header: Header,
    #[serde(flatten)]
    body: T,
}

fn backaction(run: &Run) -> Result<Outcome> {
    let exp = run.config.build()?;
    let Times { t1, t2 } = run.config.times;
    let shots = run.config.protocol_shots();
    let seed = run.config.noise.seed;
    let report = compare_protocols(&exp.state, &exp.hamiltonian, t1, t2, shots, seed, run.par)?;
    let path = run.out_dir()?.join("backaction.json");
    write_json(
        &path,
        &Doc {
            header: run.header("backaction", Some(seed)),
            body: &report,
        },
    )?;
    Ok(Outcome {
        files: vec![path],
        stdout: format_report(&report),
    })
}

#[derive(Serialize)]
struct SymcheckBody {
    t1: f64,
    t2: f64,
    #[serde(flatten)]
    report: crate::correlations::SymmetryReport,
    quantum_violation: f64,
    classical_symmetry_broken: bool,
}

/// Above this the classical symmetry S*(p) = S(-p) is reported as broken.
pub const CLASSICAL_WITNESS_TOL: f64 = 1e-9;

fn symcheck(run: &Run) -> Result<Outcome> {
    let exp = run.config.build()?;
    let spectrum = exp.hamiltonian.diagonalize();
    let Times { t1, t2 } = run.config.times;
    let report = symmetry_check(&exp.state, &spectrum.propagator(t1), &spectrum.propagator(t2))?;
    let broken = report.isf_classical > CLASSICAL_WITNESS_TOL;
    let stdout = format!(
        "quantum symmetry violation {:.3e}; max |Re S-| = {:.6e}; classical symmetry {}\n",
        report.quantum_violation(),
        report.antisymmetric_real,
        if broken { "broken (coherent contribution present)" } else { "holds" }
    );
    let path = run.out_dir()?.join("symcheck.json");
    write_json(
        &path,
        &Doc {
            header: run.header("symcheck", None),
            body: SymcheckBody {
                t1,
                t2,
                quantum_violation: report.quantum_violation(),
                report,
                classical_symmetry_broken: broken,
            },
        },
    )?;
    Ok(Outcome {
        files: vec![path],
        stdout,
    })
}
