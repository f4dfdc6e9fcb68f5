//! Executes a [`RunConfig`] and records everything needed to replay it.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Equation, Experiment, InitialKind, RunConfig};
use crate::analysis::stats::mean_stderr;
use crate::analysis::{
    convergence_study, estimate_moments, farm, stopping_time_study, verify_hypotheses, write_csv, ConvergenceSpec,
    FieldSampler, MomentSpec, Report, ReportRow, StoppingSpec,
};
use crate::dynamics::{BurgersGl, BurgersGlCoefficients, Dynamics, LinearTest, TamedNs, TamingFunction};
use crate::error::{Error, Result};
use crate::hilbert::ScaleOperator;
use crate::integrator::{simulate, BlowUp};
use crate::noise::{path_seed, NoisePath};
use crate::spectral::{Grid, SpectralField};

/// Environment variable that relative output directories resolve against.
pub const OUTPUT_ROOT_VAR: &str = "HSPDE_OUTPUT_ROOT";
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl Artifact {
    fn of(path: &Path, name: String) -> Result<Self> {
        let mut file = File::open(path)?;
        let mut hasher = Sha256::new();
        let mut buf = [0u8; 1 << 16];
        let mut bytes = 0u64;
        loop {
            let n = file.read(&mut buf)?;
            if n == 0 {
                break;
            }
            hasher.update(&buf[..n]);
            bytes += n as u64;
        }
        Ok(Artifact {
            path: name,
            bytes,
            sha256: hex::encode(hasher.finalize()),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    /// The resolved config in file form.
    pub config_text: String,
    pub started_unix: u64,
    pub wall_seconds: f64,
    pub threads: usize,
    /// Seed of every Monte Carlo path, or of the field sampler.
    pub seeds: Vec<u64>,
    pub pass: bool,
    /// Files read by the run (initial snapshots), with absolute paths.
    pub inputs: Vec<Artifact>,
    /// Every file written next to the manifest, sorted by name.
    pub artifacts: Vec<Artifact>,
}

/// `dir` itself when absolute, else joined to `$HSPDE_OUTPUT_ROOT` (or the
/// working directory when unset).
pub fn resolve_output(dir: &str) -> PathBuf {
    let p = Path::new(dir);
    if p.is_absolute() {
        return p.to_path_buf();
    }
    match std::env::var_os(OUTPUT_ROOT_VAR) {
        Some(root) => Path::new(&root).join(p),
        None => p.to_path_buf(),
    }
}

pub fn build_dynamics(cfg: &RunConfig) -> Result<Box<dyn Dynamics>> {
    let g = &cfg.grid;
    let noise = cfg.noise.spec();
    let c = &cfg.coefficients;
    Ok(match cfg.equation {
        Equation::BurgersGl => Box::new(BurgersGl::new(
            &Grid::scalar(1, g.modes, g.length)?,
            BurgersGlCoefficients::canonical(c.c0, c.c1, c.c2)?,
            &noise,
        )?),
        Equation::TamedNs3d | Equation::TamedNs2d => Box::new(TamedNs::new(
            &Grid::vector(g.dim, g.modes, g.length)?,
            Some(TamingFunction::new(c.taming_level)?),
            &noise,
        )?),
        Equation::Ns2d => Box::new(TamedNs::new(&Grid::vector(2, g.modes, g.length)?, None, &noise)?),
        Equation::LinearTest => Box::new(LinearTest::new(&Grid::scalar(g.dim, g.modes, g.length)?, &noise)?),
    })
}

pub fn initial_state(cfg: &RunConfig, grid: &Grid) -> Result<SpectralField> {
    let init = &cfg.initial;
    let a = init.amplitude;
    let k = 2.0 * std::f64::consts::PI * init.mode as f64 / grid.period();
    match init.kind {
        InitialKind::Zero => Ok(SpectralField::zeros(grid)),
        InitialKind::Sine => SpectralField::from_fn(grid, |x, out| out.fill(a * (k * x[0]).sin())),
        InitialKind::TaylorGreen => SpectralField::from_fn(grid, |x, out| {
            let z = if grid.dim() == 3 { (k * x[2]).cos() } else { 1.0 };
            out[0] = a * (k * x[0]).sin() * (k * x[1]).cos() * z;
            out[1] = -a * (k * x[0]).cos() * (k * x[1]).sin() * z;
            if out.len() == 3 {
                out[2] = 0.0;
            }
        }),
        InitialKind::Random => {
            let sampler = FieldSampler {
                amplitude: a,
                ..FieldSampler::new(grid, init.seed)
            };
            sampler.sample(0, 0)
        }
        InitialKind::Snapshot => {
            let path = init.path.as_deref().ok_or_else(|| Error::config("initial.path missing"))?;
            let u = SpectralField::read_snapshot(std::io::BufReader::new(File::open(path)?))?;
            if u.grid() != grid {
                return Err(Error::config(format!(
                    "snapshot {path} is on a {}-D grid with {} modes and {} components, the run expects {}-D, {} modes, {} components",
                    u.grid().dim(),
                    u.grid().modes(),
                    u.n_components(),
                    grid.dim(),
                    grid.modes(),
                    grid.n_components()
                )));
            }
            Ok(u)
        }
    }
}

/// Ensemble statistics of a plain simulation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationReport {
    pub paths: usize,
    pub times: Vec<f64>,
    /// Mean and standard error of `‖u(t)‖_0²` and `‖u(t)‖_1²` over the paths
    /// still alive at each recorded time.
    pub energy: Vec<(f64, f64)>,
    pub h1_squared: Vec<(f64, f64)>,
    pub alive: Vec<usize>,
    pub blow_ups: Vec<(usize, BlowUp)>,
    pub pass: bool,
}

impl Report for SimulationReport {
    fn rows(&self) -> Vec<ReportRow> {
        let mut rows = Vec::new();
        for (i, t) in self.times.iter().enumerate() {
            rows.push(ReportRow::new("simulate", format!("h0_squared;t={t}"), self.energy[i].0, self.energy[i].1, true));
            rows.push(ReportRow::new(
                "simulate",
                format!("h1_squared;t={t}"),
                self.h1_squared[i].0,
                self.h1_squared[i].1,
                true,
            ));
        }
        rows.push(ReportRow::new(
            "simulate",
            "blow_ups",
            self.blow_ups.len() as f64,
            0.0,
            self.blow_ups.is_empty(),
        ));
        rows
    }

    fn pass(&self) -> bool {
        self.pass
    }
}

struct SimulationOutput {
    report: SimulationReport,
    first_final: SpectralField,
}

fn run_simulation(dynamics: &dyn Dynamics, u0: &SpectralField, cfg: &RunConfig, seeds: &[u64]) -> Result<SimulationOutput> {
    let scheme = cfg.scheme.config();
    let op = ScaleOperator::new(dynamics.grid());
    let k = dynamics.noise_components();
    let per_path = farm(seeds.len(), |i| -> Result<_> {
        let noise = NoisePath::new(seeds[i], k, scheme.dt)?;
        let tr = simulate(dynamics, u0, &noise, &scheme)?;
        let h1: Vec<f64> = tr.states.iter().map(|s| op.norm_squared(s, 1.0)).collect();
        let last = tr.states.last().cloned().unwrap_or_else(|| u0.clone());
        Ok((tr.times, tr.energy, h1, tr.blow_up, last))
    });
    let per_path = per_path.into_iter().collect::<Result<Vec<_>>>()?;
    // the path with the most records fixes the time axis
    let times = per_path.iter().map(|p| &p.0).max_by_key(|t| t.len()).cloned().unwrap_or_default();
    let column = |j: usize, pick: &dyn Fn(&(Vec<f64>, Vec<f64>, Vec<f64>, Option<BlowUp>, SpectralField)) -> &Vec<f64>| {
        let vals: Vec<f64> = per_path.iter().filter_map(|p| pick(p).get(j).copied()).collect();
        let e = mean_stderr(&vals);
        ((e.mean, e.stderr), vals.len())
    };
    let mut energy = Vec::new();
    let mut h1_squared = Vec::new();
    let mut alive = Vec::new();
    for j in 0..times.len() {
        let (e, n) = column(j, &|p| &p.1);
        energy.push(e);
        h1_squared.push(column(j, &|p| &p.2).0);
        alive.push(n);
    }
    let blow_ups: Vec<(usize, BlowUp)> = per_path
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.3.clone().map(|b| (i, b)))
        .collect();
    Ok(SimulationOutput {
        first_final: per_path[0].4.clone(),
        report: SimulationReport {
            paths: seeds.len(),
            pass: blow_ups.is_empty(),
            times,
            energy,
            h1_squared,
            alive,
            blow_ups,
        },
    })
}

/// Result of [`execute`].
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

impl RunOutcome {
    pub fn pass(&self) -> bool {
        self.manifest.pass
    }
}

fn write_report<R: Report>(dir: &Path, report: &R) -> Result<bool> {
    write_csv(&report.rows(), BufWriter::new(File::create(dir.join("report.csv"))?))?;
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    std::fs::write(dir.join("report.json"), json)?;
    Ok(report.pass())
}

fn write_snapshot(path: &Path, u: &SpectralField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    u.write_snapshot(&mut w)?;
    std::io::Write::flush(&mut w)?;
    Ok(())
}

/// Runs `cfg` into `dir`, which must be empty or absent. `threads` sizes the
/// worker pool (all cores when `None`); results do not depend on it.
pub fn execute(cfg: &RunConfig, dir: &Path, threads: Option<usize>) -> Result<RunOutcome> {
    cfg.validate()?;
    if dir.exists() && std::fs::read_dir(dir)?.next().is_some() {
        return Err(Error::config(format!("output directory {} is not empty", dir.display())));
    }
    std::fs::create_dir_all(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);

    let dynamics = build_dynamics(cfg)?;
    let grid = dynamics.grid().clone();
    let u0 = initial_state(cfg, &grid)?;
    let scheme = cfg.scheme.config();
    let a = &cfg.analysis;
    let path_seeds: Vec<u64> = (0..cfg.paths).map(|i| path_seed(cfg.seed, i as u64)).collect();

    let (pass, seeds) = pool.install(|| -> Result<(bool, Vec<u64>)> {
        Ok(match cfg.experiment {
            Experiment::Simulate => {
                let out = run_simulation(dynamics.as_ref(), &u0, cfg, &path_seeds)?;
                if cfg.output.snapshots {
                    write_snapshot(&dir.join("initial.hsnap"), &u0)?;
                    write_snapshot(&dir.join("final.hsnap"), &out.first_final)?;
                }
                (write_report(dir, &out.report)?, path_seeds)
            }
            Experiment::Moments => {
                let spec = MomentSpec {
                    paths: cfg.paths,
                    seed: cfg.seed,
                    sobolev: a.sobolev.clone(),
                    powers: a.powers.clone(),
                    eps_ladder: cfg.scheme.eps_ladder.clone(),
                    flat_band: a.flat_band,
                };
                let r = estimate_moments(dynamics.as_ref(), &u0, &scheme, &spec)?;
                (write_report(dir, &r)?, path_seeds)
            }
            Experiment::Convergence => {
                let spec = ConvergenceSpec {
                    paths: cfg.paths,
                    seed: cfg.seed,
                    eps_ladder: cfg.scheme.eps_ladder.clone(),
                    ratio: a.ratio,
                    dt_guard: a.dt_guard,
                    min_slope: a.min_slope,
                };
                let r = convergence_study(dynamics.as_ref(), &u0, &scheme, &spec)?;
                (write_report(dir, &r)?, path_seeds)
            }
            Experiment::StoppingTime => {
                let spec = StoppingSpec {
                    paths: cfg.paths,
                    seed: cfg.seed,
                    levels: a.levels.clone(),
                };
                let r = stopping_time_study(&grid, &cfg.noise.spec(), &u0, &scheme, &spec)?;
                (write_report(dir, &r)?, path_seeds)
            }
            Experiment::Verify => {
                let sampler = FieldSampler::new(&grid, cfg.seed);
                let r = verify_hypotheses(dynamics.as_ref(), &sampler, a.samples)?;
                (write_report(dir, &r)?, vec![cfg.seed])
            }
        })
    })?;

    let mut artifacts = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name != MANIFEST_NAME && entry.file_type()?.is_file() {
            artifacts.push(Artifact::of(&entry.path(), name)?);
        }
    }
    artifacts.sort_by(|x, y| x.path.cmp(&y.path));
    let mut inputs = Vec::new();
    if let (InitialKind::Snapshot, Some(p)) = (cfg.initial.kind, &cfg.initial.path) {
        let abs = std::fs::canonicalize(p)?;
        inputs.push(Artifact::of(&abs, abs.to_string_lossy().into_owned())?);
    }
    let manifest = RunManifest {
        tool: "hspde".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        config_text: cfg.to_text(),
        started_unix,
        wall_seconds: started.elapsed().as_secs_f64(),
        threads: pool.current_num_threads(),
        seeds,
        pass,
        inputs,
        artifacts,
    };
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    std::fs::write(dir.join(MANIFEST_NAME), json)?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        manifest,
    })
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read manifest {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Outcome of [`replay`]: names of artifacts whose content differs, or that
/// exist on one side only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayOutcome {
    pub divergent: Vec<String>,
}

impl ReplayOutcome {
    pub fn identical(&self) -> bool {
        self.divergent.is_empty()
    }
}

/// Re-executes the run recorded in `manifest_path` in a scratch directory and
/// compares content hashes.
pub fn replay(manifest_path: &Path, threads: Option<usize>) -> Result<ReplayOutcome> {
    let original = read_manifest(manifest_path)?;
    original.config.validate()?;
    let mut divergent = Vec::new();
    for input in &original.inputs {
        match Artifact::of(Path::new(&input.path), input.path.clone()) {
            Ok(now) if now.sha256 == input.sha256 => {}
            _ => divergent.push(format!("input {}", input.path)),
        }
    }
    let scratch = tempfile::tempdir()?;
    let fresh = execute(&original.config, &scratch.path().join("replay"), threads)?;
    for a in &original.artifacts {
        match fresh.manifest.artifacts.iter().find(|b| b.path == a.path) {
            Some(b) if b.sha256 == a.sha256 => {}
            _ => divergent.push(a.path.clone()),
        }
    }
    for b in &fresh.manifest.artifacts {
        if !original.artifacts.iter().any(|a| a.path == b.path) {
            divergent.push(b.path.clone());
        }
    }
    Ok(ReplayOutcome { divergent })
}

/// Grid metadata and low Sobolev norms of a snapshot.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SnapshotSummary {
    pub dim: usize,
    pub modes: usize,
    pub length: f64,
    pub components: usize,
    pub h0: f64,
    pub h1: f64,
    pub h2: f64,
}

impl fmt::Display for SnapshotSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dim        {}", self.dim)?;
        writeln!(f, "modes      {}", self.modes)?;
        writeln!(f, "length     {}", self.length)?;
        writeln!(f, "components {}", self.components)?;
        writeln!(f, "‖u‖_0      {:.12e}", self.h0)?;
        writeln!(f, "‖u‖_1      {:.12e}", self.h1)?;
        write!(f, "‖u‖_2      {:.12e}", self.h2)
    }
}

pub fn inspect(path: &Path) -> Result<SnapshotSummary> {
    let u = SpectralField::read_snapshot(std::io::BufReader::new(File::open(path)?))?;
    let g = u.grid();
    let op = ScaleOperator::new(g);
    Ok(SnapshotSummary {
        dim: g.dim(),
        modes: g.modes(),
        length: g.period(),
        components: g.n_components(),
        h0: op.norm(&u, 0.0),
        h1: op.norm(&u, 1.0),
        h2: op.norm(&u, 2.0),
    })
}
