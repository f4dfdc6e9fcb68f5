//! Run configuration: a flat `key = value` file with dotted sections.
//!
//! ```text
//! # Burgers convergence study
//! equation = burgers_gl
//! experiment = convergence
//! paths = 64
//! seed = 2024
//! grid.dim = 1
//! grid.modes = 256
//! scheme.dt = 1e-4
//! scheme.horizon = 0.25
//! scheme.eps_ladder = 0.1, 0.05, 0.025, 0.0125, 0.00625
//! ```
//!
//! Every key is optional except `equation` and `experiment`. Unknown keys
//! and repeated keys are errors that name the key and its line.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Coupling, DiffusionSpec};
use crate::error::{Error, Result};
use crate::integrator::{Scheme, SchemeConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    BurgersGl,
    TamedNs3d,
    TamedNs2d,
    Ns2d,
    LinearTest,
}

impl Equation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Equation::BurgersGl => "burgers_gl",
            Equation::TamedNs3d => "tamed_ns_3d",
            Equation::TamedNs2d => "tamed_ns_2d",
            Equation::Ns2d => "ns_2d",
            Equation::LinearTest => "linear_test",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            Equation::BurgersGl,
            Equation::TamedNs3d,
            Equation::TamedNs2d,
            Equation::Ns2d,
            Equation::LinearTest,
        ]
        .into_iter()
        .find(|e| e.as_str() == s)
    }

    /// Required spatial dimension, if fixed.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            Equation::BurgersGl => Some(1),
            Equation::TamedNs3d => Some(3),
            Equation::TamedNs2d | Equation::Ns2d => Some(2),
            Equation::LinearTest => None,
        }
    }

    pub fn is_velocity(&self) -> bool {
        matches!(self, Equation::TamedNs3d | Equation::TamedNs2d | Equation::Ns2d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Simulate,
    Moments,
    Convergence,
    StoppingTime,
    Verify,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Moments => "moments",
            Experiment::Convergence => "convergence",
            Experiment::StoppingTime => "stopping_time",
            Experiment::Verify => "verify",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            Experiment::Simulate,
            Experiment::Moments,
            Experiment::Convergence,
            Experiment::StoppingTime,
            Experiment::Verify,
        ]
        .into_iter()
        .find(|e| e.as_str() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub dim: usize,
    pub modes: usize,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientConfig {
    /// Burgers–GL `f(z) = c0 z²/2`, `g(z) = c1 z − c2 z³`.
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// Taming level `N` of the tamed equations.
    pub taming_level: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub count: usize,
    pub decay: f64,
    pub amplitude: f64,
    pub multiplicative: bool,
}

impl NoiseConfig {
    pub fn spec(&self) -> DiffusionSpec {
        DiffusionSpec {
            count: self.count,
            decay: self.decay,
            amplitude: self.amplitude,
            coupling: if self.multiplicative { Coupling::Multiplicative } else { Coupling::Additive },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeBlock {
    pub kind: Scheme,
    pub dt: f64,
    pub horizon: f64,
    pub epsilon: f64,
    /// ε values for the moment and convergence experiments.
    pub eps_ladder: Vec<f64>,
    pub record_every: usize,
    pub sup_guard: Option<f64>,
}

impl SchemeBlock {
    pub fn config(&self) -> SchemeConfig {
        SchemeConfig {
            scheme: self.kind,
            dt: self.dt,
            horizon: self.horizon,
            epsilon: self.epsilon,
            record_every: self.record_every,
            sup_guard: self.sup_guard,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// `amplitude · sin(mode · x₁)` in every component; scalar grids only.
    Sine,
    /// Taylor–Green vortex of the given amplitude and wavenumber.
    TaylorGreen,
    Zero,
    /// One draw of the verifier's field sampler at the given RMS amplitude.
    Random,
    /// Read from a snapshot file.
    Snapshot,
}

impl InitialKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            InitialKind::Sine => "sine",
            InitialKind::TaylorGreen => "taylor_green",
            InitialKind::Zero => "zero",
            InitialKind::Random => "random",
            InitialKind::Snapshot => "snapshot",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            InitialKind::Sine,
            InitialKind::TaylorGreen,
            InitialKind::Zero,
            InitialKind::Random,
            InitialKind::Snapshot,
        ]
        .into_iter()
        .find(|e| e.as_str() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialConfig {
    pub kind: InitialKind,
    pub amplitude: f64,
    pub mode: i64,
    pub seed: u64,
    pub path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub sobolev: Vec<f64>,
    pub powers: Vec<u32>,
    pub flat_band: f64,
    pub ratio: f64,
    pub dt_guard: f64,
    pub min_slope: f64,
    pub levels: Vec<f64>,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    /// Output directory; relative paths resolve against `HSPDE_OUTPUT_ROOT`
    /// when set, else the working directory.
    pub dir: String,
    pub snapshots: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub equation: Equation,
    pub experiment: Experiment,
    pub paths: usize,
    pub seed: u64,
    pub grid: GridConfig,
    pub coefficients: CoefficientConfig,
    pub noise: NoiseConfig,
    pub scheme: SchemeBlock,
    pub initial: InitialConfig,
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
}

/// Raw `key → (line, value)` pairs.
struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {line_no}: expected `key = value`, got `{line}`")))?;
            let key = key.trim().to_string();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
                return Err(Error::config(format!("line {line_no}: malformed key `{key}`")));
            }
            if let Some((first, _)) = map.get(&key) {
                return Err(Error::config(format!("line {line_no}: key `{key}` repeats line {first}")));
            }
            map.insert(key, (line_no, value.trim().to_string()));
        }
        Ok(Entries { map })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => v
                .parse()
                .map_err(|_| Error::config(format!("line {line}: `{key}` has invalid value `{v}`"))),
        }
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => v
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|_| Error::config(format!("line {line}: `{key}` has invalid entry `{}`", x.trim())))
                })
                .collect(),
        }
    }

    fn named<T>(&mut self, key: &str, parse: fn(&str) -> Option<T>, choices: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => parse(&v)
                .map(Some)
                .ok_or_else(|| Error::config(format!("line {line}: `{key} = {v}` is not one of {choices}"))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.iter().next() {
            None => Ok(()),
            Some((key, (line, _))) => Err(Error::config(format!("line {line}: unknown key `{key}`"))),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut e = Entries::parse(text)?;
        let equation = e
            .named("equation", Equation::parse, "burgers_gl, tamed_ns_3d, tamed_ns_2d, ns_2d, linear_test")?
            .ok_or_else(|| Error::config("missing key `equation`"))?;
        let experiment = e
            .named("experiment", Experiment::parse, "simulate, moments, convergence, stopping_time, verify")?
            .ok_or_else(|| Error::config("missing key `experiment`"))?;
        let default_dim = equation.dimension().unwrap_or(1);
        let dt = e.parsed("scheme.dt", 1e-3)?;
        let epsilon = e.parsed("scheme.epsilon", 0.0)?;
        let initial_kind = e
            .named("initial.kind", InitialKind::parse, "sine, taylor_green, zero, random, snapshot")?
            .unwrap_or(if equation.is_velocity() { InitialKind::TaylorGreen } else { InitialKind::Sine });
        let cfg = RunConfig {
            equation,
            experiment,
            paths: e.parsed("paths", 1)?,
            seed: e.parsed("seed", 0)?,
            grid: GridConfig {
                dim: e.parsed("grid.dim", default_dim)?,
                modes: e.parsed("grid.modes", 64)?,
                length: e.parsed("grid.length", 2.0 * PI)?,
            },
            coefficients: CoefficientConfig {
                c0: e.parsed("coefficients.c0", 1.0)?,
                c1: e.parsed("coefficients.c1", 1.0)?,
                c2: e.parsed("coefficients.c2", 1.0)?,
                taming_level: e.parsed("coefficients.taming_level", 16.0)?,
            },
            noise: NoiseConfig {
                count: e.parsed("noise.count", 16)?,
                decay: e.parsed("noise.decay", 2.0)?,
                amplitude: e.parsed("noise.amplitude", 0.5)?,
                multiplicative: match e.take("noise.coupling") {
                    None => false,
                    Some((_, v)) if v == "additive" => false,
                    Some((_, v)) if v == "multiplicative" => true,
                    Some((line, v)) => {
                        return Err(Error::config(format!(
                            "line {line}: `noise.coupling = {v}` is not one of additive, multiplicative"
                        )))
                    }
                },
            },
            scheme: SchemeBlock {
                kind: match e.take("scheme.kind") {
                    None => Scheme::ExponentialEuler,
                    Some((line, v)) => Scheme::parse(&v).map_err(|err| Error::config(format!("line {line}: {err}")))?,
                },
                dt,
                horizon: e.parsed("scheme.horizon", 0.1)?,
                epsilon,
                eps_ladder: e.list("scheme.eps_ladder", vec![epsilon])?,
                record_every: e.parsed("scheme.record_every", 1)?,
                sup_guard: match e.take("scheme.sup_guard") {
                    None => None,
                    Some((line, v)) => Some(
                        v.parse()
                            .map_err(|_| Error::config(format!("line {line}: `scheme.sup_guard` has invalid value `{v}`")))?,
                    ),
                },
            },
            initial: InitialConfig {
                kind: initial_kind,
                amplitude: e.parsed("initial.amplitude", 1.0)?,
                mode: e.parsed("initial.mode", 1)?,
                seed: e.parsed("initial.seed", 0)?,
                path: e.take("initial.path").map(|(_, v)| v),
            },
            analysis: AnalysisConfig {
                sobolev: e.list("analysis.sobolev", vec![0.0, 1.0])?,
                powers: e.list("analysis.powers", vec![1])?,
                flat_band: e.parsed("analysis.flat_band", 2.0)?,
                ratio: e.parsed("analysis.ratio", 0.5)?,
                dt_guard: e.parsed("analysis.dt_guard", 16.0)?,
                min_slope: e.parsed("analysis.min_slope", 0.4)?,
                levels: e.list("analysis.levels", vec![4.0, 16.0, 64.0])?,
                samples: e.parsed("analysis.samples", 1000)?,
            },
            output: OutputConfig {
                dir: e.parsed("output.dir", "hspde-out".to_string())?,
                snapshots: e.parsed("output.snapshots", false)?,
            },
        };
        e.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|err| Error::config(format!("cannot read config {}: {err}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        // snapshot paths are relative to the config file
        if let Some(p) = &cfg.initial.path {
            let p = Path::new(p);
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.initial.path = Some(dir.join(p).to_string_lossy().into_owned());
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if let Some(d) = self.equation.dimension() {
            if g.dim != d {
                return Err(Error::config(format!(
                    "equation = {} requires grid.dim = {d}, but grid.dim = {}",
                    self.equation.as_str(),
                    g.dim
                )));
            }
        }
        if !(1..=3).contains(&g.dim) {
            return Err(Error::config(format!("grid.dim must be 1, 2 or 3, got {}", g.dim)));
        }
        if g.modes < 4 || g.modes % 2 != 0 {
            return Err(Error::config(format!("grid.modes must be even and at least 4, got {}", g.modes)));
        }
        if !(g.length > 0.0 && g.length.is_finite()) {
            return Err(Error::config(format!("grid.length must be positive, got {}", g.length)));
        }
        if self.paths == 0 {
            return Err(Error::config("paths must be at least 1"));
        }
        self.noise.spec().validate()?;
        self.scheme.config().validate()?;
        if self.scheme.eps_ladder.is_empty() {
            return Err(Error::config("scheme.eps_ladder must not be empty"));
        }
        if matches!(self.equation, Equation::TamedNs2d | Equation::TamedNs3d) && !(self.coefficients.taming_level > 0.0) {
            return Err(Error::config("coefficients.taming_level must be positive"));
        }
        if self.experiment == Experiment::StoppingTime && self.equation != Equation::TamedNs2d {
            return Err(Error::config(format!(
                "experiment = stopping_time requires equation = tamed_ns_2d, but equation = {}",
                self.equation.as_str()
            )));
        }
        match self.initial.kind {
            InitialKind::Sine if self.equation.is_velocity() => {
                return Err(Error::config(format!(
                    "initial.kind = sine is scalar, but equation = {} is a velocity field",
                    self.equation.as_str()
                )))
            }
            InitialKind::TaylorGreen if !self.equation.is_velocity() => {
                return Err(Error::config(format!(
                    "initial.kind = taylor_green is a velocity field, but equation = {} is scalar",
                    self.equation.as_str()
                )))
            }
            InitialKind::Snapshot if self.initial.path.is_none() => {
                return Err(Error::config("initial.kind = snapshot requires initial.path"));
            }
            _ => {}
        }
        Ok(())
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("equation", self.equation.as_str().into());
        kv("experiment", self.experiment.as_str().into());
        kv("paths", self.paths.to_string());
        kv("seed", self.seed.to_string());
        kv("grid.dim", self.grid.dim.to_string());
        kv("grid.modes", self.grid.modes.to_string());
        kv("grid.length", format!("{:?}", self.grid.length));
        kv("coefficients.c0", format!("{:?}", self.coefficients.c0));
        kv("coefficients.c1", format!("{:?}", self.coefficients.c1));
        kv("coefficients.c2", format!("{:?}", self.coefficients.c2));
        kv("coefficients.taming_level", format!("{:?}", self.coefficients.taming_level));
        kv("noise.count", self.noise.count.to_string());
        kv("noise.decay", format!("{:?}", self.noise.decay));
        kv("noise.amplitude", format!("{:?}", self.noise.amplitude));
        kv("noise.coupling", self.noise.spec().coupling.as_str().into());
        kv("scheme.kind", self.scheme.kind.as_str().into());
        kv("scheme.dt", format!("{:?}", self.scheme.dt));
        kv("scheme.horizon", format!("{:?}", self.scheme.horizon));
        kv("scheme.epsilon", format!("{:?}", self.scheme.epsilon));
        kv("scheme.eps_ladder", list(&self.scheme.eps_ladder));
        kv("scheme.record_every", self.scheme.record_every.to_string());
        if let Some(g) = self.scheme.sup_guard {
            kv("scheme.sup_guard", format!("{g:?}"));
        }
        kv("initial.kind", self.initial.kind.as_str().into());
        kv("initial.amplitude", format!("{:?}", self.initial.amplitude));
        kv("initial.mode", self.initial.mode.to_string());
        kv("initial.seed", self.initial.seed.to_string());
        if let Some(p) = &self.initial.path {
            kv("initial.path", p.clone());
        }
        kv("analysis.sobolev", list(&self.analysis.sobolev));
        kv(
            "analysis.powers",
            self.analysis.powers.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", "),
        );
        kv("analysis.flat_band", format!("{:?}", self.analysis.flat_band));
        kv("analysis.ratio", format!("{:?}", self.analysis.ratio));
        kv("analysis.dt_guard", format!("{:?}", self.analysis.dt_guard));
        kv("analysis.min_slope", format!("{:?}", self.analysis.min_slope));
        kv("analysis.levels", list(&self.analysis.levels));
        kv("analysis.samples", self.analysis.samples.to_string());
        kv("output.dir", self.output.dir.clone());
        kv("output.snapshots", self.output.snapshots.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "equation = linear_test\nexperiment = simulate\n";

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.grid.dim, 1);
        assert_eq!(c.noise.count, 16);
        assert_eq!(c.scheme.eps_ladder, vec![0.0]);
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = RunConfig::parse("# hi\n\nequation = burgers_gl # inline\nexperiment = simulate\n").unwrap();
        assert_eq!(c.equation, Equation::BurgersGl);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::parse(&format!("{MINIMAL}grid.dimm = 2\n")).unwrap_err().to_string();
        assert!(err.contains("grid.dimm") && err.contains("line 3"), "{err}");
    }

    #[test]
    fn repeated_key() {
        let err = RunConfig::parse(&format!("{MINIMAL}seed = 1\nseed = 2\n")).unwrap_err().to_string();
        assert!(err.contains("seed") && err.contains("repeats"), "{err}");
    }

    #[test]
    fn dimension_mismatch_names_both_fields() {
        let err = RunConfig::parse("equation = burgers_gl\nexperiment = simulate\ngrid.dim = 2\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("equation") && err.contains("grid.dim"), "{err}");
    }

    #[test]
    fn text_round_trip() {
        let text = "equation = tamed_ns_2d\nexperiment = stopping_time\npaths = 8\nscheme.eps_ladder = 0.1, 0.05\n\
                    scheme.sup_guard = 3\nanalysis.levels = 1, 2.5\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }
}
