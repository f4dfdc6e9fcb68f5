//! Hitting times `τ_N = inf{t : sup_x |u_N(t, x)| ≥ √N}` of tamed 2-D
//! Navier–Stokes runs, and the time change
//! `λ_N(t) = ∫_0^t (1 + ‖u‖_1²)(1 + ‖u‖_0²) ds`.
//!
//! Every level uses the same seeds, so the runs are coupled path by path.
//! While `|u|² < N` everywhere the taming term vanishes identically, which
//! makes a larger level hit no earlier than a smaller one.

use serde::Serialize;

use super::stats::{mean_stderr, pairwise_sum, wilson_interval};
use super::{farm, Report, ReportRow};
use crate::dynamics::{DiffusionSpec, TamedNs, TamingFunction};
use crate::error::{Error, Result};
use crate::hilbert::ScaleOperator;
use crate::integrator::{simulate_with, SchemeConfig};
use crate::noise::{path_seed, NoisePath};
use crate::spectral::{Grid, SpectralField};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StoppingSpec {
    pub paths: usize,
    pub seed: u64,
    /// Taming levels `N`, increasing.
    pub levels: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelResult {
    pub level: f64,
    pub threshold: f64,
    pub hits: usize,
    pub paths: usize,
    pub fraction: f64,
    pub interval: (f64, f64),
    /// Mean of `τ_N` over the paths that hit.
    pub mean_hitting_time: Option<f64>,
    /// `E λ_N(T ∧ τ_N)` and its standard error.
    pub time_change: f64,
    pub time_change_stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StoppingReport {
    pub horizon: f64,
    pub levels: Vec<LevelResult>,
    pub seeds: Vec<u64>,
    /// `(path, smaller level, larger level)` where the larger level hit first.
    pub monotone_violations: Vec<(usize, f64, f64)>,
    /// Hitting fractions nonincreasing in `N` within the 95% bars.
    pub pass: bool,
}

struct PathLevel {
    hit: Option<usize>,
    time_change: f64,
}

pub fn stopping_time_study(
    grid: &Grid,
    noise: &DiffusionSpec,
    u0: &SpectralField,
    config: &SchemeConfig,
    spec: &StoppingSpec,
) -> Result<StoppingReport> {
    if grid.dim() != 2 || grid.n_components() != 2 {
        return Err(Error::config("stopping-time study runs on a 2-D velocity grid"));
    }
    if spec.levels.is_empty() || spec.levels.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::config("taming levels must be nonempty and strictly increasing"));
    }
    if spec.paths == 0 {
        return Err(Error::InsufficientData("stopping-time study needs paths".into()));
    }
    config.validate()?;
    let models = spec
        .levels
        .iter()
        .map(|&n| TamedNs::new(grid, Some(TamingFunction::new(n)?), noise))
        .collect::<Result<Vec<_>>>()?;
    let op = ScaleOperator::new(grid);
    let seeds: Vec<u64> = (0..spec.paths).map(|i| path_seed(spec.seed, i as u64)).collect();
    let dt = config.dt;

    let per_path: Vec<Result<Vec<PathLevel>>> = farm(spec.paths, |i| {
        let path = NoisePath::new(seeds[i], noise.count, dt)?;
        models
            .iter()
            .zip(&spec.levels)
            .map(|(model, &n)| {
                let cfg = SchemeConfig { sup_guard: Some(n.sqrt()), ..config.clone() };
                let mut integrand = Vec::new();
                let (steps, blow) = simulate_with(model, u0, &path, &cfg, |view| {
                    let h0 = op.norm_squared(view.state, 0.0);
                    let h1 = op.norm_squared(view.state, 1.0);
                    integrand.push((1.0 + h1) * (1.0 + h0) * dt);
                })?;
                // left-point rule over the steps actually taken
                integrand.truncate(steps);
                Ok(PathLevel {
                    hit: blow.map(|b| b.step),
                    time_change: pairwise_sum(&integrand),
                })
            })
            .collect()
    });
    let per_path = per_path.into_iter().collect::<Result<Vec<_>>>()?;

    let levels: Vec<LevelResult> = spec
        .levels
        .iter()
        .enumerate()
        .map(|(l, &n)| {
            let hits: Vec<usize> = per_path.iter().filter_map(|p| p[l].hit).collect();
            let tc: Vec<f64> = per_path.iter().map(|p| p[l].time_change).collect();
            let tc = mean_stderr(&tc);
            let times: Vec<f64> = hits.iter().map(|&s| s as f64 * dt).collect();
            LevelResult {
                level: n,
                threshold: n.sqrt(),
                hits: hits.len(),
                paths: spec.paths,
                fraction: hits.len() as f64 / spec.paths as f64,
                interval: wilson_interval(hits.len(), spec.paths),
                mean_hitting_time: (!times.is_empty()).then(|| mean_stderr(&times).mean),
                time_change: tc.mean,
                time_change_stderr: tc.stderr,
            }
        })
        .collect();

    let mut monotone_violations = Vec::new();
    for (i, p) in per_path.iter().enumerate() {
        for a in 0..spec.levels.len() {
            for b in a + 1..spec.levels.len() {
                let earlier = match (p[a].hit, p[b].hit) {
                    (_, None) => false,
                    (None, Some(_)) => true,
                    (Some(sa), Some(sb)) => sb < sa,
                };
                if earlier {
                    monotone_violations.push((i, spec.levels[a], spec.levels[b]));
                }
            }
        }
    }
    let pass = levels
        .windows(2)
        .all(|w| w[1].fraction <= w[0].interval.1);
    Ok(StoppingReport {
        horizon: config.horizon,
        levels,
        seeds,
        monotone_violations,
        pass,
    })
}

impl Report for StoppingReport {
    fn rows(&self) -> Vec<ReportRow> {
        let mut rows = Vec::new();
        for l in &self.levels {
            let se = (l.fraction * (1.0 - l.fraction) / l.paths as f64).sqrt();
            rows.push(ReportRow::new(
                "stopping_time",
                format!("hit_fraction;N={}", l.level),
                l.fraction,
                se,
                self.pass,
            ));
            rows.push(ReportRow::new(
                "stopping_time",
                format!("time_change;N={}", l.level),
                l.time_change,
                l.time_change_stderr,
                l.time_change.is_finite(),
            ));
        }
        rows.push(ReportRow::new(
            "stopping_time",
            "monotone_violations",
            self.monotone_violations.len() as f64,
            0.0,
            self.monotone_violations.is_empty(),
        ));
        rows
    }

    fn pass(&self) -> bool {
        self.pass
    }
}
