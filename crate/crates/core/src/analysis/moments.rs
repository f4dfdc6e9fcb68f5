//! Monte Carlo estimates of `E sup_t ‖u^ε(t)‖_m^{2p}` along an ε ladder.

use serde::Serialize;

use super::stats::mean_stderr;
use super::{farm, Report, ReportRow};
use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::hilbert::ScaleOperator;
use crate::integrator::{simulate_with, BlowUp, SchemeConfig};
use crate::noise::{path_seed, NoisePath};
use crate::spectral::SpectralField;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentSpec {
    pub paths: usize,
    pub seed: u64,
    /// Sobolev indices `m`.
    pub sobolev: Vec<f64>,
    /// Moment orders `p`.
    pub powers: Vec<u32>,
    pub eps_ladder: Vec<f64>,
    /// A column counts as flat in ε when max/min stays within this factor.
    pub flat_band: f64,
}

impl MomentSpec {
    pub const MIN_PATHS: usize = 8;

    pub fn validate(&self) -> Result<()> {
        if self.paths < Self::MIN_PATHS {
            return Err(Error::InsufficientData(format!(
                "moment estimates need at least {} paths, got {}",
                Self::MIN_PATHS,
                self.paths
            )));
        }
        if self.sobolev.is_empty() || self.powers.is_empty() || self.eps_ladder.is_empty() {
            return Err(Error::config("moment study needs at least one m, p and ε"));
        }
        if self.powers.contains(&0) {
            return Err(Error::config("moment orders must be at least 1"));
        }
        if self.eps_ladder.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(Error::config("ε ladder values must be finite and nonnegative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentEntry {
    pub m: f64,
    pub p: u32,
    pub eps: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub paths_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Flatness {
    pub m: f64,
    pub p: u32,
    pub max_over_min: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncatedPath {
    pub eps: f64,
    pub path: usize,
    pub seed: u64,
    pub blow_up: BlowUp,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentTable {
    pub paths: usize,
    pub seeds: Vec<u64>,
    pub dt: f64,
    pub entries: Vec<MomentEntry>,
    pub flatness: Vec<Flatness>,
    /// Paths that blew up; excluded from the estimates of their ε.
    pub truncated: Vec<TruncatedPath>,
    pub pass: bool,
}

impl MomentTable {
    pub fn entry(&self, m: f64, p: u32, eps: f64) -> Option<&MomentEntry> {
        self.entries.iter().find(|e| e.m == m && e.p == p && e.eps == eps)
    }
}

/// Per path and ε: `sup_t ‖u(t)‖_m²` for each `m`, or the blow-up.
type PathSups = Vec<std::result::Result<Vec<f64>, BlowUp>>;

pub fn estimate_moments(
    dynamics: &dyn Dynamics,
    u0: &SpectralField,
    config: &SchemeConfig,
    spec: &MomentSpec,
) -> Result<MomentTable> {
    spec.validate()?;
    config.validate()?;
    let op = ScaleOperator::new(dynamics.grid());
    let k = dynamics.noise_components();
    let seeds: Vec<u64> = (0..spec.paths).map(|i| path_seed(spec.seed, i as u64)).collect();

    let per_path: Vec<Result<PathSups>> = farm(spec.paths, |i| {
        let noise = NoisePath::new(seeds[i], k, config.dt)?;
        spec.eps_ladder
            .iter()
            .map(|&eps| {
                let cfg = config.with_epsilon(eps);
                let mut sups = vec![0.0f64; spec.sobolev.len()];
                let (_, blow) = simulate_with(dynamics, u0, &noise, &cfg, |view| {
                    for (s, &m) in sups.iter_mut().zip(&spec.sobolev) {
                        *s = s.max(op.norm_squared(view.state, m));
                    }
                })?;
                Ok(match blow {
                    Some(b) => Err(b),
                    None => Ok(sups),
                })
            })
            .collect()
    });
    let per_path = per_path.into_iter().collect::<Result<Vec<_>>>()?;

    let mut truncated = Vec::new();
    for (i, arms) in per_path.iter().enumerate() {
        for (e, arm) in arms.iter().enumerate() {
            if let Err(b) = arm {
                truncated.push(TruncatedPath {
                    eps: spec.eps_ladder[e],
                    path: i,
                    seed: seeds[i],
                    blow_up: b.clone(),
                });
            }
        }
    }

    let mut entries = Vec::new();
    let mut flatness = Vec::new();
    for (mi, &m) in spec.sobolev.iter().enumerate() {
        for &p in &spec.powers {
            let mut column = Vec::new();
            for (e, &eps) in spec.eps_ladder.iter().enumerate() {
                let values: Vec<f64> = per_path
                    .iter()
                    .filter_map(|arms| arms[e].as_ref().ok())
                    .map(|sups| sups[mi].powi(p as i32))
                    .collect();
                let est = mean_stderr(&values);
                column.push(est.mean);
                entries.push(MomentEntry {
                    m,
                    p,
                    eps,
                    estimate: est.mean,
                    stderr: est.stderr,
                    paths_used: values.len(),
                });
            }
            let hi = column.iter().cloned().fold(f64::MIN, f64::max);
            let lo = column.iter().cloned().fold(f64::MAX, f64::min);
            let ratio = if lo > 0.0 { hi / lo } else if hi == 0.0 { 1.0 } else { f64::INFINITY };
            flatness.push(Flatness {
                m,
                p,
                max_over_min: ratio,
                pass: ratio.is_finite() && ratio <= spec.flat_band,
            });
        }
    }
    let finite = entries.iter().all(|e| e.estimate.is_finite() && e.estimate >= 0.0);
    let pass = finite && flatness.iter().all(|f| f.pass);
    Ok(MomentTable {
        paths: spec.paths,
        seeds,
        dt: config.dt,
        entries,
        flatness,
        truncated,
        pass,
    })
}

impl Report for MomentTable {
    fn rows(&self) -> Vec<ReportRow> {
        let mut rows: Vec<ReportRow> = self
            .entries
            .iter()
            .map(|e| {
                ReportRow::new(
                    "moments",
                    format!("m={};p={};eps={}", e.m, e.p, e.eps),
                    e.estimate,
                    e.stderr,
                    e.estimate.is_finite(),
                )
            })
            .collect();
        rows.extend(self.flatness.iter().map(|f| {
            ReportRow::new("moments", format!("flatness;m={};p={}", f.m, f.p), f.max_over_min, f64::NAN, f.pass)
        }));
        rows.push(ReportRow::new(
            "moments",
            "truncated_paths",
            self.truncated.len() as f64,
            0.0,
            true,
        ));
        rows
    }

    fn pass(&self) -> bool {
        self.pass
    }
}
