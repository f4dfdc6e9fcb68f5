//! Coupled ε-convergence: `E sup_t ‖u^ε − u^{ε'}‖_0²` with both arms driven
//! by the same Brownian path, fitted against ε on a log-log scale.

use serde::Serialize;

use super::stats::{least_squares, mean_stderr};
use super::{farm, Report, ReportRow};
use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::hilbert::ScaleOperator;
use crate::integrator::{BlowUp, SchemeConfig, Stepper};
use crate::noise::{path_seed, NoisePath};
use crate::spectral::SpectralField;

/// Steps several configurations in lockstep on one noise path. `observe`
/// sees the states of every arm after each step (and once at t = 0).
/// Stops at the first non-finite state in any arm.
pub(crate) fn run_coupled<F>(
    dynamics: &dyn Dynamics,
    u0: &SpectralField,
    noise: &NoisePath,
    configs: &[SchemeConfig],
    mut observe: F,
) -> Result<Option<BlowUp>>
where
    F: FnMut(&[SpectralField]),
{
    let first = configs.first().ok_or_else(|| Error::config("no arms to couple"))?;
    if configs.iter().any(|c| c.dt != first.dt || c.horizon != first.horizon) {
        return Err(Error::config("coupled arms must share dt and horizon"));
    }
    if u0.grid() != dynamics.grid() {
        return Err(Error::config("initial state is not on the dynamics grid"));
    }
    let steppers = configs
        .iter()
        .map(|c| Stepper::new(dynamics, c))
        .collect::<Result<Vec<_>>>()?;
    let mut states = vec![u0.clone(); configs.len()];
    observe(&states);
    let total = first.steps();
    const CHUNK: usize = 256;
    let mut step = 0;
    while step < total {
        let count = CHUNK.min(total - step);
        for dw in noise.increments_block(step as u64, count) {
            for (s, st) in states.iter_mut().zip(&steppers) {
                let next = match st.step(s, &dw) {
                    Ok(n) => n,
                    Err(Error::Precondition(reason)) => {
                        return Ok(Some(BlowUp { step, time: step as f64 * first.dt, reason }))
                    }
                    Err(e) => return Err(e),
                };
                if !next.is_finite() {
                    return Ok(Some(BlowUp {
                        step: step + 1,
                        time: (step + 1) as f64 * first.dt,
                        reason: "non-finite state".into(),
                    }));
                }
                *s = next;
            }
            step += 1;
            observe(&states);
        }
    }
    Ok(None)
}

/// `sup_t ‖u_a(t) − u_b(t)‖_0²` for two configurations on one noise path.
pub fn coupled_error(
    dynamics: &dyn Dynamics,
    u0: &SpectralField,
    noise: &NoisePath,
    a: &SchemeConfig,
    b: &SchemeConfig,
) -> Result<f64> {
    let mut sup = 0.0f64;
    let blow = run_coupled(dynamics, u0, noise, &[a.clone(), b.clone()], |s| {
        sup = sup.max(s[0].sub(&s[1]).l2_norm().powi(2));
    })?;
    match blow {
        None => Ok(sup),
        Some(b) => Err(Error::BlowUp { step: b.step, reason: b.reason }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceSpec {
    pub paths: usize,
    pub seed: u64,
    /// Decreasing ε values; each is compared with `ratio · ε`.
    pub eps_ladder: Vec<f64>,
    pub ratio: f64,
    /// Largest admissible `dt / ε_min²`.
    pub dt_guard: f64,
    /// Slope the fit must reach to pass.
    pub min_slope: f64,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        ConvergenceSpec {
            paths: 64,
            seed: 0,
            eps_ladder: vec![0.1, 0.05, 0.025, 0.0125, 0.00625],
            ratio: 0.5,
            dt_guard: 16.0,
            min_slope: 0.4,
        }
    }
}

pub const MIN_RUNGS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rung {
    pub eps: f64,
    pub eps_prime: f64,
    pub mean: f64,
    pub stderr: f64,
    pub paths: usize,
}

/// `E sup_t ‖u^ε‖_1²` of one arm, a free by-product of the coupled run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArmMoment {
    pub eps: f64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub dt: f64,
    pub ratio: f64,
    pub rungs: Vec<Rung>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_interval: (f64, f64),
    pub min_slope: f64,
    pub arm_moments: Vec<ArmMoment>,
    pub seeds: Vec<u64>,
    /// Paths dropped because some arm blew up.
    pub truncated: Vec<(usize, BlowUp)>,
    pub pass: bool,
}

pub fn convergence_study(
    dynamics: &dyn Dynamics,
    u0: &SpectralField,
    config: &SchemeConfig,
    spec: &ConvergenceSpec,
) -> Result<ConvergenceReport> {
    config.validate()?;
    if spec.eps_ladder.len() < MIN_RUNGS {
        return Err(Error::InsufficientData(format!(
            "convergence fit needs at least {MIN_RUNGS} rungs, ladder has {}",
            spec.eps_ladder.len()
        )));
    }
    if spec.eps_ladder.iter().any(|e| !(*e > 0.0)) || !(spec.ratio > 0.0 && spec.ratio <= 1.0) {
        return Err(Error::config("ε ladder must be positive and the ratio in (0, 1]"));
    }
    if spec.paths < 2 {
        return Err(Error::InsufficientData("convergence study needs at least 2 paths".into()));
    }
    // arms: every ε and every ratio·ε, sorted descending, deduplicated
    let mut arms: Vec<f64> = spec
        .eps_ladder
        .iter()
        .flat_map(|&e| [e, e * spec.ratio])
        .collect();
    arms.sort_by(|a, b| b.partial_cmp(a).unwrap());
    arms.dedup_by(|a, b| a.to_bits() == b.to_bits());
    let eps_min = *arms.last().unwrap();
    if config.dt > spec.dt_guard * eps_min * eps_min {
        return Err(Error::config(format!(
            "dt = {} exceeds guard·ε_min² = {}·{}²",
            config.dt, spec.dt_guard, eps_min
        )));
    }
    let arm_of = |e: f64| arms.iter().position(|a| a.to_bits() == e.to_bits()).unwrap();
    let pairs: Vec<(usize, usize)> = spec
        .eps_ladder
        .iter()
        .map(|&e| (arm_of(e), arm_of(e * spec.ratio)))
        .collect();
    let configs: Vec<SchemeConfig> = arms.iter().map(|&e| config.with_epsilon(e)).collect();
    let op = ScaleOperator::new(dynamics.grid());
    let k = dynamics.noise_components();
    let seeds: Vec<u64> = (0..spec.paths).map(|i| path_seed(spec.seed, i as u64)).collect();

    type PathOut = (Vec<f64>, Vec<f64>, Option<BlowUp>);
    let per_path: Vec<Result<PathOut>> = farm(spec.paths, |i| {
        let noise = NoisePath::new(seeds[i], k, config.dt)?;
        let mut diff = vec![0.0f64; pairs.len()];
        let mut h1 = vec![0.0f64; arms.len()];
        let blow = run_coupled(dynamics, u0, &noise, &configs, |states| {
            for (d, &(a, b)) in diff.iter_mut().zip(&pairs) {
                *d = d.max(states[a].sub(&states[b]).l2_norm().powi(2));
            }
            for (h, s) in h1.iter_mut().zip(states) {
                *h = h.max(op.norm_squared(s, 1.0));
            }
        })?;
        Ok((diff, h1, blow))
    });
    let per_path = per_path.into_iter().collect::<Result<Vec<_>>>()?;

    let mut truncated = Vec::new();
    let mut good = Vec::new();
    for (i, (d, h, b)) in per_path.into_iter().enumerate() {
        match b {
            Some(b) => truncated.push((i, b)),
            None => good.push((d, h)),
        }
    }
    let rungs: Vec<Rung> = spec
        .eps_ladder
        .iter()
        .enumerate()
        .map(|(r, &eps)| {
            let vals: Vec<f64> = good.iter().map(|(d, _)| d[r]).collect();
            let est = mean_stderr(&vals);
            Rung {
                eps,
                eps_prime: eps * spec.ratio,
                mean: est.mean,
                stderr: est.stderr,
                paths: vals.len(),
            }
        })
        .collect();
    let arm_moments = arms
        .iter()
        .enumerate()
        .map(|(a, &eps)| {
            let vals: Vec<f64> = good.iter().map(|(_, h)| h[a]).collect();
            let est = mean_stderr(&vals);
            ArmMoment { eps, mean: est.mean, stderr: est.stderr }
        })
        .collect();
    let points: Vec<(f64, f64)> = rungs
        .iter()
        .filter(|r| r.mean > 0.0 && r.mean.is_finite())
        .map(|r| (r.eps.ln(), r.mean.ln()))
        .collect();
    if points.len() < MIN_RUNGS {
        return Err(Error::InsufficientData(format!(
            "only {} rungs have a positive finite coupled error, need {MIN_RUNGS}",
            points.len()
        )));
    }
    let fit = least_squares(&points);
    Ok(ConvergenceReport {
        dt: config.dt,
        ratio: spec.ratio,
        slope: fit.slope,
        intercept: fit.intercept,
        slope_interval: fit.slope_interval(),
        min_slope: spec.min_slope,
        pass: fit.slope >= spec.min_slope,
        rungs,
        arm_moments,
        seeds,
        truncated,
    })
}

impl Report for ConvergenceReport {
    fn rows(&self) -> Vec<ReportRow> {
        let mut rows: Vec<ReportRow> = self
            .rungs
            .iter()
            .map(|r| {
                ReportRow::new(
                    "convergence",
                    format!("coupled_error;eps={};eps_prime={}", r.eps, r.eps_prime),
                    r.mean,
                    r.stderr,
                    r.mean.is_finite(),
                )
            })
            .collect();
        let t = (self.slope_interval.1 - self.slope) / 1.96;
        rows.push(ReportRow::new("convergence", "slope", self.slope, t, self.pass));
        rows.extend(self.arm_moments.iter().map(|a| {
            ReportRow::new("convergence", format!("sup_h1_squared;eps={}", a.eps), a.mean, a.stderr, true)
        }));
        rows
    }

    fn pass(&self) -> bool {
        self.pass
    }
}
