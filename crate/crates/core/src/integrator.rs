//! Time stepping for the target equation and its mollified counterpart.
//!
//! The stiff part `T_ε Δ T_ε` is diagonal and handled exactly (or by its
//! resolvent); drift and noise are explicit, noise at the left endpoint.

use serde::{Deserialize, Serialize};

use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::hilbert::semigroup_symbol;
use crate::noise::NoisePath;
use crate::spectral::SpectralField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ExponentialEuler,
    SemiImplicitEuler,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::ExponentialEuler => "exponential_euler",
            Scheme::SemiImplicitEuler => "semi_implicit_euler",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exponential_euler" => Ok(Scheme::ExponentialEuler),
            "semi_implicit_euler" => Ok(Scheme::SemiImplicitEuler),
            other => Err(Error::config(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub horizon: f64,
    /// Mollification parameter; 0 integrates the target equation.
    pub epsilon: f64,
    pub record_every: usize,
    /// Stop once the sup norm of the state reaches this value.
    pub sup_guard: Option<f64>,
}

impl SchemeConfig {
    pub fn new(dt: f64, horizon: f64, epsilon: f64) -> Self {
        SchemeConfig {
            scheme: Scheme::ExponentialEuler,
            dt,
            horizon,
            epsilon,
            record_every: 1,
            sup_guard: None,
        }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        SchemeConfig { epsilon, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("scheme.dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::config(format!("scheme.T must be nonnegative, got {}", self.horizon)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config(format!("scheme.epsilon must be nonnegative, got {}", self.epsilon)));
        }
        if self.record_every == 0 {
            return Err(Error::config("scheme.record_every must be at least 1"));
        }
        if let Some(g) = self.sup_guard {
            if !(g > 0.0) {
                return Err(Error::config(format!("sup guard must be positive, got {g}")));
            }
        }
        Ok(())
    }

    /// Number of steps to reach the horizon; the last step may overshoot by
    /// less than `dt` when `T / dt` is not an integer.
    pub fn steps(&self) -> usize {
        let r = self.horizon / self.dt;
        let n = r.round();
        if (r - n).abs() < 1e-9 * r.max(1.0) {
            n as usize
        } else {
            r.ceil() as usize
        }
    }
}

/// Precomputed multipliers for one `(grid, scheme, dt, ε)`.
pub struct Stepper<'a> {
    dynamics: &'a dyn Dynamics,
    config: SchemeConfig,
    linear: Vec<f64>,
    mollifier: Option<Vec<f64>>,
}

impl<'a> Stepper<'a> {
    pub fn new(dynamics: &'a dyn Dynamics, config: &SchemeConfig) -> Result<Self> {
        config.validate()?;
        let grid = dynamics.grid();
        let mollifier = if config.epsilon > 0.0 {
            Some(semigroup_symbol(grid, config.epsilon)?)
        } else {
            None
        };
        let dt = config.dt;
        let linear = grid
            .ksq_table()
            .iter()
            .map(|&k2| {
                let rate = k2 * (-2.0 * config.epsilon * k2).exp();
                match config.scheme {
                    Scheme::ExponentialEuler => (-dt * rate).exp(),
                    Scheme::SemiImplicitEuler => 1.0 / (1.0 + dt * rate),
                }
            })
            .collect();
        Ok(Stepper {
            dynamics,
            config: config.clone(),
            linear,
            mollifier,
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn dynamics(&self) -> &dyn Dynamics {
        self.dynamics
    }

    /// `T_ε f`, or `f` itself when `ε = 0`.
    pub fn mollify(&self, f: &SpectralField) -> SpectralField {
        match &self.mollifier {
            Some(sym) => f.apply_symbol(sym),
            None => f.clone(),
        }
    }

    /// One step `u ↦ S u + dt·T F(T u) + T Σ_k B_k(T u) ΔW_k`.
    pub fn step(&self, u: &SpectralField, increments: &[f64]) -> Result<SpectralField> {
        let v = self.mollify(u);
        let drift = self.dynamics.drift(&v)?;
        let noise = self.dynamics.noise().combine(&v, increments)?;
        let mut forcing = noise;
        forcing.axpy_in_place(self.config.dt, &drift);
        let mut next = u.apply_symbol(&self.linear);
        next.axpy_in_place(1.0, &self.mollify(&forcing));
        Ok(next)
    }
}

fn check_grid(dynamics: &dyn Dynamics, u: &SpectralField) -> Result<()> {
    if u.grid() != dynamics.grid() {
        return Err(Error::config(format!(
            "initial state lives on {:?} but {} expects {:?}",
            u.grid(),
            dynamics.name(),
            dynamics.grid()
        )));
    }
    Ok(())
}

/// One mollified step; needs `ε > 0`.
pub fn step_mollified(
    u: &SpectralField,
    dynamics: &dyn Dynamics,
    increments: &[f64],
    config: &SchemeConfig,
) -> Result<SpectralField> {
    if !(config.epsilon > 0.0) {
        return Err(Error::config("mollified step needs epsilon > 0"));
    }
    check_grid(dynamics, u)?;
    finite_or_blowup(Stepper::new(dynamics, config)?.step(u, increments)?, 0)
}

/// One step of the unmollified equation; needs `ε = 0`.
pub fn step_target(
    u: &SpectralField,
    dynamics: &dyn Dynamics,
    increments: &[f64],
    config: &SchemeConfig,
) -> Result<SpectralField> {
    if config.epsilon != 0.0 {
        return Err(Error::config("target step needs epsilon = 0"));
    }
    check_grid(dynamics, u)?;
    finite_or_blowup(Stepper::new(dynamics, config)?.step(u, increments)?, 0)
}

fn finite_or_blowup(u: SpectralField, step: usize) -> Result<SpectralField> {
    if u.is_finite() {
        Ok(u)
    } else {
        Err(Error::BlowUp {
            step,
            reason: "non-finite state".into(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowUp {
    pub step: usize,
    pub time: f64,
    pub reason: String,
}

/// Recorded states of one path.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub config: SchemeConfig,
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    /// `‖u‖_0²` at each recorded time.
    pub energy: Vec<f64>,
    /// Noise increments of every step taken, kept when every step is recorded.
    pub increments: Vec<Vec<f64>>,
    /// Steps actually taken.
    pub steps: usize,
    pub blow_up: Option<BlowUp>,
}

/// What an observer sees after each accepted step.
pub struct StepView<'s> {
    pub step: usize,
    pub time: f64,
    pub state: &'s SpectralField,
    pub increments: &'s [f64],
}

/// Runs the scheme and calls `observe` on the initial state (step 0, no
/// increments) and after every step. Returns the steps taken and the
/// blow-up, if any. The guard is checked on each state before it is
/// stepped, so the hitting step is the first state at or above the guard.
pub fn simulate_with<F>(
    dynamics: &dyn Dynamics,
    u0: &SpectralField,
    noise: &NoisePath,
    config: &SchemeConfig,
    mut observe: F,
) -> Result<(usize, Option<BlowUp>)>
where
    F: FnMut(StepView<'_>),
{
    check_grid(dynamics, u0)?;
    if noise.components() != dynamics.noise_components() {
        return Err(Error::config(format!(
            "noise path has {} components, dynamics needs {}",
            noise.components(),
            dynamics.noise_components()
        )));
    }
    if (noise.dt() - config.dt).abs() > 1e-12 * config.dt {
        return Err(Error::config(format!(
            "noise path step {} differs from scheme.dt {}",
            noise.dt(),
            config.dt
        )));
    }
    if dynamics.solenoidal() {
        crate::dynamics::check_solenoidal(u0, crate::dynamics::SOLENOIDAL_TOLERANCE)?;
    }
    let stepper = Stepper::new(dynamics, config)?;
    let total = config.steps();
    let dt = config.dt;
    observe(StepView {
        step: 0,
        time: 0.0,
        state: u0,
        increments: &[],
    });
    let mut u = u0.clone();
    const CHUNK: usize = 256;
    let mut step = 0usize;
    while step < total {
        let count = CHUNK.min(total - step);
        let block = noise.increments_block(step as u64, count);
        for dw in &block {
            if let Some(guard) = config.sup_guard {
                let s = u.sup_norm();
                if s >= guard {
                    return Ok((
                        step,
                        Some(BlowUp {
                            step,
                            time: step as f64 * dt,
                            reason: format!("sup norm {s:.6} reached guard {guard}"),
                        }),
                    ));
                }
            }
            let next = match stepper.step(&u, dw) {
                Ok(n) => n,
                Err(Error::Precondition(reason)) => {
                    return Ok((step, Some(BlowUp { step, time: step as f64 * dt, reason })))
                }
                Err(e) => return Err(e),
            };
            step += 1;
            if !next.is_finite() {
                return Ok((
                    step,
                    Some(BlowUp {
                        step,
                        time: step as f64 * dt,
                        reason: "non-finite state".into(),
                    }),
                ));
            }
            u = next;
            observe(StepView {
                step,
                time: step as f64 * dt,
                state: &u,
                increments: dw,
            });
        }
    }
    Ok((step, None))
}

/// Runs one path and keeps every `record_every`-th state. A blow-up
/// truncates the trajectory instead of failing.
pub fn simulate(
    dynamics: &dyn Dynamics,
    u0: &SpectralField,
    noise: &NoisePath,
    config: &SchemeConfig,
) -> Result<Trajectory> {
    let every = config.record_every.max(1);
    let keep_increments = every == 1;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut energy = Vec::new();
    let mut increments = Vec::new();
    let (steps, blow_up) = simulate_with(dynamics, u0, noise, config, |view| {
        if view.step > 0 && keep_increments {
            increments.push(view.increments.to_vec());
        }
        if view.step % every == 0 {
            times.push(view.time);
            energy.push(view.state.l2_norm().powi(2));
            states.push(view.state.clone());
        }
    })?;
    Ok(Trajectory {
        config: config.clone(),
        times,
        states,
        energy,
        increments,
        steps,
        blow_up,
    })
}
