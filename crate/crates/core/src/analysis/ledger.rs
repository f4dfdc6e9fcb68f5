//! Step-by-step Itô decomposition of `‖u‖_m^{2p}` along a recorded path.
//!
//! With `X = ‖u‖_m²` and the mollified coefficients `A = T Δ T u + T F(T u)`,
//! `B_k = T B_k(T u)`, each step is split into
//!
//! * drift: `2p X^{p-1} ⟨u, A⟩_m dt` (linear and nonlinear parts apart),
//! * martingale: `2p X^{p-1} Σ_k ⟨u, B_k⟩_m ΔW_k`,
//! * quadratic variation: `p X^{p-1} Σ_k ‖B_k‖_m² dt`,
//! * power correction: `2p(p-1) X^{p-2} Σ_k ⟨u, B_k⟩_m² dt`,
//!
//! and the residual is what the realized increment leaves over.

use serde::Serialize;

use super::stats::pairwise_sum;
use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::hilbert::{semigroup_symbol, ScaleOperator};
use crate::integrator::{simulate, SchemeConfig, Trajectory};
use crate::noise::NoisePath;
use crate::spectral::SpectralField;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LedgerStep {
    pub time: f64,
    pub drift_linear: f64,
    pub drift_nonlinear: f64,
    pub martingale: f64,
    pub quadratic_variation: f64,
    pub power_correction: f64,
    pub realized: f64,
    pub residual: f64,
}

impl LedgerStep {
    pub fn drift(&self) -> f64 {
        self.drift_linear + self.drift_nonlinear
    }

    pub fn ledger_sum(&self) -> f64 {
        self.drift() + self.martingale + self.quadratic_variation + self.power_correction
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub m: f64,
    pub p: u32,
    pub dt: f64,
    pub steps: Vec<LedgerStep>,
    /// Column sums over all steps.
    pub totals: LedgerStep,
    pub max_abs_residual: f64,
}

/// Rebuilds the ledger of a trajectory that recorded every step.
pub fn energy_ledger(trajectory: &Trajectory, dynamics: &dyn Dynamics, m: f64, p: u32) -> Result<EnergyLedger> {
    let cfg = &trajectory.config;
    if cfg.record_every != 1 || trajectory.increments.len() + 1 != trajectory.states.len() {
        return Err(Error::config(
            "energy ledger needs a trajectory recorded at every step (record_every = 1)",
        ));
    }
    if p == 0 {
        return Err(Error::config("ledger power p must be at least 1"));
    }
    let grid = dynamics.grid();
    let op = ScaleOperator::new(grid);
    let dt = cfg.dt;
    let pf = p as f64;
    let moll = semigroup_symbol(grid, cfg.epsilon)?;
    let linear_symbol: Vec<f64> = grid
        .ksq_table()
        .iter()
        .zip(&moll)
        .map(|(k2, t)| -k2 * t * t)
        .collect();
    let phi = |x: f64| x.powi(p as i32);

    let mut steps = Vec::with_capacity(trajectory.increments.len());
    for (n, dw) in trajectory.increments.iter().enumerate() {
        let u = &trajectory.states[n];
        let next = &trajectory.states[n + 1];
        let x = op.norm_squared(u, m);
        let w1 = 2.0 * pf * x.powi(p as i32 - 1);
        let v = u.apply_symbol(&moll);
        let lin = u.apply_symbol(&linear_symbol);
        let non = dynamics.drift(&v)?.apply_symbol(&moll);
        let cols: Vec<SpectralField> = dynamics
            .diffusion(&v)?
            .into_iter()
            .map(|c| c.apply_symbol(&moll))
            .collect();
        let pair: Vec<f64> = cols.iter().map(|c| op.inner(u, c, m)).collect();
        let mart: Vec<f64> = pair.iter().zip(dw).map(|(a, w)| a * w).collect();
        let qv: Vec<f64> = cols.iter().map(|c| op.norm_squared(c, m)).collect();
        let sq: Vec<f64> = pair.iter().map(|a| a * a).collect();
        let correction = if p >= 2 {
            2.0 * pf * (pf - 1.0) * x.powi(p as i32 - 2) * pairwise_sum(&sq) * dt
        } else {
            0.0
        };
        let mut s = LedgerStep {
            time: trajectory.times[n],
            drift_linear: w1 * op.inner(u, &lin, m) * dt,
            drift_nonlinear: w1 * op.inner(u, &non, m) * dt,
            martingale: w1 * pairwise_sum(&mart),
            quadratic_variation: 0.5 * w1 * pairwise_sum(&qv) * dt,
            power_correction: correction,
            realized: phi(op.norm_squared(next, m)) - phi(x),
            residual: 0.0,
        };
        s.residual = s.realized - s.ledger_sum();
        steps.push(s);
    }
    let col = |f: fn(&LedgerStep) -> f64| pairwise_sum(&steps.iter().map(f).collect::<Vec<_>>());
    let mut totals = LedgerStep {
        time: trajectory.times.last().copied().unwrap_or(0.0),
        drift_linear: col(|s| s.drift_linear),
        drift_nonlinear: col(|s| s.drift_nonlinear),
        martingale: col(|s| s.martingale),
        quadratic_variation: col(|s| s.quadratic_variation),
        power_correction: col(|s| s.power_correction),
        realized: col(|s| s.realized),
        residual: 0.0,
    };
    totals.residual = totals.realized - totals.ledger_sum();
    let max_abs_residual = steps.iter().map(|s| s.residual.abs()).fold(0.0, f64::max);
    Ok(EnergyLedger {
        m,
        p,
        dt,
        steps,
        totals,
        max_abs_residual,
    })
}

/// Ledger residual at `dt` and `dt/2` on the same Brownian path.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualRefinement {
    pub dt: f64,
    /// `|Σ_n residual_n|` on the coarse and fine runs.
    pub coarse: f64,
    pub fine: f64,
    /// `log2(coarse / fine)`.
    pub order: f64,
}

pub fn residual_refinement(
    dynamics: &dyn Dynamics,
    u0: &SpectralField,
    noise: &NoisePath,
    config: &SchemeConfig,
    m: f64,
    p: u32,
) -> Result<ResidualRefinement> {
    let coarse_cfg = SchemeConfig { record_every: 1, ..config.clone() };
    let fine_cfg = SchemeConfig { dt: config.dt / 2.0, ..coarse_cfg.clone() };
    let coarse = simulate(dynamics, u0, noise, &coarse_cfg)?;
    let fine = simulate(dynamics, u0, &noise.refine()?, &fine_cfg)?;
    let rc = energy_ledger(&coarse, dynamics, m, p)?.totals.residual.abs();
    let rf = energy_ledger(&fine, dynamics, m, p)?.totals.residual.abs();
    Ok(ResidualRefinement {
        dt: config.dt,
        coarse: rc,
        fine: rf,
        order: (rc / rf).log2(),
    })
}
