//! Sobolev scale generated by `I - Δ` on the torus and the heat semigroup
//! used as a mollifier.
//!
//! Every operator here is a diagonal Fourier multiplier, so the algebra
//! (power additivity, semigroup law, commutation) is exact mode by mode.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

/// `(I - Δ)^{α/2}` and `e^{εΔ}` on a fixed lattice.
#[derive(Clone, Debug)]
pub struct ScaleOperator {
    grid: Grid,
    eigenvalues: Vec<f64>,
}

impl ScaleOperator {
    pub fn new(grid: &Grid) -> Self {
        let eigenvalues = grid.ksq_table().iter().map(|k| 1.0 + k).collect();
        ScaleOperator {
            grid: grid.with_components(1),
            eigenvalues,
        }
    }

    pub fn for_field(f: &SpectralField) -> Self {
        Self::new(f.grid())
    }

    /// `λ(j) = 1 + |k_j|²` per lattice point.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    fn check(&self, f: &SpectralField) {
        assert!(
            f.grid().same_lattice(&self.grid),
            "scale operator applied to a field on another lattice"
        );
    }

    pub fn power_symbol(&self, alpha: f64) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| l.powf(alpha / 2.0)).collect()
    }

    /// `(I - Δ)^{α/2} f`.
    pub fn fractional_power(&self, f: &SpectralField, alpha: f64) -> SpectralField {
        self.check(f);
        f.apply_symbol(&self.power_symbol(alpha))
    }

    /// `‖f‖_α`, for any real `α`.
    pub fn norm(&self, f: &SpectralField, alpha: f64) -> f64 {
        self.norm_squared(f, alpha).sqrt()
    }

    pub fn norm_squared(&self, f: &SpectralField, alpha: f64) -> f64 {
        self.check(f);
        let n = self.grid.points();
        let weights: Vec<f64> = if alpha == 0.0 {
            vec![1.0; n]
        } else {
            self.eigenvalues.iter().map(|l| l.powf(alpha)).collect()
        };
        let s: f64 = f
            .coeffs()
            .chunks(n)
            .map(|block| {
                block
                    .iter()
                    .zip(&weights)
                    .map(|(c, w)| w * c.norm_sqr())
                    .sum::<f64>()
            })
            .sum();
        s * self.grid.volume()
    }

    /// `⟨f, g⟩_α = ⟨(I-Δ)^{α/2} f, (I-Δ)^{α/2} g⟩_0`.
    pub fn inner(&self, f: &SpectralField, g: &SpectralField, alpha: f64) -> f64 {
        self.check(f);
        let n = self.grid.points();
        let weights: Vec<f64> = self.eigenvalues.iter().map(|l| l.powf(alpha)).collect();
        let s: f64 = f
            .coeffs()
            .chunks(n)
            .zip(g.coeffs().chunks(n))
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .zip(&weights)
                    .map(|((x, y), w)| w * (x.re * y.re + x.im * y.im))
                    .sum::<f64>()
            })
            .sum();
        s * self.grid.volume()
    }

    /// Multiplier `e^{-ε|k|²}` of the heat semigroup.
    pub fn semigroup_symbol(&self, eps: f64) -> Result<Vec<f64>> {
        semigroup_symbol(&self.grid, eps)
    }

    pub fn apply_semigroup(&self, f: &SpectralField, eps: f64) -> Result<SpectralField> {
        self.check(f);
        Ok(f.apply_symbol(&self.semigroup_symbol(eps)?))
    }
}

pub(crate) fn semigroup_symbol(grid: &Grid, eps: f64) -> Result<Vec<f64>> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::domain(format!(
            "semigroup parameter must be finite and nonnegative, got {eps}"
        )));
    }
    Ok(grid.ksq_table().iter().map(|k| (-eps * k).exp()).collect())
}

/// `‖f‖_α`.
pub fn sobolev_norm(f: &SpectralField, alpha: f64) -> f64 {
    ScaleOperator::for_field(f).norm(f, alpha)
}

/// `T_ε f = e^{εΔ} f`; `T_0` is the identity.
pub fn apply_semigroup(f: &SpectralField, eps: f64) -> Result<SpectralField> {
    Ok(f.apply_symbol(&semigroup_symbol(f.grid(), eps)?))
}

/// Observed constants of the mollifier estimates along an ε ladder.
#[derive(Clone, Debug, Serialize)]
pub struct MollifierReport {
    pub m: f64,
    pub k: f64,
    pub eps: Vec<f64>,
    /// `‖T_ε f − f‖_m / (ε^{k/2} ‖f‖_{m+k})`
    pub approximation_ratios: Vec<f64>,
    /// `‖T_ε f‖_{m+k} ε^{k/2} / ‖f‖_m`
    pub smoothing_ratios: Vec<f64>,
    /// Largest relative gap between `(I-Δ)^{m/2} T_ε f` and `T_ε (I-Δ)^{m/2} f`.
    pub commutation_residual: f64,
    /// Log-log slopes of the ratio sequences against ε.
    pub approximation_trend: f64,
    pub smoothing_trend: f64,
    pub pass: bool,
}

/// Ratios steeper than this (growing as ε → 0) count as unbounded.
pub const TREND_FLOOR: f64 = -0.25;
pub const COMMUTATION_TOLERANCE: f64 = 1e-12;

/// Measures the approximation and smoothing estimates of the mollifier, and
/// the commutation of `T_ε` with `(I-Δ)^{m/2}`, on one field.
pub fn verify_mollifier(f: &SpectralField, m: f64, k: f64, eps_ladder: &[f64]) -> Result<MollifierReport> {
    if f.is_zero() {
        return Err(Error::domain("mollifier estimates need a nonzero field"));
    }
    if eps_ladder.len() < 2 {
        return Err(Error::domain("ε ladder needs at least two values"));
    }
    if eps_ladder.windows(2).any(|w| !(w[1] < w[0])) || eps_ladder.iter().any(|&e| e <= 0.0) {
        return Err(Error::domain("ε ladder must be positive and strictly decreasing"));
    }
    let op = ScaleOperator::for_field(f);
    let norm_m = op.norm(f, m);
    let norm_mk = op.norm(f, m + k);
    let lifted = op.fractional_power(f, m);
    let mut approx = Vec::with_capacity(eps_ladder.len());
    let mut smooth = Vec::with_capacity(eps_ladder.len());
    let mut residual: f64 = 0.0;
    for &eps in eps_ladder {
        let te = op.apply_semigroup(f, eps)?;
        let scale = eps.powf(k / 2.0);
        approx.push(op.norm(&te.sub(f), m) / (scale * norm_mk));
        smooth.push(op.norm(&te, m + k) * scale / norm_m);
        let left = op.fractional_power(&te, m);
        let right = op.apply_semigroup(&lifted, eps)?;
        let denom = left.l2_norm().max(f64::MIN_POSITIVE);
        residual = residual.max(left.sub(&right).l2_norm() / denom);
    }
    let approximation_trend = log_log_slope(eps_ladder, &approx);
    let smoothing_trend = log_log_slope(eps_ladder, &smooth);
    let finite = approx.iter().chain(&smooth).all(|r| r.is_finite());
    let pass = finite
        && residual < COMMUTATION_TOLERANCE
        && approximation_trend >= TREND_FLOOR
        && smoothing_trend >= TREND_FLOOR;
    Ok(MollifierReport {
        m,
        k,
        eps: eps_ladder.to_vec(),
        approximation_ratios: approx,
        smoothing_ratios: smooth,
        commutation_residual: residual,
        approximation_trend,
        smoothing_trend,
        pass,
    })
}

fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(_, v)| **v > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    crate::analysis::stats::least_squares(&pts).slope
}
