//! Drift and diffusion operators for the supported equations.
//!
//! Drifts carry only the nonlinear and lower-order terms; the Laplacian is
//! applied exactly by the integrator. Nonlinear terms are evaluated on the
//! padded grid and truncated by the 2/3 rule.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::ScaleOperator;
use crate::spectral::{Grid, SpectralField, MAX_DIM};

/// Relative divergence tolerance for velocity inputs.
pub const SOLENOIDAL_TOLERANCE: f64 = 1e-8;

/// Smooth cutoff `g_N`: zero up to `N`, `r - N` from `N + 2` on, and a
/// quintic Hermite blend in between that matches value, slope and curvature
/// at both ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TamingFunction {
    level: f64,
}

impl TamingFunction {
    /// Width of the transition interval.
    pub const WIDTH: f64 = 2.0;
    /// `sup g'_N`, attained at `r = N + 1.2`.
    pub const DERIVATIVE_BOUND: f64 = 1.512;

    pub fn new(level: f64) -> Result<Self> {
        if !(level.is_finite() && level > 0.0) {
            return Err(Error::config(format!("taming level must be positive, got {level}")));
        }
        Ok(TamingFunction { level })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    /// `(g_N(r), g'_N(r))`.
    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        if !(r >= 0.0) {
            return Err(Error::domain(format!("taming function needs r >= 0, got {r}")));
        }
        Ok(self.eval_unchecked(r))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, r: f64) -> (f64, f64) {
        let s = r - self.level;
        if s <= 0.0 {
            (0.0, 0.0)
        } else if s >= Self::WIDTH {
            (s, 1.0)
        } else {
            let s2 = s * s;
            let value = s2 * s * (1.5 - s + 0.1875 * s2);
            let slope = s2 * (4.5 - 4.0 * s + 0.9375 * s2);
            (value, slope)
        }
    }

    #[inline]
    pub(crate) fn value(&self, r: f64) -> f64 {
        self.eval_unchecked(r).0
    }

    /// Largest `g'_N` seen on a uniform scan of `[0, N + 4]`.
    pub fn observed_derivative_bound(&self, samples: usize) -> f64 {
        let top = self.level + 2.0 * Self::WIDTH;
        (0..=samples)
            .map(|i| self.eval_unchecked(top * i as f64 / samples as f64).1)
            .fold(0.0, f64::max)
    }
}

/// `(g_N(r), g'_N(r))` for a one-off evaluation.
pub fn taming_eval(r: f64, level: f64) -> Result<(f64, f64)> {
    TamingFunction::new(level)?.eval(r)
}

/// Orthogonal projection onto divergence-free fields, mode by mode
/// `û ← (I − k kᵀ/|k|²) û`. The mean mode is kept; Nyquist planes are
/// dropped because their wavevector sign is ambiguous.
pub fn leray_project(f: &SpectralField) -> Result<SpectralField> {
    let grid = f.grid();
    let dim = grid.dim();
    if dim < 2 || f.n_components() != dim {
        return Err(Error::config(format!(
            "Leray projection needs a {dim}-component field in 2 or 3 dimensions, got {} components",
            f.n_components()
        )));
    }
    let n = grid.points();
    let src = f.coeffs();
    let mut out = src.to_vec();
    for p in 0..n {
        if grid.is_nyquist(p) {
            for a in 0..dim {
                out[a * n + p] = Complex64::default();
            }
            continue;
        }
        let ksq = grid.ksq_table()[p];
        if ksq == 0.0 {
            continue;
        }
        let k = grid.wavevector(p);
        let mut dot = Complex64::default();
        for a in 0..dim {
            dot += src[a * n + p] * k[a];
        }
        let dot = dot / ksq;
        for a in 0..dim {
            out[a * n + p] = src[a * n + p] - dot * k[a];
        }
    }
    Ok(SpectralField::from_coeffs_unchecked(grid, out))
}

/// Fails unless `‖div u‖_0 ≤ tol · (1 + ‖u‖_1)`.
pub fn check_solenoidal(u: &SpectralField, tol: f64) -> Result<()> {
    let div = u.divergence()?;
    let bound = tol * (1.0 + ScaleOperator::for_field(u).norm(u, 1.0));
    let d = div.l2_norm();
    if d > bound {
        return Err(Error::Precondition(format!(
            "velocity field is not divergence free: ‖div u‖ = {d:.3e} > {bound:.3e}"
        )));
    }
    Ok(())
}

/// A scalar map `z ↦ φ(x, z)` with access to `∂_z φ`.
pub trait PointwiseMap: Send + Sync + std::fmt::Debug {
    fn value(&self, x: f64, z: f64) -> f64;
    fn dz(&self, x: f64, z: f64) -> f64;
}

/// `Σ_i a_i z^i`, independent of `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

impl PointwiseMap for Polynomial {
    fn value(&self, _x: f64, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, a| acc * z + a)
    }

    fn dz(&self, _x: f64, z: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, a)| acc * z + i as f64 * a)
    }
}

/// Flux `f` and reaction `g` of `∂_t u = ∂_x² u + ∂_x f(u) + g(x, u) + noise`.
#[derive(Clone, Debug)]
pub struct BurgersGlCoefficients {
    pub flux: Arc<dyn PointwiseMap>,
    pub reaction: Arc<dyn PointwiseMap>,
    /// Upper bound on `∂_z g`, when known.
    pub reaction_slope_bound: Option<f64>,
}

impl BurgersGlCoefficients {
    /// `f(z) = c0 z²`, `g(z) = c1 z − c2 z³`.
    pub fn canonical(c0: f64, c1: f64, c2: f64) -> Result<Self> {
        if c2 < 0.0 {
            return Err(Error::config(format!("cubic damping c2 must be nonnegative, got {c2}")));
        }
        Ok(BurgersGlCoefficients {
            flux: Arc::new(Polynomial::new(vec![0.0, 0.0, c0])),
            reaction: Arc::new(Polynomial::new(vec![0.0, c1, 0.0, -c2])),
            reaction_slope_bound: Some(c1),
        })
    }
}

/// How a noise column depends on the state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coupling {
    /// `h(x, z) = 1`
    Additive,
    /// `h(x, z) = z`
    Multiplicative,
}

impl Coupling {
    pub fn as_str(&self) -> &'static str {
        match self {
            Coupling::Additive => "additive",
            Coupling::Multiplicative => "multiplicative",
        }
    }
}

/// Truncated noise: `K` columns with amplitudes `κ (1 + k)^{-s}` on
/// normalized low Fourier modes.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionSpec {
    pub count: usize,
    pub decay: f64,
    pub amplitude: f64,
    pub coupling: Coupling,
}

impl Default for DiffusionSpec {
    fn default() -> Self {
        DiffusionSpec {
            count: 16,
            decay: 2.0,
            amplitude: 0.5,
            coupling: Coupling::Additive,
        }
    }
}

impl DiffusionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::config("noise needs at least one column (K > 0)"));
        }
        if !(self.decay > 0.5) {
            return Err(Error::config(format!(
                "noise amplitude decay must exceed 1/2 for square summability, got {}",
                self.decay
            )));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::config(format!("noise amplitude must be nonnegative, got {}", self.amplitude)));
        }
        Ok(())
    }

    pub fn column_amplitude(&self, k: usize) -> f64 {
        self.amplitude * (1.0 + k as f64).powf(-self.decay)
    }

    /// `Σ_{k ≥ K} c_k²`, the noise mass dropped by truncation.
    pub fn tail_mass(&self) -> f64 {
        let two_s = 2.0 * self.decay;
        let kappa2 = self.amplitude * self.amplitude;
        let cut = 100_000usize;
        let direct: f64 = (self.count..self.count.max(cut))
            .map(|k| (1.0 + k as f64).powf(-two_s))
            .sum();
        // integral remainder of Σ_{k ≥ cut} (1+k)^{-2s}
        let start = 0.5 + self.count.max(cut) as f64;
        let rest = start.powf(1.0 - two_s) / (two_s - 1.0);
        kappa2 * (direct + rest)
    }
}

/// One real Fourier profile `√(2/V) trig(k·x) · d`.
#[derive(Clone, Debug)]
struct Profile {
    index: [i64; MAX_DIM],
    sine: bool,
    direction: [f64; MAX_DIM],
}

/// Noise columns on a given grid.
#[derive(Clone, Debug)]
pub struct NoiseColumns {
    spec: DiffusionSpec,
    grid: Grid,
    project: bool,
    /// Additive: the fixed columns `P(c_k e_k)`.
    fixed: Vec<SpectralField>,
    /// Multiplicative: scalar profiles `c_k φ_k` on the padded grid.
    padded_profiles: Vec<Vec<f64>>,
}

impl NoiseColumns {
    /// Builds columns for a state on `grid`. Vector states use solenoidal
    /// directions for additive noise and are Leray-projected when `project`.
    pub fn new(grid: &Grid, spec: &DiffusionSpec, project: bool) -> Result<Self> {
        spec.validate()?;
        let profiles = enumerate_profiles(grid, spec)?;
        let norm = (2.0 / grid.volume()).sqrt();
        let mut fixed = Vec::new();
        let mut padded_profiles = Vec::new();
        match spec.coupling {
            Coupling::Additive => {
                for (k, prof) in profiles.iter().enumerate() {
                    let c = spec.column_amplitude(k) * norm;
                    let mut col = profile_field(grid, prof, c);
                    if project {
                        col = leray_project(&col)?;
                    }
                    fixed.push(col);
                }
            }
            Coupling::Multiplicative => {
                let padded = grid.padded_points();
                for (k, prof) in profiles.iter().enumerate() {
                    let c = spec.column_amplitude(k) * norm;
                    let vals = (0..padded)
                        .map(|q| {
                            let x = grid.padded_coordinate(q);
                            c * trig_at(grid, prof, &x)
                        })
                        .collect();
                    padded_profiles.push(vals);
                }
            }
        }
        Ok(NoiseColumns {
            spec: spec.clone(),
            grid: grid.clone(),
            project,
            fixed,
            padded_profiles,
        })
    }

    pub fn spec(&self) -> &DiffusionSpec {
        &self.spec
    }

    pub fn count(&self) -> usize {
        self.spec.count
    }

    /// `B_k(u)` for every column.
    pub fn columns(&self, u: &SpectralField) -> Result<Vec<SpectralField>> {
        match self.spec.coupling {
            Coupling::Additive => Ok(self.fixed.clone()),
            Coupling::Multiplicative => {
                let phys = u.to_padded_physical();
                self.padded_profiles
                    .iter()
                    .map(|prof| self.multiplicative_column(&phys, prof))
                    .collect()
            }
        }
    }

    /// `Σ_k ΔW_k B_k(u)`.
    pub fn combine(&self, u: &SpectralField, increments: &[f64]) -> Result<SpectralField> {
        if increments.len() != self.count() {
            return Err(Error::config(format!(
                "{} noise increments for {} columns",
                increments.len(),
                self.count()
            )));
        }
        match self.spec.coupling {
            Coupling::Additive => {
                let mut acc = SpectralField::zeros(&self.grid);
                for (col, dw) in self.fixed.iter().zip(increments) {
                    acc.axpy_in_place(*dw, col);
                }
                Ok(acc)
            }
            Coupling::Multiplicative => {
                // B_k is linear in the profile, so sum profiles first.
                let padded = self.grid.padded_points();
                let mut combined = vec![0.0; padded];
                for (prof, dw) in self.padded_profiles.iter().zip(increments) {
                    for (c, v) in combined.iter_mut().zip(prof) {
                        *c += dw * v;
                    }
                }
                let phys = u.to_padded_physical();
                self.multiplicative_column(&phys, &combined)
            }
        }
    }

    fn multiplicative_column(&self, phys: &[Vec<f64>], profile: &[f64]) -> Result<SpectralField> {
        let comps: Vec<Vec<f64>> = phys
            .iter()
            .map(|c| c.iter().zip(profile).map(|(u, p)| u * p).collect())
            .collect();
        let col = SpectralField::from_padded_physical(&self.grid, &comps)?;
        if self.project {
            leray_project(&col)
        } else {
            Ok(col)
        }
    }
}

fn enumerate_profiles(grid: &Grid, spec: &DiffusionSpec) -> Result<Vec<Profile>> {
    let dim = grid.dim();
    let vector = grid.n_components() > 1;
    if vector && grid.n_components() != dim {
        return Err(Error::config("vector noise needs one component per axis"));
    }
    let cutoff = grid.dealias_cutoff();
    let mut reps: Vec<[i64; MAX_DIM]> = (0..grid.points())
        .map(|p| grid.signed_index(p))
        .filter(|j| {
            let first_nonzero = j[..dim].iter().find(|v| **v != 0);
            matches!(first_nonzero, Some(v) if *v > 0) && j[..dim].iter().all(|v| v.abs() <= cutoff)
        })
        .collect();
    reps.sort_by_key(|j| (j[..dim].iter().map(|v| v * v).sum::<i64>(), *j));

    let additive_vector = vector && spec.coupling == Coupling::Additive;
    let mut out = Vec::with_capacity(spec.count);
    'outer: for j in &reps {
        let directions: Vec<[f64; MAX_DIM]> = if additive_vector {
            solenoidal_directions(j, dim)
        } else {
            vec![[0.0; MAX_DIM]]
        };
        for sine in [false, true] {
            for d in &directions {
                out.push(Profile {
                    index: *j,
                    sine,
                    direction: *d,
                });
                if out.len() == spec.count {
                    break 'outer;
                }
            }
        }
    }
    if out.len() < spec.count {
        return Err(Error::config(format!(
            "grid supports only {} noise profiles, {} requested",
            out.len(),
            spec.count
        )));
    }
    Ok(out)
}

fn solenoidal_directions(j: &[i64; MAX_DIM], dim: usize) -> Vec<[f64; MAX_DIM]> {
    let k = [j[0] as f64, j[1] as f64, j[2] as f64];
    if dim == 2 {
        let n = (k[0] * k[0] + k[1] * k[1]).sqrt();
        return vec![[-k[1] / n, k[0] / n, 0.0]];
    }
    // axis least aligned with k
    let a = (0..3)
        .min_by(|&x, &y| k[x].abs().partial_cmp(&k[y].abs()).unwrap())
        .unwrap();
    let mut e = [0.0; 3];
    e[a] = 1.0;
    let d1 = normalize(cross(&k, &e));
    let d2 = normalize(cross(&k, &d1));
    vec![d1, d2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn trig_at(grid: &Grid, prof: &Profile, x: &[f64; MAX_DIM]) -> f64 {
    let phase: f64 = (0..grid.dim())
        .map(|a| 2.0 * PI * prof.index[a] as f64 / grid.period() * x[a])
        .sum();
    if prof.sine {
        phase.sin()
    } else {
        phase.cos()
    }
}

/// Spectral coefficients of `c · trig(k·x) · d` (or scalar when `d = 0`).
fn profile_field(grid: &Grid, prof: &Profile, c: f64) -> SpectralField {
    let n = grid.points();
    let p = grid.point_of(prof.index);
    let q = grid.conjugate_point(p);
    let (cp, cq) = if prof.sine {
        (Complex64::new(0.0, -0.5 * c), Complex64::new(0.0, 0.5 * c))
    } else {
        (Complex64::new(0.5 * c, 0.0), Complex64::new(0.5 * c, 0.0))
    };
    let mut coeffs = vec![Complex64::default(); grid.len()];
    if grid.n_components() == 1 {
        coeffs[p] = cp;
        coeffs[q] = cq;
    } else {
        for a in 0..grid.n_components() {
            coeffs[a * n + p] = cp * prof.direction[a];
            coeffs[a * n + q] = cq * prof.direction[a];
        }
    }
    SpectralField::from_coeffs_unchecked(grid, coeffs)
}

/// Exponents in the growth bounds the coefficients are checked against.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct GrowthExponents {
    /// Regularity index of the Lipschitz and growth bounds.
    pub sobolev_index: usize,
    pub lipschitz_power: f64,
    pub drift_power: f64,
    /// Powers of `‖u‖_{m-1}` in the higher-order bounds, `m = 1, 2`.
    pub pairing_power: f64,
    pub diffusion_power: f64,
}

/// A drift/diffusion pair `(F, {B_k})`.
pub trait Dynamics: Send + Sync {
    fn name(&self) -> &'static str;
    fn grid(&self) -> &Grid;
    fn drift(&self, u: &SpectralField) -> Result<SpectralField>;
    fn noise(&self) -> &NoiseColumns;

    fn diffusion(&self, u: &SpectralField) -> Result<Vec<SpectralField>> {
        self.noise().columns(u)
    }

    fn noise_components(&self) -> usize {
        self.noise().count()
    }

    /// Velocity dynamics keep the state divergence free.
    fn solenoidal(&self) -> bool {
        false
    }

    fn exponents(&self) -> GrowthExponents;

    fn taming(&self) -> Option<&TamingFunction> {
        None
    }
}

/// `∂_x f(u) + g(x, u)` on a 1-D periodic line.
pub fn burgers_gl_drift(u: &SpectralField, coeffs: &BurgersGlCoefficients) -> Result<SpectralField> {
    let grid = u.grid();
    if grid.dim() != 1 || u.n_components() != 1 {
        return Err(Error::config(format!(
            "Burgers–Ginzburg–Landau drift needs a 1-D scalar field, got {grid:?}"
        )));
    }
    let phys = u.to_padded_physical();
    let padded = grid.padded_points();
    let mut flux = Vec::with_capacity(padded);
    let mut reaction = Vec::with_capacity(padded);
    for (q, &z) in phys[0].iter().enumerate() {
        let x = grid.padded_coordinate(q)[0];
        flux.push(coeffs.flux.value(x, z));
        reaction.push(coeffs.reaction.value(x, z));
    }
    let flux = SpectralField::from_padded_physical(grid, &[flux])?;
    let reaction = SpectralField::from_padded_physical(grid, &[reaction])?;
    Ok(flux.derivative(0)?.add(&reaction))
}

/// `∂_x f(u)` alone.
pub fn burgers_flux_term(u: &SpectralField, coeffs: &BurgersGlCoefficients) -> Result<SpectralField> {
    let grid = u.grid();
    if grid.dim() != 1 || u.n_components() != 1 {
        return Err(Error::config("Burgers flux needs a 1-D scalar field"));
    }
    let phys = u.to_padded_physical();
    let flux: Vec<f64> = phys[0]
        .iter()
        .enumerate()
        .map(|(q, &z)| coeffs.flux.value(grid.padded_coordinate(q)[0], z))
        .collect();
    SpectralField::from_padded_physical(grid, &[flux])?.derivative(0)
}

fn velocity_terms(
    u: &SpectralField,
    taming: Option<&TamingFunction>,
    include_convection: bool,
) -> Result<SpectralField> {
    let grid = u.grid();
    let dim = grid.dim();
    if dim < 2 || u.n_components() != dim {
        return Err(Error::config(format!(
            "Navier–Stokes drift needs a {dim}-component velocity in 2 or 3 dimensions"
        )));
    }
    check_solenoidal(u, SOLENOIDAL_TOLERANCE)?;
    let vel = u.to_padded_physical();
    let padded = grid.padded_points();
    let mut out = vec![vec![0.0; padded]; dim];
    if include_convection {
        for b in 0..dim {
            let grad_b = u.derivative(b)?.to_padded_physical();
            for a in 0..dim {
                for q in 0..padded {
                    out[a][q] += vel[b][q] * grad_b[a][q];
                }
            }
        }
    }
    if let Some(g) = taming {
        for q in 0..padded {
            let r: f64 = (0..dim).map(|a| vel[a][q] * vel[a][q]).sum();
            let gn = g.value(r);
            if gn != 0.0 {
                for a in 0..dim {
                    out[a][q] += gn * vel[a][q];
                }
            }
        }
    }
    leray_project(&SpectralField::from_padded_physical(grid, &out)?)
}

/// `P((u·∇)u)`.
pub fn convective_term(u: &SpectralField) -> Result<SpectralField> {
    velocity_terms(u, None, true)
}

/// `P(g_N(|u|²) u)`.
pub fn taming_term(u: &SpectralField, taming: &TamingFunction) -> Result<SpectralField> {
    velocity_terms(u, Some(taming), false)
}

/// `−P((u·∇)u) − P(g_N(|u|²) u)`.
pub fn tamed_ns_drift(u: &SpectralField, taming: &TamingFunction) -> Result<SpectralField> {
    Ok(velocity_terms(u, Some(taming), true)?.scaled(-1.0))
}

/// `−P((u·∇)u)`.
pub fn ns_2d_drift(u: &SpectralField) -> Result<SpectralField> {
    Ok(velocity_terms(u, None, true)?.scaled(-1.0))
}

/// Generalized stochastic Burgers / Ginzburg–Landau equation on a periodic line.
#[derive(Clone, Debug)]
pub struct BurgersGl {
    pub coefficients: BurgersGlCoefficients,
    noise: NoiseColumns,
}

impl BurgersGl {
    pub fn new(grid: &Grid, coefficients: BurgersGlCoefficients, noise: &DiffusionSpec) -> Result<Self> {
        if grid.dim() != 1 || grid.n_components() != 1 {
            return Err(Error::config(format!(
                "burgers_gl needs a 1-D scalar grid, got dim {} with {} components",
                grid.dim(),
                grid.n_components()
            )));
        }
        Ok(BurgersGl {
            coefficients,
            noise: NoiseColumns::new(grid, noise, false)?,
        })
    }
}

impl Dynamics for BurgersGl {
    fn name(&self) -> &'static str {
        "burgers_gl"
    }

    fn grid(&self) -> &Grid {
        &self.noise.grid
    }

    fn drift(&self, u: &SpectralField) -> Result<SpectralField> {
        burgers_gl_drift(u, &self.coefficients)
    }

    fn noise(&self) -> &NoiseColumns {
        &self.noise
    }

    fn exponents(&self) -> GrowthExponents {
        GrowthExponents {
            sobolev_index: 1,
            lipschitz_power: 2.0,
            drift_power: 3.0,
            pairing_power: 10.0,
            diffusion_power: 2.0,
        }
    }
}

/// Tamed Navier–Stokes in 2 or 3 dimensions; without a taming function this
/// is the plain incompressible Navier–Stokes drift.
#[derive(Clone, Debug)]
pub struct TamedNs {
    taming: Option<TamingFunction>,
    noise: NoiseColumns,
}

impl TamedNs {
    pub fn new(grid: &Grid, taming: Option<TamingFunction>, noise: &DiffusionSpec) -> Result<Self> {
        let dim = grid.dim();
        if dim < 2 || grid.n_components() != dim {
            return Err(Error::config(format!(
                "Navier–Stokes needs a {dim}-component grid in 2 or 3 dimensions, got {} components",
                grid.n_components()
            )));
        }
        Ok(TamedNs {
            taming,
            noise: NoiseColumns::new(grid, noise, true)?,
        })
    }
}

impl Dynamics for TamedNs {
    fn name(&self) -> &'static str {
        match (self.taming.is_some(), self.noise.grid.dim()) {
            (true, 3) => "tamed_ns_3d",
            (true, _) => "tamed_ns_2d",
            (false, _) => "ns_2d",
        }
    }

    fn grid(&self) -> &Grid {
        &self.noise.grid
    }

    fn drift(&self, u: &SpectralField) -> Result<SpectralField> {
        Ok(velocity_terms(u, self.taming.as_ref(), true)?.scaled(-1.0))
    }

    fn noise(&self) -> &NoiseColumns {
        &self.noise
    }

    fn solenoidal(&self) -> bool {
        true
    }

    fn taming(&self) -> Option<&TamingFunction> {
        self.taming.as_ref()
    }

    fn exponents(&self) -> GrowthExponents {
        GrowthExponents {
            sobolev_index: 2,
            lipschitz_power: 2.0,
            drift_power: 5.0,
            pairing_power: 10.0,
            diffusion_power: 2.0,
        }
    }
}

/// Stochastic heat equation: zero drift, noise only.
#[derive(Clone, Debug)]
pub struct LinearTest {
    noise: NoiseColumns,
}

impl LinearTest {
    pub fn new(grid: &Grid, noise: &DiffusionSpec) -> Result<Self> {
        Ok(LinearTest {
            noise: NoiseColumns::new(grid, noise, false)?,
        })
    }
}

impl Dynamics for LinearTest {
    fn name(&self) -> &'static str {
        "linear_test"
    }

    fn grid(&self) -> &Grid {
        &self.noise.grid
    }

    fn drift(&self, u: &SpectralField) -> Result<SpectralField> {
        Ok(SpectralField::zeros(u.grid()))
    }

    fn noise(&self) -> &NoiseColumns {
        &self.noise
    }

    fn exponents(&self) -> GrowthExponents {
        GrowthExponents {
            sobolev_index: 1,
            lipschitz_power: 1.0,
            drift_power: 1.0,
            pairing_power: 2.0,
            diffusion_power: 2.0,
        }
    }
}
