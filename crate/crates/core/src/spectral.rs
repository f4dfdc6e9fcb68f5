//! Fourier representation of real fields on periodic boxes `[0, L)^d`.
//!
//! Coefficients are stored for every multi-index of the `M^d` FFT lattice in
//! row-major order (axis 0 slowest), one block per component. The physical
//! field is `u(x) = Σ_j c_j exp(i k_j·x)` with `k_j = 2π j / L`, so the
//! constant mode holds the mean and `∫|u|² dx = L^d Σ_j |c_j|²`.
//!
//! Nonlinear terms are evaluated on a grid padded to `2M` points per axis and
//! truncated back to `|j_a| ≤ M/3` on every axis, which removes aliasing for
//! products of up to three band-limited factors.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub(crate) const MAX_DIM: usize = 3;

const SNAPSHOT_MAGIC: &[u8; 4] = b"HSPF";
const SNAPSHOT_VERSION: u32 = 1;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    padded_forward: Arc<dyn Fft<f64>>,
    padded_inverse: Arc<dyn Fft<f64>>,
}

struct Layout {
    dim: usize,
    modes: usize,
    period: f64,
    signed: Vec<[i64; MAX_DIM]>,
    wavevector: Vec<[f64; MAX_DIM]>,
    ksq: Vec<f64>,
    conj: Vec<usize>,
    nyquist: Vec<bool>,
    /// (lattice point, padded point, weight); Nyquist modes are split evenly
    /// between `+M/2` and `-M/2` so the padded field stays real.
    pad_map: Vec<(usize, usize, f64)>,
    /// (lattice point, padded point) for modes kept by the 2/3 rule.
    keep: Vec<(usize, usize)>,
    plans: Plans,
}

/// A periodic lattice with `modes` points per axis and `n_components` field
/// components. Cloning is cheap; FFT plans and wavenumber tables are shared.
#[derive(Clone)]
pub struct Grid {
    layout: Arc<Layout>,
    n_components: usize,
}

impl Grid {
    pub fn new(dim: usize, modes: usize, period: f64, n_components: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::config(format!("grid dimension must be 1, 2 or 3, got {dim}")));
        }
        if modes < 8 || modes % 2 != 0 {
            return Err(Error::config(format!(
                "modes per axis must be even and at least 8, got {modes}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::config(format!("period must be positive, got {period}")));
        }
        if n_components == 0 {
            return Err(Error::config("a field needs at least one component"));
        }
        Ok(Grid {
            layout: Arc::new(Layout::build(dim, modes, period)),
            n_components,
        })
    }

    pub fn scalar(dim: usize, modes: usize, period: f64) -> Result<Self> {
        Self::new(dim, modes, period, 1)
    }

    /// Velocity-field grid: one component per axis.
    pub fn vector(dim: usize, modes: usize, period: f64) -> Result<Self> {
        Self::new(dim, modes, period, dim)
    }

    /// Same lattice, different number of components.
    pub fn with_components(&self, n_components: usize) -> Self {
        assert!(n_components > 0);
        Grid {
            layout: Arc::clone(&self.layout),
            n_components,
        }
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn modes(&self) -> usize {
        self.layout.modes
    }

    pub fn period(&self) -> f64 {
        self.layout.period
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    /// Lattice points per component (`M^d`).
    pub fn points(&self) -> usize {
        self.layout.modes.pow(self.layout.dim as u32)
    }

    /// Total number of stored coefficients.
    pub fn len(&self) -> usize {
        self.points() * self.n_components
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `L^d`, the Parseval weight.
    pub fn volume(&self) -> f64 {
        self.layout.period.powi(self.layout.dim as i32)
    }

    /// Largest retained mode index under the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.layout.modes / 3) as i64
    }

    pub fn padded_modes(&self) -> usize {
        2 * self.layout.modes
    }

    pub fn padded_points(&self) -> usize {
        self.padded_modes().pow(self.layout.dim as u32)
    }

    pub fn signed_index(&self, point: usize) -> [i64; MAX_DIM] {
        self.layout.signed[point]
    }

    pub fn wavevector(&self, point: usize) -> [f64; MAX_DIM] {
        self.layout.wavevector[point]
    }

    /// `|k|²` for every lattice point.
    pub fn ksq_table(&self) -> &[f64] {
        &self.layout.ksq
    }

    /// Lattice point holding the conjugate partner `-j`.
    pub fn conjugate_point(&self, point: usize) -> usize {
        self.layout.conj[point]
    }

    /// True when any axis index sits on the Nyquist frequency `M/2`.
    pub fn is_nyquist(&self, point: usize) -> bool {
        self.layout.nyquist[point]
    }

    /// Point with the given signed multi-index (unused trailing axes ignored).
    pub fn point_of(&self, index: [i64; MAX_DIM]) -> usize {
        let m = self.layout.modes as i64;
        (0..self.layout.dim).fold(0usize, |acc, a| {
            acc * self.layout.modes + index[a].rem_euclid(m) as usize
        })
    }

    /// Physical coordinate of a collocation point of the unpadded grid.
    pub fn coordinate(&self, point: usize) -> [f64; MAX_DIM] {
        coordinate_on(point, self.layout.dim, self.layout.modes, self.layout.period)
    }

    /// Physical coordinate of a point of the `2M` padded grid.
    pub fn padded_coordinate(&self, point: usize) -> [f64; MAX_DIM] {
        coordinate_on(point, self.layout.dim, self.padded_modes(), self.layout.period)
    }

    pub(crate) fn same_lattice(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.layout, &other.layout)
            || (self.layout.dim == other.layout.dim
                && self.layout.modes == other.layout.modes
                && self.layout.period == other.layout.period)
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n_components == other.n_components && self.same_lattice(other)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim())
            .field("modes", &self.modes())
            .field("period", &self.period())
            .field("n_components", &self.n_components)
            .finish()
    }
}

fn coordinate_on(point: usize, dim: usize, n: usize, period: f64) -> [f64; MAX_DIM] {
    let mut x = [0.0; MAX_DIM];
    let mut rest = point;
    for a in (0..dim).rev() {
        x[a] = (rest % n) as f64 * period / n as f64;
        rest /= n;
    }
    x
}

impl Layout {
    fn build(dim: usize, modes: usize, period: f64) -> Self {
        let m = modes as i64;
        let half = m / 2;
        let points = modes.pow(dim as u32);
        let padded = 2 * modes;
        let cutoff = m / 3;
        let signed_of = |i: usize| -> i64 {
            let i = i as i64;
            if i <= half {
                i
            } else {
                i - m
            }
        };

        let mut signed = Vec::with_capacity(points);
        let mut wavevector = Vec::with_capacity(points);
        let mut ksq = Vec::with_capacity(points);
        let mut nyquist = Vec::with_capacity(points);
        for p in 0..points {
            let mut j = [0i64; MAX_DIM];
            let mut rest = p;
            for a in (0..dim).rev() {
                j[a] = signed_of(rest % modes);
                rest /= modes;
            }
            let mut k = [0.0; MAX_DIM];
            for a in 0..dim {
                k[a] = 2.0 * PI * j[a] as f64 / period;
            }
            ksq.push(k.iter().map(|v| v * v).sum());
            nyquist.push(j[..dim].iter().any(|&v| v == half));
            signed.push(j);
            wavevector.push(k);
        }

        let flat = |idx: &[i64], n: usize| -> usize {
            idx.iter()
                .fold(0usize, |acc, &v| acc * n + v.rem_euclid(n as i64) as usize)
        };
        let conj = signed
            .iter()
            .map(|j| {
                let neg: Vec<i64> = j[..dim].iter().map(|v| -v).collect();
                flat(&neg, modes)
            })
            .collect();

        let mut pad_map = Vec::new();
        let mut keep = Vec::new();
        for (p, j) in signed.iter().enumerate() {
            // Cartesian product of per-axis targets.
            let mut targets: Vec<(Vec<i64>, f64)> = vec![(Vec::new(), 1.0)];
            for &ja in &j[..dim] {
                let opts: &[(i64, f64)] = if ja == half {
                    &[(half, 0.5), (-half, 0.5)]
                } else {
                    &[(ja, 1.0)][..]
                };
                let opts = opts.to_vec();
                targets = targets
                    .into_iter()
                    .flat_map(|(idx, w)| {
                        opts.iter().map(move |&(v, wv)| {
                            let mut next = idx.clone();
                            next.push(v);
                            (next, w * wv)
                        })
                    })
                    .collect();
            }
            for (idx, w) in targets {
                pad_map.push((p, flat(&idx, padded), w));
            }
            if j[..dim].iter().all(|v| v.abs() <= cutoff) {
                keep.push((p, flat(&j[..dim], padded)));
            }
        }

        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(modes),
            inverse: planner.plan_fft_inverse(modes),
            padded_forward: planner.plan_fft_forward(padded),
            padded_inverse: planner.plan_fft_inverse(padded),
        };

        Layout {
            dim,
            modes,
            period,
            signed,
            wavevector,
            ksq,
            conj,
            nyquist,
            pad_map,
            keep,
            plans,
        }
    }
}

/// In-place multi-dimensional transform of one `n^dim` block along every axis.
fn transform_nd(data: &mut [Complex64], n: usize, dim: usize, plan: &dyn Fft<f64>) {
    let total = data.len();
    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
    plan.process_with_scratch(data, &mut scratch);
    if dim == 1 {
        return;
    }
    let mut lines = vec![Complex64::default(); total];
    for axis in 0..dim - 1 {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        let mut w = 0;
        for b in (0..total).step_by(block) {
            for i in 0..stride {
                for t in 0..n {
                    lines[w] = data[b + t * stride + i];
                    w += 1;
                }
            }
        }
        plan.process_with_scratch(&mut lines, &mut scratch);
        let mut r = 0;
        for b in (0..total).step_by(block) {
            for i in 0..stride {
                for t in 0..n {
                    data[b + t * stride + i] = lines[r];
                    r += 1;
                }
            }
        }
    }
}

/// A real field on a periodic grid, held as Hermitian-symmetric Fourier
/// coefficients.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.coeffs == other.coeffs
    }
}

impl SpectralField {
    pub fn zeros(grid: &Grid) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    /// Builds a field from raw coefficients, projecting onto the Hermitian
    /// (real-field) subspace.
    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::config(format!(
                "expected {} coefficients for {:?}, got {}",
                grid.len(),
                grid,
                coeffs.len()
            )));
        }
        let mut f = SpectralField {
            grid: grid.clone(),
            coeffs,
        };
        f.symmetrize();
        Ok(f)
    }

    /// Wraps coefficients that are already Hermitian.
    pub(crate) fn from_coeffs_unchecked(grid: &Grid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        SpectralField {
            grid: grid.clone(),
            coeffs,
        }
    }

    /// Samples a function at the collocation points. `f` receives the
    /// coordinate and writes one value per component.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64; MAX_DIM], &mut [f64])) -> Result<Self> {
        let points = grid.points();
        let nc = grid.n_components();
        let mut values = vec![0.0; grid.len()];
        let mut buf = vec![0.0; nc];
        for p in 0..points {
            f(&grid.coordinate(p), &mut buf);
            for c in 0..nc {
                values[c * points + p] = buf[c];
            }
        }
        Self::from_physical(grid, &values)
    }

    pub fn from_physical(grid: &Grid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::config(format!(
                "physical array has {} values, {:?} needs {}",
                values.len(),
                grid,
                grid.len()
            )));
        }
        let points = grid.points();
        let scale = 1.0 / points as f64;
        let plan = grid.layout.plans.forward.as_ref();
        let mut coeffs: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for block in coeffs.chunks_mut(points) {
            transform_nd(block, grid.modes(), grid.dim(), plan);
            block.iter_mut().for_each(|c| *c *= scale);
        }
        Self::from_coeffs(grid, coeffs)
    }

    /// Values at the collocation points, component blocks in order.
    pub fn to_physical(&self) -> Vec<f64> {
        let points = self.grid.points();
        let plan = self.grid.layout.plans.inverse.as_ref();
        let mut buf = self.coeffs.clone();
        for block in buf.chunks_mut(points) {
            transform_nd(block, self.grid.modes(), self.grid.dim(), plan);
        }
        buf.into_iter().map(|c| c.re).collect()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn n_components(&self) -> usize {
        self.grid.n_components()
    }

    pub fn component_coeffs(&self, c: usize) -> &[Complex64] {
        let n = self.grid.points();
        &self.coeffs[c * n..(c + 1) * n]
    }

    pub fn component(&self, c: usize) -> SpectralField {
        SpectralField {
            grid: self.grid.with_components(1),
            coeffs: self.component_coeffs(c).to_vec(),
        }
    }

    /// Stacks scalar fields on a common lattice into one vector field.
    pub fn stack(parts: &[SpectralField]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::config("cannot stack zero components"))?;
        let mut coeffs = Vec::with_capacity(first.coeffs.len() * parts.len());
        for p in parts {
            if !p.grid.same_lattice(&first.grid) {
                return Err(Error::config("stacked components live on different grids"));
            }
            coeffs.extend_from_slice(&p.coeffs);
        }
        let n = coeffs.len() / first.grid.points();
        Ok(SpectralField {
            grid: first.grid.with_components(n),
            coeffs,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest `|c_j - conj(c_{-j})|` over all modes.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.points();
        let mut worst: f64 = 0.0;
        for block in self.coeffs.chunks(n) {
            for p in 0..n {
                let q = self.grid.conjugate_point(p);
                worst = worst.max((block[p] - block[q].conj()).norm());
            }
        }
        worst
    }

    fn symmetrize(&mut self) {
        let n = self.grid.points();
        let grid = self.grid.clone();
        for block in self.coeffs.chunks_mut(n) {
            let orig = block.to_vec();
            for p in 0..n {
                let q = grid.conjugate_point(p);
                block[p] = 0.5 * (orig[p] + orig[q].conj());
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &SpectralField) -> Self {
        assert_eq!(self.grid, other.grid, "axpy on mismatched grids");
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b * s)
                .collect(),
        }
    }

    pub(crate) fn axpy_in_place(&mut self, s: f64, other: &SpectralField) {
        assert_eq!(self.grid, other.grid, "axpy on mismatched grids");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
    }

    pub fn add(&self, other: &SpectralField) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SpectralField) -> Self {
        self.axpy(-1.0, other)
    }

    /// Multiplies every mode of every component by a real per-point symbol.
    pub fn apply_symbol(&self, symbol: &[f64]) -> Self {
        let n = self.grid.points();
        assert_eq!(symbol.len(), n);
        let mut out = self.coeffs.clone();
        for block in out.chunks_mut(n) {
            for (c, s) in block.iter_mut().zip(symbol) {
                *c *= *s;
            }
        }
        SpectralField {
            grid: self.grid.clone(),
            coeffs: out,
        }
    }

    /// Parseval inner product `∫ f·g dx`, summed over components.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        assert_eq!(self.grid, other.grid, "inner product on mismatched grids");
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        s * self.grid.volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Zeroes every mode on a Nyquist plane.
    pub fn without_nyquist(mut self) -> Self {
        let n = self.grid.points();
        let grid = self.grid.clone();
        for block in self.coeffs.chunks_mut(n) {
            for (p, c) in block.iter_mut().enumerate() {
                if grid.is_nyquist(p) {
                    *c = Complex64::default();
                }
            }
        }
        self
    }

    /// Zeroes modes outside the 2/3-rule band.
    pub fn band_limited(mut self, cutoff: i64) -> Self {
        let n = self.grid.points();
        let grid = self.grid.clone();
        let dim = grid.dim();
        for block in self.coeffs.chunks_mut(n) {
            for (p, c) in block.iter_mut().enumerate() {
                if grid.signed_index(p)[..dim].iter().any(|j| j.abs() > cutoff) {
                    *c = Complex64::default();
                }
            }
        }
        self
    }

    /// Partial derivative along `axis`, applied to every component.
    pub fn derivative(&self, axis: usize) -> Result<Self> {
        let dim = self.grid.dim();
        if axis >= dim {
            return Err(Error::config(format!("axis {axis} out of range for dimension {dim}")));
        }
        let n = self.grid.points();
        let half = (self.grid.modes() / 2) as i64;
        let mut out = self.coeffs.clone();
        for block in out.chunks_mut(n) {
            for (p, c) in block.iter_mut().enumerate() {
                if self.grid.signed_index(p)[axis] == half {
                    *c = Complex64::default();
                } else {
                    let k = self.grid.wavevector(p)[axis];
                    *c *= Complex64::new(0.0, k);
                }
            }
        }
        Ok(SpectralField {
            grid: self.grid.clone(),
            coeffs: out,
        })
    }

    /// Gradient of a scalar field as a `dim`-component field.
    pub fn gradient(&self) -> Result<Self> {
        if self.n_components() != 1 {
            return Err(Error::config("gradient needs a scalar field"));
        }
        let parts = (0..self.grid.dim())
            .map(|a| self.derivative(a))
            .collect::<Result<Vec<_>>>()?;
        Self::stack(&parts)
    }

    pub fn divergence(&self) -> Result<Self> {
        let dim = self.grid.dim();
        if self.n_components() != dim {
            return Err(Error::config(format!(
                "divergence needs {dim} components, field has {}",
                self.n_components()
            )));
        }
        let mut acc = SpectralField::zeros(&self.grid.with_components(1));
        for a in 0..dim {
            let d = self.component(a).derivative(a)?;
            acc.axpy_in_place(1.0, &d);
        }
        Ok(acc)
    }

    pub fn laplacian(&self) -> Self {
        let symbol: Vec<f64> = self.grid.ksq_table().iter().map(|k| -k).collect();
        self.apply_symbol(&symbol)
    }

    /// Values of every component on the `2M` padded grid.
    pub fn to_padded_physical(&self) -> Vec<Vec<f64>> {
        let layout = &self.grid.layout;
        let n = self.grid.points();
        let padded = self.grid.padded_points();
        let plan = layout.plans.padded_inverse.as_ref();
        self.coeffs
            .chunks(n)
            .map(|block| {
                let mut buf = vec![Complex64::default(); padded];
                for &(p, q, w) in &layout.pad_map {
                    buf[q] += block[p] * w;
                }
                transform_nd(&mut buf, self.grid.padded_modes(), self.grid.dim(), plan);
                buf.into_iter().map(|c| c.re).collect()
            })
            .collect()
    }

    /// Inverse of [`to_padded_physical`](Self::to_padded_physical) followed by
    /// 2/3-rule truncation. The Nyquist planes of the result are zero.
    pub fn from_padded_physical(grid: &Grid, components: &[Vec<f64>]) -> Result<Self> {
        let grid = grid.with_components(components.len());
        let padded = grid.padded_points();
        let n = grid.points();
        let layout = &grid.layout;
        let plan = layout.plans.padded_forward.as_ref();
        let scale = 1.0 / padded as f64;
        let mut coeffs = vec![Complex64::default(); grid.len()];
        for (c, values) in components.iter().enumerate() {
            if values.len() != padded {
                return Err(Error::config(format!(
                    "padded component has {} values, expected {padded}",
                    values.len()
                )));
            }
            let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            transform_nd(&mut buf, grid.padded_modes(), grid.dim(), plan);
            let out = &mut coeffs[c * n..(c + 1) * n];
            for &(p, q) in &layout.keep {
                out[p] = buf[q] * scale;
            }
        }
        let mut f = SpectralField { grid, coeffs };
        f.symmetrize();
        Ok(f)
    }

    /// Pointwise product with 2/3-rule dealiasing. Either factor may be
    /// scalar, in which case it multiplies every component of the other.
    pub fn multiply_dealiased(&self, other: &SpectralField) -> Result<Self> {
        if !self.grid.same_lattice(&other.grid) {
            return Err(Error::config(format!(
                "product of fields on different grids: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        let (na, nb) = (self.n_components(), other.n_components());
        if na != nb && na != 1 && nb != 1 {
            return Err(Error::config(format!(
                "cannot multiply fields with {na} and {nb} components"
            )));
        }
        let a = self.to_padded_physical();
        let b = other.to_padded_physical();
        let n_out = na.max(nb);
        let out: Vec<Vec<f64>> = (0..n_out)
            .map(|c| {
                let fa = &a[if na == 1 { 0 } else { c }];
                let fb = &b[if nb == 1 { 0 } else { c }];
                fa.iter().zip(fb).map(|(x, y)| x * y).collect()
            })
            .collect();
        Self::from_padded_physical(&self.grid, &out)
    }

    /// Pointwise Euclidean sup-norm, sampled on the `2M` padded grid.
    pub fn sup_norm(&self) -> f64 {
        let comps = self.to_padded_physical();
        let padded = self.grid.padded_points();
        (0..padded)
            .map(|q| comps.iter().map(|c| c[q] * c[q]).sum::<f64>())
            .fold(0.0, f64::max)
            .sqrt()
    }

    /// Writes the little-endian binary snapshot: magic, version, dim, M, L,
    /// n_components, then `(re, im)` f64 pairs in storage order.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.grid.modes() as u32).to_le_bytes())?;
        w.write_all(&self.grid.period().to_le_bytes())?;
        w.write_all(&(self.n_components() as u32).to_le_bytes())?;
        for c in &self.coeffs {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let dim = read_u32(&mut r)? as usize;
        let modes = read_u32(&mut r)? as usize;
        let period = read_f64(&mut r)?;
        let n_components = read_u32(&mut r)? as usize;
        let grid = Grid::new(dim, modes, period, n_components)
            .map_err(|e| Error::Snapshot(e.to_string()))?;
        let mut coeffs = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            coeffs.push(Complex64::new(re, im));
        }
        Ok(SpectralField { grid, coeffs })
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
