#![allow(dead_code)]

use std::f64::consts::TAU;

use hilbert_spde::analysis::FieldSampler;
use hilbert_spde::{Grid, SpectralField};
use proptest::prelude::*;

pub fn line(modes: usize) -> Grid {
    Grid::scalar(1, modes, TAU).unwrap()
}

pub fn plane(modes: usize) -> Grid {
    Grid::vector(2, modes, TAU).unwrap()
}

pub fn box3(modes: usize) -> Grid {
    Grid::vector(3, modes, TAU).unwrap()
}

/// Direct evaluation of `Σ_j c_j e^{ik·x}` at one point, no FFT involved.
pub fn fourier_eval(f: &SpectralField, x: &[f64; 3]) -> Vec<f64> {
    let g = f.grid();
    let n = g.points();
    (0..f.n_components())
        .map(|c| {
            let block = &f.coeffs()[c * n..(c + 1) * n];
            (0..n)
                .map(|p| {
                    let k = g.wavevector(p);
                    let phase: f64 = (0..g.dim()).map(|a| k[a] * x[a]).sum();
                    block[p].re * phase.cos() - block[p].im * phase.sin()
                })
                .sum()
        })
        .collect()
}

/// `Σ_j λ_j^α |c_j|² · L^d` by a plain loop over the lattice.
pub fn weighted_sum(f: &SpectralField, alpha: f64) -> f64 {
    let g = f.grid();
    let n = g.points();
    let mut s = 0.0;
    for (i, c) in f.coeffs().iter().enumerate() {
        let lam = 1.0 + g.ksq_table()[i % n];
        s += lam.powf(alpha) * c.norm_sqr();
    }
    s * g.volume()
}

/// Band-limited random field from the verifier's sampler.
pub fn sample(grid: &Grid, seed: u64, i: u64) -> SpectralField {
    FieldSampler::new(grid, seed).sample(i, 0).unwrap()
}

pub fn sample_pair(grid: &Grid, seed: u64, i: u64) -> (SpectralField, SpectralField) {
    FieldSampler::new(grid, seed).sample_pair(i).unwrap()
}

/// Cosine/sine amplitudes for modes `1..=n` of a 1-D field plus a mean.
pub fn trig_coefficients(n: usize) -> impl Strategy<Value = (f64, Vec<(f64, f64)>)> {
    (-1.0f64..1.0, prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n))
}

pub fn trig_field(grid: &Grid, mean: f64, amps: &[(f64, f64)]) -> SpectralField {
    SpectralField::from_fn(grid, |x, out| {
        out[0] = mean
            + amps
                .iter()
                .enumerate()
                .map(|(j, (a, b))| {
                    let k = (j + 1) as f64;
                    a * (k * x[0]).cos() + b * (k * x[0]).sin()
                })
                .sum::<f64>()
    })
    .unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn max_abs_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
