//! Truncated cylindrical Brownian motion driven by a counter-based generator.
//!
//! Every Gaussian draw is a pure function of `(seed, step, component, level)`,
//! so paths can be generated in any order and on any thread. Increments live
//! on a dyadic lattice of spacing 2^-44; this makes the Brownian-bridge split
//! of a parent increment into two children sum back to the parent exactly.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

/// Philox4x32 with 10 rounds.
pub fn philox4x32(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let p0 = PHILOX_M0 as u64 * c[0] as u64;
        let p1 = PHILOX_M1 as u64 * c[2] as u64;
        let (hi0, lo0) = ((p0 >> 32) as u32, p0 as u32);
        let (hi1, lo1) = ((p1 >> 32) as u32, p1 as u32);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

const LATTICE: f64 = (1u64 << 44) as f64;

#[inline]
fn quantize(x: f64) -> f64 {
    (x * LATTICE).round() / LATTICE
}

#[inline]
fn unit_open(hi: u32, lo: u32) -> f64 {
    // 53 random bits, shifted half a step away from 0 and 1
    let bits = ((hi as u64) << 21) | ((lo as u64) >> 11);
    (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in the open unit interval from one Philox block.
pub fn uniform_open(seed: u64, counter: [u32; 4]) -> f64 {
    let w = philox4x32(counter, [seed as u32, (seed >> 32) as u32]);
    unit_open(w[0], w[1])
}

/// Standard normal draw (Box–Muller) from one Philox block.
pub fn standard_normal(seed: u64, counter: [u32; 4]) -> f64 {
    let w = philox4x32(counter, [seed as u32, (seed >> 32) as u32]);
    let u1 = unit_open(w[0], w[1]);
    let u2 = unit_open(w[2], w[3]);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// SplitMix64 finalizer, used to derive per-path seeds from a master seed.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of path `index` in a farm started from `master`.
pub fn path_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x5EED)))
}

/// `K` independent scalar Brownian motions sampled on the grid
/// `base_dt / 2^level`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NoisePath {
    seed: u64,
    components: usize,
    base_dt_bits: u64,
    level: u32,
}

impl NoisePath {
    pub const MAX_LEVEL: u32 = 24;

    pub fn new(seed: u64, components: usize, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config(format!("noise step must be positive, got {dt}")));
        }
        Ok(NoisePath {
            seed,
            components,
            base_dt_bits: dt.to_bits(),
            level: 0,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn base_dt(&self) -> f64 {
        f64::from_bits(self.base_dt_bits)
    }

    pub fn dt(&self) -> f64 {
        self.base_dt() / (1u64 << self.level) as f64
    }

    /// The same Brownian path sampled at half the step.
    pub fn refine(&self) -> Result<NoisePath> {
        if self.level >= Self::MAX_LEVEL {
            return Err(Error::config("noise path refined too many times"));
        }
        Ok(NoisePath {
            level: self.level + 1,
            ..self.clone()
        })
    }

    /// The same Brownian path at the given refinement level.
    pub fn at_level(&self, level: u32) -> Result<NoisePath> {
        if level > Self::MAX_LEVEL {
            return Err(Error::config("noise refinement level too deep"));
        }
        Ok(NoisePath { level, ..self.clone() })
    }

    /// Standard normal draw for one `(step, component, level)` slot.
    fn gaussian(&self, step: u64, k: usize, level: u32) -> f64 {
        standard_normal(self.seed, [step as u32, (step >> 32) as u32, k as u32, level])
    }

    fn increment_at(&self, step: u64, k: usize, level: u32) -> f64 {
        if level == 0 {
            return quantize(self.base_dt().sqrt() * self.gaussian(step, k, 0));
        }
        let parent = self.increment_at(step >> 1, k, level - 1);
        let left = self.bridge_left(parent, step >> 1, k, level);
        if step & 1 == 0 {
            left
        } else {
            parent - left
        }
    }

    /// First half of a parent increment: `P/2 + √dt_parent / 2 · Z`.
    #[inline]
    fn bridge_left(&self, parent: f64, parent_step: u64, k: usize, level: u32) -> f64 {
        let parent_dt = self.base_dt() / (1u64 << (level - 1)) as f64;
        quantize(0.5 * parent + 0.5 * parent_dt.sqrt() * self.gaussian(parent_step, k, level))
    }

    /// `ΔW_k` over `[step·dt, (step+1)·dt)` for every component.
    pub fn sample_increments(&self, step: u64) -> Vec<f64> {
        (0..self.components)
            .map(|k| self.increment_at(step, k, self.level))
            .collect()
    }

    /// Increments for `count` consecutive steps, one row per step. Each
    /// parent is generated once, so deep levels cost O(count) per level.
    pub fn increments_block(&self, start: u64, count: usize) -> Vec<Vec<f64>> {
        if count == 0 {
            return Vec::new();
        }
        let mut rows = vec![vec![0.0; self.components]; count];
        for k in 0..self.components {
            let col = self.block_component(start, count, k, self.level);
            for (row, v) in rows.iter_mut().zip(col) {
                row[k] = v;
            }
        }
        rows
    }

    fn block_component(&self, start: u64, count: usize, k: usize, level: u32) -> Vec<f64> {
        if level == 0 {
            let s = self.base_dt().sqrt();
            return (0..count as u64)
                .map(|i| quantize(s * self.gaussian(start + i, k, 0)))
                .collect();
        }
        let pstart = start >> 1;
        let pend = (start + count as u64 - 1) >> 1;
        let parents = self.block_component(pstart, (pend - pstart + 1) as usize, k, level - 1);
        (0..count as u64)
            .map(|i| {
                let step = start + i;
                let parent = parents[((step >> 1) - pstart) as usize];
                let left = self.bridge_left(parent, step >> 1, k, level);
                if step & 1 == 0 {
                    left
                } else {
                    parent - left
                }
            })
            .collect()
    }
}
