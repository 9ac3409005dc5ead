//! Seeded random generation: Gaussian matrices, chi-square samples and
//! products of independent chi-squares.
//!
//! Every generator is a ChaCha8 stream addressed by `(seed, stream)`. Bulk
//! sampling is split into fixed-size blocks, each drawn from its own derived
//! stream, so results do not depend on how many worker threads run them.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::bounds::{l_param, t_param};
use crate::linalg::{LinearMap, PointSet};
use crate::{Error, Result};

/// Samples per independently seeded block in bulk draws.
pub const BLOCK_SIZE: usize = 4096;

/// Address of a reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct RandomSeed {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RandomSeed {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// A child stream; distinct `index` values give distinct streams and
    /// derivation can be nested without coordination.
    pub fn derive(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            stream: splitmix64(splitmix64(self.stream) ^ index),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Product `∏_{i=1}^{s} χ²_{d-i+1}` of independent chi-squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChiProductSpec {
    d: u32,
    s: u32,
}

impl ChiProductSpec {
    pub fn new(d: u32, s: u32) -> Result<Self> {
        if s == 0 || s > d {
            return Err(Error::InvalidInput(format!(
                "need 1 <= s <= d, got s = {s}, d = {d}"
            )));
        }
        Ok(Self { d, s })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    /// Degrees of freedom of the lower sandwich law, `s(d-s+1)`.
    pub fn t(&self) -> u32 {
        t_param(self.s, self.d)
    }

    /// Degrees of freedom of the upper sandwich law, `t + (s-1)(s-2)/2`.
    pub fn l(&self) -> u32 {
        l_param(self.s, self.d)
    }

    /// Sum of logs of one draw of every factor.
    fn sample_log<R: Rng + ?Sized>(&self, factors: &[ChiSquared<f64>], rng: &mut R) -> f64 {
        debug_assert_eq!(factors.len(), self.s as usize);
        factors.iter().map(|f| f.sample(rng).ln()).sum()
    }

    fn factors(&self) -> Vec<ChiSquared<f64>> {
        (1..=self.s)
            .map(|i| ChiSquared::new(f64::from(self.d - i + 1)).expect("positive dof"))
            .collect()
    }
}

/// Draws `count` values, block by block, with `draw` called on a block's
/// generator once per value.
pub(crate) fn sample_blocks<F>(count: usize, seed: RandomSeed, draw: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let blocks = count.div_ceil(BLOCK_SIZE);
    let chunks: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed.derive(b as u64).rng();
            let len = BLOCK_SIZE.min(count - b * BLOCK_SIZE);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    chunks.concat()
}

/// A `d×N` matrix of independent standard normals, scale 1.
pub fn gaussian_matrix(d: usize, n: usize, seed: RandomSeed) -> Result<LinearMap> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidInput(format!(
            "matrix shape must be positive, got {d}x{n}"
        )));
    }
    let mut rng = seed.rng();
    let data: Vec<f64> = (0..d * n).map(|_| rng.sample(StandardNormal)).collect();
    LinearMap::new(DMatrix::from_row_slice(d, n, &data), 1.0)
}

/// `n` points in `R^dim` with independent standard normal coordinates.
pub fn gaussian_cloud(n: usize, dim: usize, seed: RandomSeed) -> Result<PointSet> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidInput(format!(
            "point cloud shape must be positive, got {n}x{dim}"
        )));
    }
    let mut rng = seed.rng();
    let coords: Vec<f64> = (0..n * dim).map(|_| rng.sample(StandardNormal)).collect();
    PointSet::from_flat(dim, coords)
}

/// `count` independent standard normal draws.
pub fn sample_normal(count: usize, seed: RandomSeed) -> Vec<f64> {
    sample_blocks(count, seed, |rng| rng.sample(StandardNormal))
}

/// `count` independent `χ²_dof` draws.
pub fn sample_chi_square(dof: u32, count: usize, seed: RandomSeed) -> Result<Vec<f64>> {
    if dof == 0 {
        return Err(Error::InvalidInput(
            "chi-square degrees of freedom must be at least 1".into(),
        ));
    }
    let dist = ChiSquared::new(f64::from(dof)).expect("positive dof");
    Ok(sample_blocks(count, seed, |rng| dist.sample(rng)))
}

/// `count` independent draws of `∏_{i=1}^{s} χ²_{d-i+1}`.
pub fn sample_chi_square_product(spec: ChiProductSpec, count: usize, seed: RandomSeed) -> Vec<f64> {
    let factors = spec.factors();
    sample_blocks(count, seed, |rng| spec.sample_log(&factors, rng).exp())
}

/// `count` independent draws of `s · (∏_{i=1}^{s} χ²_{d-i+1})^{1/s}`, the
/// scaled geometric mean that the chi-square sandwich brackets.
pub fn sample_scaled_geometric_mean(
    spec: ChiProductSpec,
    count: usize,
    seed: RandomSeed,
) -> Vec<f64> {
    let factors = spec.factors();
    let s = f64::from(spec.s);
    sample_blocks(count, seed, |rng| {
        s * (spec.sample_log(&factors, rng) / s).exp()
    })
}
