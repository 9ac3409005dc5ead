//! Monte Carlo checks of the distributional facts behind the embedding:
//! Gaussian volume ratios follow a chi-square product law regardless of the
//! point set, and the scaled geometric mean of that product is sandwiched
//! between two single chi-square laws.
//!
//! Everything is phrased through Kolmogorov–Smirnov distances and fixed
//! thresholds. Useful critical values for the sup-distance between an
//! empirical CDF of `m` samples and its true CDF: `1.36/√m` (5%) and
//! `1.63/√m` (1%). For two samples replace `√m` by `√(m₁m₂/(m₁+m₂))`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gamma::chi_square_cdf;
use crate::linalg::{PointSet, VolumeWorkspace, DEFAULT_RANK_TOL};
use crate::randgen::{
    sample_blocks, sample_chi_square_product, sample_scaled_geometric_mean, ChiProductSpec,
    RandomSeed,
};
use crate::subsets::Combinations;
use crate::{Error, Result};

/// Size of the reference sample drawn from the chi-square product law in
/// [`verify_stability`] (at least `reps`).
pub const REFERENCE_DRAWS: usize = 100_000;

const STREAM_A: u64 = 0xa;
const STREAM_B: u64 = 0xb;
const STREAM_PRODUCT: u64 = 0xc;

/// Empirical CDF `F̂(x) = #{samples ≤ x} / m`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    samples: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput(
                "empirical CDF needs at least one sample".into(),
            ));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidInput("samples contain NaN".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sorted ascending.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.len() as f64
    }

    /// `F̂(x⁻) = #{samples < x} / m`.
    pub fn eval_left(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s < x) as f64 / self.len() as f64
    }

    /// For every distinct sample value `x`: `(x, F̂(x⁻), F̂(x))`.
    fn steps(&self) -> Vec<(f64, f64, f64)> {
        let m = self.len() as f64;
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.samples.len() {
            let x = self.samples[i];
            let mut j = i;
            while j < self.samples.len() && self.samples[j] == x {
                j += 1;
            }
            out.push((x, i as f64 / m, j as f64 / m));
            i = j;
        }
        out
    }
}

/// `sup_x |F̂(x) - cdf(x)|`, checking both sides of every jump.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let Ok(ecdf) = EmpiricalCdf::new(samples.to_vec()) else {
        return f64::NAN;
    };
    ecdf.steps()
        .into_iter()
        .map(|(x, below, upto)| {
            let f = cdf(x);
            (upto - f).max(f - below)
        })
        .fold(0.0, f64::max)
}

/// Two-sided sweep over the merged samples, yielding `F̂₁(x) - F̂₂(x)` at
/// every distinct value.
fn merged_differences(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (ma, mb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        out.push(i as f64 / ma - j as f64 / mb);
    }
    out
}

/// `sup_x |F̂₁(x) - F̂₂(x)|`.
pub fn ks_two_sample(s1: &[f64], s2: &[f64]) -> f64 {
    if s1.is_empty() || s2.is_empty() {
        return f64::NAN;
    }
    merged_differences(s1, s2)
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max)
}

/// `sup_x (F̂_larger(x) - F̂_smaller(x))⁺`: how far the empirical laws are
/// from `smaller ⪯ larger`, i.e. `Pr[smaller ≤ x] ≥ Pr[larger ≤ x]`.
pub fn ordering_violation(smaller: &[f64], larger: &[f64]) -> f64 {
    merged_differences(larger, smaller)
        .into_iter()
        .fold(0.0, f64::max)
}

/// DKW-style slack `3·√(ln(2/δ) / (2m))`.
pub fn dkw_epsilon(m: usize, delta: f64) -> f64 {
    3.0 * ((2.0 / delta).ln() / (2.0 * m as f64)).sqrt()
}

/// Result of an empirical stochastic-ordering check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    /// Largest amount by which a claimed CDF inequality fails.
    pub max_violation: f64,
    pub m: usize,
    pub epsilon: f64,
    pub pass: bool,
    /// Degrees of freedom of the law that must be stochastically smaller.
    pub lower_dof: u32,
    /// Degrees of freedom of the law that must be stochastically larger.
    pub upper_dof: u32,
}

/// Checks `χ²_t ⪯ s·(∏_{i=1}^{s} χ²_{d-i+1})^{1/s} ⪯ χ²_l` on `reps` draws:
/// at every sample point the exact `χ²_l` CDF may not exceed the empirical
/// CDF by more than `epsilon`, and the exact `χ²_t` CDF may not fall below
/// it by more than `epsilon`.
pub fn verify_gordon(
    d: u32,
    s: u32,
    reps: usize,
    epsilon: f64,
    seed: RandomSeed,
) -> Result<OrderingReport> {
    let spec = ChiProductSpec::new(d, s)?;
    if reps < 1000 {
        return Err(Error::InvalidInput(format!(
            "need at least 1000 repetitions, got {reps}"
        )));
    }
    let ecdf = EmpiricalCdf::new(sample_scaled_geometric_mean(spec, reps, seed))?;
    let (t, l) = (spec.t(), spec.l());
    let max_violation = ecdf
        .steps()
        .par_iter()
        .map(|&(x, below, upto)| {
            let upper_law = chi_square_cdf(l, x).expect("x >= 0");
            let lower_law = chi_square_cdf(t, x).expect("x >= 0");
            // The sup of F_l - F̂ is approached just before a jump.
            (upper_law - below).max(upto - lower_law)
        })
        .reduce(|| 0.0, f64::max);
    Ok(OrderingReport {
        max_violation,
        m: reps,
        epsilon,
        pass: max_violation <= epsilon,
        lower_dof: t,
        upper_dof: l,
    })
}

/// KS distances produced by [`verify_stability`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Between the squared volume ratios of the two point sets.
    pub ks_ab: f64,
    /// Between the first point set's ratios and the chi-square product law.
    pub ks_a_product: f64,
    pub subset_a: Vec<usize>,
    pub subset_b: Vec<usize>,
    pub reps: usize,
    pub reference_draws: usize,
}

/// First subset of `size` points (lexicographically) with non-zero volume.
pub fn first_nondegenerate_subset(points: &PointSet, size: usize) -> Option<Vec<usize>> {
    let mut ws = VolumeWorkspace::default();
    Combinations::new(points.len(), size).find(|s| {
        !ws.log_volume(
            s.iter().map(|&i| points.point(i)),
            points.dim(),
            DEFAULT_RANK_TOL,
        )
        .is_degenerate()
    })
}

/// `reps` draws of `(vol G(S) / vol S)²` for independent `d×N` Gaussian `G`.
fn squared_volume_ratios(
    points: &PointSet,
    subset: &[usize],
    d: usize,
    reps: usize,
    seed: RandomSeed,
) -> Result<Vec<f64>> {
    let chosen = subset.iter().map(|&i| points.point(i).to_vec()).collect();
    let chosen = PointSet::new(chosen)?;
    let mut ws = VolumeWorkspace::default();
    let src = ws
        .log_volume(chosen.iter(), chosen.dim(), DEFAULT_RANK_TOL)
        .value()
        .ok_or_else(|| Error::InvalidInput(format!("subset {subset:?} has zero volume")))?;
    let (k, dim) = (chosen.len(), chosen.dim());
    Ok(sample_blocks(reps, seed, |rng| {
        // Image coordinates, point-major: image[j * d + r] = (G p_j)_r.
        let mut image = vec![0.0; k * d];
        for r in 0..d {
            for c in 0..dim {
                let g: f64 = rng.sample(StandardNormal);
                for j in 0..k {
                    image[j * d + r] += g * chosen.point(j)[c];
                }
            }
        }
        let mut ws = VolumeWorkspace::default();
        match ws
            .log_volume(image.chunks_exact(d), d, DEFAULT_RANK_TOL)
            .value()
        {
            Some(img) => (2.0 * (img - src)).exp(),
            None => 0.0,
        }
    }))
}

/// Compares the laws of `(vol f(S)/vol S)²` for a fixed subset of each of two
/// point sets under random Gaussian maps into `R^d`, and against
/// `∏_{i=1}^{subset_size-1} χ²_{d-i+1}`.
pub fn verify_stability(
    points_a: &PointSet,
    points_b: &PointSet,
    d: usize,
    subset_size: usize,
    reps: usize,
    seed: RandomSeed,
) -> Result<StabilityReport> {
    if subset_size < 2 {
        return Err(Error::InvalidInput(format!(
            "subset size must be at least 2, got {subset_size}"
        )));
    }
    if reps == 0 {
        return Err(Error::InvalidInput("need at least one repetition".into()));
    }
    let d32 =
        u32::try_from(d).map_err(|_| Error::InvalidInput(format!("dimension {d} too large")))?;
    let spec = ChiProductSpec::new(d32, (subset_size - 1) as u32)?;
    let pick = |p: &PointSet, name: &str| {
        first_nondegenerate_subset(p, subset_size).ok_or_else(|| {
            Error::InvalidInput(format!(
                "point set {name} has no non-degenerate subset of size {subset_size}"
            ))
        })
    };
    let subset_a = pick(points_a, "a")?;
    let subset_b = pick(points_b, "b")?;
    let ratios_a = squared_volume_ratios(points_a, &subset_a, d, reps, seed.derive(STREAM_A))?;
    let ratios_b = squared_volume_ratios(points_b, &subset_b, d, reps, seed.derive(STREAM_B))?;
    let reference_draws = reps.max(REFERENCE_DRAWS);
    let product = sample_chi_square_product(spec, reference_draws, seed.derive(STREAM_PRODUCT));
    Ok(StabilityReport {
        ks_ab: ks_two_sample(&ratios_a, &ratios_b),
        ks_a_product: ks_two_sample(&ratios_a, &product),
        subset_a,
        subset_b,
        reps,
        reference_draws,
    })
}
