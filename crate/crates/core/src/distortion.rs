//! Measured distortion of a concrete linear map, and the randomized
//! embedding procedure.
//!
//! For a subset `S` of `s + 1` points the normalized volume ratio is
//! `(vol f(S) / vol S)^{1/s}`. A report collects its minimum and maximum per
//! subset size; the volume distortion is `max / min` over all sizes. Subsets
//! whose source volume is zero carry no information and are only counted.

use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{apply_map, LinearMap, PointSet, VolumeWorkspace, DEFAULT_RANK_TOL};
use crate::randgen::{gaussian_matrix, RandomSeed};
use crate::subsets::{binomial, unrank, Combinations};
use crate::{Error, Result};

/// Default number of subsets above which exhaustive mode falls back to sampling.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;
/// Default number of subsets sampled per size.
pub const DEFAULT_SAMPLE_COUNT: usize = 10_000;

const SUBSET_STREAM: u64 = 0x005a_b5e7;
const MAP_STREAM: u64 = 0x3a9;
const CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsetMode {
    Exhaustive,
    Sampled,
}

/// Which subsets a report evaluates.
///
/// In exhaustive mode every subset is evaluated as long as the total count
/// stays within `enumeration_cap`; beyond that, `sample_count` subsets per
/// size are drawn uniformly without replacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsetStrategy {
    pub mode: SubsetMode,
    pub sample_count: usize,
    pub enumeration_cap: u64,
}

impl Default for SubsetStrategy {
    fn default() -> Self {
        Self {
            mode: SubsetMode::Exhaustive,
            sample_count: DEFAULT_SAMPLE_COUNT,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

impl SubsetStrategy {
    pub fn exhaustive() -> Self {
        Self::default()
    }

    pub fn sampled(sample_count: usize) -> Self {
        Self {
            mode: SubsetMode::Sampled,
            sample_count,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::InvalidInput(
                "sample_count must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Extremes of the normalized ratio over subsets of one size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeStats {
    /// `None` when every subset of this size was degenerate.
    pub min_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub count_evaluated: u64,
    pub count_degenerate: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    /// Keyed by subset size `|S|`, from 2 to `k + 1`.
    pub per_size: BTreeMap<usize, SizeStats>,
    pub overall_min: f64,
    pub overall_max: f64,
    /// `overall_max / overall_min`; infinite if some image collapsed.
    pub distortion: f64,
    pub strategy: SubsetStrategy,
    /// What actually ran: exhaustive requests over the cap are sampled.
    pub mode_used: SubsetMode,
    pub seed: RandomSeed,
}

impl DistortionReport {
    /// The report of the same map with its scale multiplied by `1 / divisor`.
    fn divided_by(&self, divisor: f64) -> Self {
        let per_size = self
            .per_size
            .iter()
            .map(|(&size, st)| {
                (
                    size,
                    SizeStats {
                        min_ratio: st.min_ratio.map(|r| r / divisor),
                        max_ratio: st.max_ratio.map(|r| r / divisor),
                        ..*st
                    },
                )
            })
            .collect();
        let overall_min = self.overall_min / divisor;
        let overall_max = self.overall_max / divisor;
        Self {
            per_size,
            overall_min,
            overall_max,
            distortion: overall_max / overall_min,
            ..self.clone()
        }
    }

    /// Total subsets evaluated over all sizes, degenerate ones included.
    pub fn total_evaluated(&self) -> u64 {
        self.per_size.values().map(|s| s.count_evaluated).sum()
    }
}

/// `(vol f(S) / vol S)^{1/(|S|-1)}`, or `None` when `vol S = 0`. A collapsed
/// image of a non-degenerate subset gives `Some(0.0)`.
pub fn normalized_volume_ratio(f: &LinearMap, subset: &[&[f64]]) -> Result<Option<f64>> {
    if subset.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 points, got {}",
            subset.len()
        )));
    }
    if let Some(p) = subset.iter().find(|p| p.len() != f.source_dim()) {
        return Err(Error::InvalidInput(format!(
            "point has dimension {} but the map expects {}",
            p.len(),
            f.source_dim()
        )));
    }
    let src = PointSet::new(subset.iter().map(|p| p.to_vec()).collect())?;
    let img = apply_map(f, &src)?;
    let all: Vec<usize> = (0..subset.len()).collect();
    let mut ws = VolumeWorkspace::default();
    let Some(src_lv) = ws
        .log_volume(src.select(&all), src.dim(), DEFAULT_RANK_TOL)
        .value()
    else {
        return Ok(None);
    };
    let img_lv = ws.log_volume(img.select(&all), img.dim(), DEFAULT_RANK_TOL);
    Ok(Some(ratio_from_logs(
        img_lv.value(),
        src_lv,
        subset.len() - 1,
    )))
}

fn ratio_from_logs(img: Option<f64>, src: f64, simplex_dim: usize) -> f64 {
    match img {
        Some(img) => ((img - src) / simplex_dim as f64).exp(),
        None => 0.0,
    }
}

/// Subsets of one size that have non-zero source volume.
#[derive(Debug, Clone)]
struct SizeBlock {
    size: usize,
    /// Flattened point indices, `size` per subset.
    indices: Vec<u32>,
    src_log_volume: Vec<f64>,
    count_degenerate: u64,
}

/// The subsets a report evaluates, with their source volumes. Built once
/// and reused across candidate maps.
#[derive(Debug, Clone)]
pub(crate) struct SubsetPlan {
    blocks: Vec<SizeBlock>,
    strategy: SubsetStrategy,
    mode_used: SubsetMode,
    seed: RandomSeed,
}

fn sample_ranks(
    n: usize,
    size: usize,
    total: u128,
    count: usize,
    seed: RandomSeed,
) -> Vec<Vec<usize>> {
    let mut rng = seed.rng();
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let rank = rng.random_range(0..total);
        // Collisions are redrawn.
        if seen.insert(rank) {
            out.push(unrank(n, size, rank));
        }
    }
    out
}

impl SubsetPlan {
    /// Subset sizes `2..=k+1` of `points`.
    pub(crate) fn build(
        points: &PointSet,
        k: usize,
        strategy: SubsetStrategy,
        seed: RandomSeed,
    ) -> Result<Self> {
        strategy.validate()?;
        let n = points.len();
        if k == 0 || k + 1 > n {
            return Err(Error::InvalidInput(format!(
                "need 1 <= k <= n - 1, got k = {k}, n = {n}"
            )));
        }
        let counts: Vec<u128> = (2..=k + 1)
            .map(|size| {
                binomial(n, size)
                    .ok_or_else(|| Error::InvalidInput(format!("C({n}, {size}) overflows")))
            })
            .collect::<Result<_>>()?;
        let total = counts.iter().try_fold(0u128, |acc, &c| acc.checked_add(c));
        let exhaustive = strategy.mode == SubsetMode::Exhaustive
            && total.is_some_and(|t| t <= u128::from(strategy.enumeration_cap));
        let mode_used = if exhaustive {
            SubsetMode::Exhaustive
        } else {
            SubsetMode::Sampled
        };

        let mut blocks = Vec::with_capacity(k);
        for (size, &count) in (2..=k + 1).zip(&counts) {
            let subsets: Vec<Vec<usize>> = if exhaustive || count <= strategy.sample_count as u128 {
                Combinations::new(n, size).collect()
            } else {
                sample_ranks(
                    n,
                    size,
                    count,
                    strategy.sample_count,
                    seed.derive(SUBSET_STREAM).derive(size as u64),
                )
            };
            let vols: Vec<Option<f64>> = subsets
                .par_chunks(CHUNK)
                .flat_map_iter(|chunk| {
                    let mut ws = VolumeWorkspace::default();
                    chunk
                        .iter()
                        .map(|s| {
                            ws.log_volume(
                                s.iter().map(|&i| points.point(i)),
                                points.dim(),
                                DEFAULT_RANK_TOL,
                            )
                            .value()
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
            let mut block = SizeBlock {
                size,
                indices: Vec::new(),
                src_log_volume: Vec::new(),
                count_degenerate: 0,
            };
            for (subset, vol) in subsets.iter().zip(vols) {
                match vol {
                    Some(v) => {
                        block.indices.extend(subset.iter().map(|&i| i as u32));
                        block.src_log_volume.push(v);
                    }
                    None => block.count_degenerate += 1,
                }
            }
            blocks.push(block);
        }
        if blocks.iter().all(|b| b.src_log_volume.is_empty()) {
            return Err(Error::Degenerate("every subset has zero volume".into()));
        }
        Ok(Self {
            blocks,
            strategy,
            mode_used,
            seed,
        })
    }

    /// Evaluates the plan against `image`, the mapped points in the same order.
    pub(crate) fn evaluate(&self, image: &PointSet) -> DistortionReport {
        let mut per_size = BTreeMap::new();
        let (mut overall_min, mut overall_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for block in &self.blocks {
            let (lo, hi) = block
                .indices
                .par_chunks(block.size * CHUNK)
                .zip(block.src_log_volume.par_chunks(CHUNK))
                .map(|(idx, src)| {
                    let mut ws = VolumeWorkspace::default();
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for (subset, &src_lv) in idx.chunks_exact(block.size).zip(src) {
                        let img = ws.log_volume(
                            subset.iter().map(|&i| image.point(i as usize)),
                            image.dim(),
                            DEFAULT_RANK_TOL,
                        );
                        let r = ratio_from_logs(img.value(), src_lv, block.size - 1);
                        lo = lo.min(r);
                        hi = hi.max(r);
                    }
                    (lo, hi)
                })
                .reduce(
                    || (f64::INFINITY, f64::NEG_INFINITY),
                    |a, b| (a.0.min(b.0), a.1.max(b.1)),
                );
            let nondegenerate = block.src_log_volume.len() as u64;
            if nondegenerate > 0 {
                overall_min = overall_min.min(lo);
                overall_max = overall_max.max(hi);
            }
            per_size.insert(
                block.size,
                SizeStats {
                    min_ratio: (nondegenerate > 0).then_some(lo),
                    max_ratio: (nondegenerate > 0).then_some(hi),
                    count_evaluated: nondegenerate + block.count_degenerate,
                    count_degenerate: block.count_degenerate,
                },
            );
        }
        DistortionReport {
            per_size,
            overall_min,
            overall_max,
            distortion: overall_max / overall_min,
            strategy: self.strategy,
            mode_used: self.mode_used,
            seed: self.seed,
        }
    }
}

/// Distortion of `f` over subsets of `points` of sizes `2..=k+1`.
pub fn distortion_report(
    f: &LinearMap,
    points: &PointSet,
    k: usize,
    strategy: SubsetStrategy,
    seed: RandomSeed,
) -> Result<DistortionReport> {
    let image = apply_map(f, points)?;
    distortion_report_images(points, &image, k, strategy, seed)
}

/// Like [`distortion_report`], given the images of the points directly
/// (`image.point(i)` is the image of `points.point(i)`).
pub fn distortion_report_images(
    points: &PointSet,
    image: &PointSet,
    k: usize,
    strategy: SubsetStrategy,
    seed: RandomSeed,
) -> Result<DistortionReport> {
    if points.len() != image.len() {
        return Err(Error::InvalidInput(format!(
            "{} source points but {} image points",
            points.len(),
            image.len()
        )));
    }
    Ok(SubsetPlan::build(points, k, strategy, seed)?.evaluate(image))
}

/// Largest over smallest pairwise distance ratio, over all pairs.
pub fn distance_distortion(f: &LinearMap, points: &PointSet) -> Result<f64> {
    let plan = SubsetPlan::build(points, 1, SubsetStrategy::exhaustive(), RandomSeed::new(0))
        .map_err(|e| match e {
            Error::Degenerate(_) => Error::InvalidInput("all points coincide".into()),
            e => e,
        })?;
    if plan.blocks[0].count_degenerate > 0 {
        return Err(Error::InvalidInput(
            "point set contains duplicate points".into(),
        ));
    }
    Ok(plan.evaluate(&apply_map(f, points)?).distortion)
}

/// A rescaled Gaussian map and its measured distortion.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub map: LinearMap,
    pub report: DistortionReport,
    pub trials_used: usize,
    pub warnings: Vec<String>,
}

/// Parameters of [`embed`] beyond the point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedConfig {
    pub target_dim: usize,
    /// Largest simplex dimension considered: subsets of up to `k + 1` points.
    pub k: usize,
    pub max_trials: usize,
    pub target_distortion: Option<f64>,
    pub strategy: SubsetStrategy,
    pub seed: RandomSeed,
}

/// Draws Gaussian maps `R^N → R^d` until one has distortion at most the
/// target, or returns the best of `max_trials`. The returned map is
/// rescaled so that its smallest normalized ratio is exactly one.
pub fn embed(points: &PointSet, config: &EmbedConfig) -> Result<Embedding> {
    let EmbedConfig {
        target_dim,
        k,
        max_trials,
        target_distortion,
        strategy,
        seed,
    } = *config;
    if max_trials == 0 {
        return Err(Error::InvalidInput("max_trials must be at least 1".into()));
    }
    if target_dim == 0 {
        return Err(Error::InvalidInput(
            "target dimension must be at least 1".into(),
        ));
    }
    let mut warnings = Vec::new();
    if target_dim < 3 {
        warnings.push(format!("target dimension {target_dim} is below 3"));
    }
    if k > target_dim / 2 {
        warnings.push(format!(
            "k = {k} exceeds floor(d/2) = {}; no volume guarantee applies",
            target_dim / 2
        ));
    }

    let plan = SubsetPlan::build(points, k, strategy, seed)?;
    let mut best: Option<(LinearMap, DistortionReport)> = None;
    let mut trials_used = 0;
    for trial in 0..max_trials {
        trials_used += 1;
        let map = gaussian_matrix(
            target_dim,
            points.dim(),
            seed.derive(MAP_STREAM).derive(trial as u64),
        )?;
        let report = plan.evaluate(&apply_map(&map, points)?);
        let met = target_distortion.is_some_and(|t| report.distortion <= t);
        if best
            .as_ref()
            .is_none_or(|(_, b)| report.distortion < b.distortion)
        {
            best = Some((map, report));
        }
        if met {
            break;
        }
    }
    let (map, report) = best.expect("at least one trial");

    let min = report.overall_min;
    if !(min > 0.0 && min.is_finite()) {
        warnings.push("some subset collapsed to zero volume; the map was not rescaled".into());
        return Ok(Embedding {
            map,
            report,
            trials_used,
            warnings,
        });
    }
    Ok(Embedding {
        map: map.rescaled(1.0 / min)?,
        report: report.divided_by(min),
        trials_used,
        warnings,
    })
}
