//! Seeded Monte Carlo: generate family datasets under the coin-toss +
//! mixed-preference model, sweep the p_S/p_D ratio, and summarize each grid
//! point with the replicate mean, an empirical percentile band, and the
//! closed-form theory value.
//!
//! Determinism contract: every (grid point, replicate) cell derives its own
//! RNG seed from the master seed and the two indices by a counter-based
//! hash, so results are bit-identical for identical configurations no matter
//! how many threads execute the cells or in what order. All reductions
//! (means, percentiles) run sequentially over index-ordered cell results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{corollary1_probability, MAX_ENUMERABLE_CHILDREN};
use crate::model::{AggregateCounts, ContinuationPolicy, Sex, SexDistribution, SexPattern};
use crate::numeric::CompensatedSum;

/// Configuration of a p_S/p_D ratio sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Coin-toss parameters.
    pub sex: SexDistribution,
    /// p_D, the third-child probability after mixed-sex first two; p_S at a
    /// grid point is `ratio × p_mixed`.
    pub p_mixed: f64,
    /// The p_S/p_D values to sweep, strictly increasing.
    pub ratio_grid: Vec<f64>,
    /// Replicate datasets per grid point.
    pub reps: u32,
    /// Families per dataset.
    pub n_families: u64,
    /// Master seed from which every cell seed is derived.
    pub master_seed: u64,
    /// Percentile band (low, high), e.g. (5, 95).
    pub band: (f64, f64),
}

impl SweepConfig {
    /// Checks every invariant: probabilities in range, a strictly increasing
    /// positive grid with `ratio × p_mixed ≤ 1`, at least one replicate and
    /// family, and a sane percentile band.
    pub fn validate(&self) -> Result<()> {
        if !(self.p_mixed > 0.0 && self.p_mixed <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p_mixed must lie in (0, 1], got {}",
                self.p_mixed
            )));
        }
        if self.ratio_grid.is_empty() {
            return Err(Error::InvalidParameter("the ratio grid is empty".into()));
        }
        let mut last = 0.0;
        for &ratio in &self.ratio_grid {
            if !ratio.is_finite() || ratio <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "grid ratios must be positive and finite, got {ratio}"
                )));
            }
            if ratio <= last {
                return Err(Error::InvalidParameter(
                    "the ratio grid must be strictly increasing".into(),
                ));
            }
            if ratio * self.p_mixed > 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "ratio {ratio} × p_mixed {} exceeds 1; p_S would not be a probability",
                    self.p_mixed
                )));
            }
            last = ratio;
        }
        if self.reps == 0 {
            return Err(Error::InvalidParameter("reps must be at least 1".into()));
        }
        if self.n_families == 0 {
            return Err(Error::InvalidParameter("n_families must be at least 1".into()));
        }
        let (low, high) = self.band;
        if !(0.0..=100.0).contains(&low) || !(0.0..=100.0).contains(&high) || low >= high {
            return Err(Error::InvalidParameter(format!(
                "the percentile band must satisfy 0 ≤ low < high ≤ 100, got ({low}, {high})"
            )));
        }
        Ok(())
    }
}

/// Evenly spaced grid of `points ≥ 2` ratios from `min` to `max` inclusive.
pub fn default_ratio_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidParameter(format!(
            "a ratio grid needs at least 2 points, got {points}"
        )));
    }
    if !(min.is_finite() && max.is_finite() && min < max) {
        return Err(Error::InvalidParameter(format!(
            "grid bounds must be finite with min < max, got [{min}, {max}]"
        )));
    }
    let step = (max - min) / (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points).map(|i| min + step * i as f64).collect();
    grid[points - 1] = max; // endpoint exact regardless of rounding
    Ok(grid)
}

/// Same-sex-triple tally of one simulated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetStats {
    /// Families whose first three children share a sex.
    pub same_sex_triples: u64,
    /// Families with a third child.
    pub families_with_three: u64,
}

impl DatasetStats {
    /// The observed proportion, undefined (not 0) when no family has three
    /// children.
    pub fn proportion(&self) -> Option<f64> {
        if self.families_with_three == 0 {
            None
        } else {
            Some(self.same_sex_triples as f64 / self.families_with_three as f64)
        }
    }
}

/// One (grid point, replicate) cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawCell {
    pub ratio_index: usize,
    pub rep: u32,
    pub stats: DatasetStats,
}

/// Summary of one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// p_S/p_D at this point.
    pub ratio: f64,
    /// Mean observed proportion across included replicates.
    pub mean: f64,
    /// Lower percentile (nearest rank) of the replicate proportions.
    pub band_low: f64,
    /// Upper percentile of the replicate proportions.
    pub band_high: f64,
    /// Closed-form value (p_M³+p_F³ times the inflation factor).
    pub theory: f64,
    /// Mean number of families with three children, across all replicates.
    pub mean_families_with_three: f64,
    /// Replicates excluded because no family reached three children.
    pub excluded_reps: u32,
}

/// Per-grid-point sweep summary, in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub points: Vec<SweepPoint>,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based cell seed: two rounds of the splitmix64 finalizer fold the
/// grid and replicate indices into the master seed, giving every cell an
/// independent, order-free stream.
pub fn derive_cell_seed(master_seed: u64, ratio_index: usize, rep_index: usize) -> u64 {
    let with_ratio = splitmix64_mix(
        master_seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(ratio_index as u64 + 1)),
    );
    splitmix64_mix(with_ratio.wrapping_add(GOLDEN_GAMMA.wrapping_mul(rep_index as u64 + 1)))
}

/// Simulates one dataset of `n_families` families, each taken to its third
/// child at most: two sexes are drawn i.i.d., then a third-child indicator
/// with probability `p_same` if they match and `p_mixed` otherwise, then the
/// third sex if indicated. Fully determined by the parameters and `seed`.
pub fn simulate_dataset(
    sex: SexDistribution,
    p_same: f64,
    p_mixed: f64,
    n_families: u64,
    seed: u64,
) -> Result<DatasetStats> {
    for (value, name) in [(p_same, "p_same"), (p_mixed, "p_mixed")] {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidParameter(format!(
                "{name} must lie in [0, 1], got {value}"
            )));
        }
    }
    if n_families == 0 {
        return Err(Error::InvalidParameter("n_families must be at least 1".into()));
    }
    let p_male = sex.p_male();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut same_sex_triples: u64 = 0;
    let mut families_with_three: u64 = 0;
    for _ in 0..n_families {
        let first_is_male = rng.random::<f64>() < p_male;
        let second_is_male = rng.random::<f64>() < p_male;
        let continue_p = if first_is_male == second_is_male { p_same } else { p_mixed };
        if rng.random::<f64>() < continue_p {
            families_with_three += 1;
            let third_is_male = rng.random::<f64>() < p_male;
            if first_is_male == second_is_male && second_is_male == third_is_male {
                same_sex_triples += 1;
            }
        }
    }
    Ok(DatasetStats { same_sex_triples, families_with_three })
}

/// Runs every (grid point, replicate) cell, in parallel when a rayon pool is
/// available, returning cells in (ratio_index, rep) order.
pub fn sweep_cells(config: &SweepConfig) -> Result<Vec<RawCell>> {
    config.validate()?;
    let reps = config.reps as usize;
    let total = config.ratio_grid.len() * reps;
    (0..total)
        .into_par_iter()
        .map(|cell| {
            let ratio_index = cell / reps;
            let rep = (cell % reps) as u32;
            let p_same = config.ratio_grid[ratio_index] * config.p_mixed;
            let seed = derive_cell_seed(config.master_seed, ratio_index, rep as usize);
            let stats = simulate_dataset(
                config.sex,
                p_same,
                config.p_mixed,
                config.n_families,
                seed,
            )?;
            Ok(RawCell { ratio_index, rep, stats })
        })
        .collect()
}

/// Nearest-rank percentile of an ascending-sorted slice.
fn nearest_rank(sorted: &[f64], percentile: f64) -> f64 {
    let n = sorted.len();
    let rank = ((percentile / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Reduces raw cells to per-grid-point summaries. Accepts cells in any
/// order (they are re-sorted), so offline-stored raw output reproduces the
/// summary exactly.
pub fn summarize_cells(config: &SweepConfig, cells: &[RawCell]) -> Result<SweepSummary> {
    config.validate()?;
    let mut ordered: Vec<&RawCell> = cells.iter().collect();
    ordered.sort_by_key(|c| (c.ratio_index, c.rep));
    let mut buckets: Vec<Vec<&RawCell>> = vec![Vec::new(); config.ratio_grid.len()];
    for cell in ordered {
        match buckets.get_mut(cell.ratio_index) {
            Some(bucket) => bucket.push(cell),
            None => {
                return Err(Error::InvalidParameter(format!(
                    "cell ratio_index {} is outside the {}-point grid",
                    cell.ratio_index,
                    config.ratio_grid.len()
                )))
            }
        }
    }
    let mut points = Vec::with_capacity(config.ratio_grid.len());
    for (ratio_index, bucket) in buckets.iter().enumerate() {
        let ratio = config.ratio_grid[ratio_index];
        let mut proportions: Vec<f64> = Vec::with_capacity(bucket.len());
        let mut ge3_total: u64 = 0;
        let mut excluded_reps: u32 = 0;
        for cell in bucket {
            ge3_total += cell.stats.families_with_three;
            match cell.stats.proportion() {
                Some(p) => proportions.push(p),
                None => excluded_reps += 1,
            }
        }
        if proportions.is_empty() {
            return Err(Error::InsufficientData(format!(
                "every replicate at ratio {ratio} had no family with three children"
            )));
        }
        let mut mean_sum = CompensatedSum::new();
        for &p in &proportions {
            mean_sum.add(p);
        }
        let mean = mean_sum.value() / proportions.len() as f64;
        let mut sorted = proportions;
        sorted.sort_by(f64::total_cmp);
        let theory =
            corollary1_probability(config.sex, ratio * config.p_mixed, config.p_mixed)?;
        points.push(SweepPoint {
            ratio,
            mean,
            band_low: nearest_rank(&sorted, config.band.0),
            band_high: nearest_rank(&sorted, config.band.1),
            theory,
            mean_families_with_three: ge3_total as f64 / bucket.len().max(1) as f64,
            excluded_reps,
        });
    }
    Ok(SweepSummary { points })
}

/// Full sweep: simulate every cell, then summarize.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepSummary> {
    let cells = sweep_cells(config)?;
    summarize_cells(config, &cells)
}

/// Samples `n_families` completed families under an arbitrary policy and
/// returns their pattern counts — the generative counterpart of
/// [`crate::exact::enumerate_distribution`] for estimator and test
/// calibration. Families that stop after one child fall outside the data
/// universe and are dropped.
///
/// Draw order per family: one uniform per birth, then one per continuation
/// decision with positive probability (a cap-forced stop draws nothing).
pub fn sample_counts(
    sex: SexDistribution,
    policy: &ContinuationPolicy,
    n_families: u64,
    seed: u64,
) -> Result<AggregateCounts> {
    let cap = policy.max_children();
    if cap > MAX_ENUMERABLE_CHILDREN {
        return Err(Error::EnumerationTooLarge {
            max_children: cap,
            limit: MAX_ENUMERABLE_CHILDREN,
        });
    }
    if n_families == 0 {
        return Err(Error::InvalidParameter("n_families must be at least 1".into()));
    }
    let p_male = sex.p_male();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Histogram over pattern codes (1 << len) | bits, bit i set when child
    // i+1 is female: one add per family instead of one map insert.
    let mut histogram = vec![0u64; 1usize << (cap + 1)];
    let mut scratch = SexPattern::empty();
    for _ in 0..n_families {
        scratch.clear();
        let mut bits: usize = 0;
        loop {
            let child = if rng.random::<f64>() < p_male { Sex::Male } else { Sex::Female };
            if child == Sex::Female {
                bits |= 1 << scratch.len();
            }
            scratch.push(child);
            let q = policy.continuation_probability(&scratch);
            if q <= 0.0 || rng.random::<f64>() >= q {
                break;
            }
        }
        histogram[(1 << scratch.len()) | bits] += 1;
    }
    let mut counts = AggregateCounts::new();
    for (code, &count) in histogram.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let len = (usize::BITS - 1 - code.leading_zeros()) as usize;
        if len < 2 {
            continue;
        }
        let children = (0..len)
            .map(|i| if code >> i & 1 == 1 { Sex::Female } else { Sex::Male })
            .collect();
        counts.insert(SexPattern::new(children), count)?;
    }
    Ok(counts)
}
