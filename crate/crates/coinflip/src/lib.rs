//! Family-size selection bias for coin-toss births.
//!
//! Each child's sex is an independent draw from a fixed [`SexDistribution`]
//! — a possibly biased coin that no stopping behaviour can influence. After
//! each birth the family decides whether to have another child according to
//! a [`ContinuationPolicy`] that may depend arbitrarily on the sexes born so
//! far (for example, "stop once we have one of each"). Conditioning on the
//! *realized* family size then distorts sex-composition statistics even
//! though every toss is fair in isolation: families that stopped early
//! because they were satisfied drop out of the large-family stratum, and
//! what remains over-represents the compositions that kept parents trying.
//!
//! The crate quantifies that selection effect three ways, and the three are
//! cross-checked against each other throughout the test suite:
//!
//! - **Closed forms** ([`theorem1_probability`], [`corollary1_inflation`],
//!   [`corollary1_probability`], [`theorem2_probability`],
//!   [`exactly_three_probability`]): among families with at least three
//!   children, the probability that the first three share a sex is
//!   `p_M³·f₁(M)·f₂(M) + p_F³·f₁(F)·f₂(F)`, where the correction factors
//!   `f₁` and `f₂` compare each sex's share at the first and third birth
//!   against its unconditional probability. Under the two-parameter
//!   stopping rule (continue past two children with probability `p_S` after
//!   a same-sex pair, `p_D` after a mixed pair) the factors collapse to a
//!   single inflation multiplier `1 / (1 − 2·p_M·p_F·(1 − p_D/p_S))` on the
//!   no-preference benchmark `p_M³ + p_F³`.
//! - **Exact enumeration** ([`enumerate_distribution`],
//!   [`event_probability`]): the full family-pattern distribution under any
//!   policy, summed with compensated arithmetic, serving as an oracle for
//!   the closed forms and the estimators.
//! - **Estimation and testing** ([`build_report`],
//!   [`proportion_chi2_test`], [`sequential_same_sex_tests`],
//!   [`combined_sequence_test`], [`run_sweep`]): plug-in estimates and
//!   chi-square tests over observed pattern counts, plus a deterministic,
//!   thread-count-invariant Monte Carlo sweep of the `p_S/p_D` ratio with
//!   percentile bands and an SVG chart ([`render_sweep_svg`]).
//!
//! # Example
//!
//! ```
//! use coinflip::{corollary1_probability, SexDistribution};
//!
//! let sex = SexDistribution::new(0.5164)?;
//! // Parents continue past a same-sex pair more often than past a mixed
//! // pair (p_S = 0.426 vs p_D = 0.354), so same-sex triples are inflated
//! // above the no-preference benchmark p_M³ + p_F³ ≈ 0.2508.
//! let p = corollary1_probability(sex, 0.426, 0.354)?;
//! assert!(p > 0.27 && p < 0.28);
//! # Ok::<(), coinflip::Error>(())
//! ```

pub mod chart;
pub mod counts_csv;
pub mod error;
pub mod estimate;
pub mod exact;
pub mod inference;
pub mod model;
mod numeric;
pub mod simulate;

pub use chart::render_sweep_svg;
pub use counts_csv::{
    counts_to_string, parse_counts, parse_counts_str, read_counts_file, write_counts,
    COUNTS_HEADER,
};
pub use error::{Error, Result};
pub use estimate::{
    build_report, estimate_continuation, estimate_correction_factors,
    estimate_sex_distribution, observed_same_sex_proportion, ContinuationEstimates,
    EstimationReport, SizeCondition,
};
pub use exact::{
    corollary1_inflation, corollary1_probability, correction_factors_from_policy,
    enumerate_distribution, event_probability, exactly_three_probability,
    theorem1_probability, theorem2_probability, PatternDistribution, PatternEvent,
    PluginProbability, MAX_ENUMERABLE_CHILDREN,
};
pub use inference::{
    chi2_cdf, combined_null_proportion, combined_sequence_test, proportion_chi2_test,
    sequential_same_sex_tests, TestResult,
};
pub use model::{
    pattern_is_same_sex_prefix, AggregateCounts, ContinuationPolicy, CorrectionFactors,
    Sex, SexDistribution, SexPattern, TailRule, DEFAULT_MAX_CHILDREN,
};
pub use simulate::{
    default_ratio_grid, derive_cell_seed, run_sweep, sample_counts, simulate_dataset,
    summarize_cells, sweep_cells, DatasetStats, RawCell, SweepConfig, SweepPoint,
    SweepSummary,
};
