//! Estimators mapping observed pattern counts to every quantity in the
//! empirical pipeline: sex probabilities, continuation probabilities,
//! correction factors, observed proportions, and the combined
//! prediction-vs-observation report.
//!
//! All estimators are plain plug-in ratios of integer counts, computed in
//! double precision with no continuity corrections. The data universe is
//! families with at least two children, so the raw count of first births is
//! incomplete; [`estimate_sex_distribution`] therefore uses only births at
//! positions 2 and later, while first-child sexes still feed the first
//! correction factors — a deliberate, documented asymmetry in the pipeline
//! being reproduced.

use crate::error::{Error, Result};
use crate::exact::{theorem1_probability, PluginProbability};
use crate::model::{AggregateCounts, CorrectionFactors, Sex, SexDistribution};

/// Estimated continuation probabilities at parity 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationEstimates {
    /// p̂_S: share of same-sex-first-two families (MM and FF pooled) that went
    /// on to a third child.
    pub same_sex: f64,
    /// p̂_D: the analogous share for mixed-sex-first-two families.
    pub mixed_sex: f64,
    /// P̂(N ≥ 3 | N ≥ 2): the unconditional third-child share.
    pub unconditional: f64,
}

/// Which family sizes form the conditioning stratum of an observed
/// proportion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeCondition {
    /// Families with three or more children.
    AtLeastThree,
    /// Families with exactly three children.
    ExactlyThree,
}

impl SizeCondition {
    fn admits(self, len: usize) -> bool {
        match self {
            SizeCondition::AtLeastThree => len >= 3,
            SizeCondition::ExactlyThree => len == 3,
        }
    }

    fn describe(self) -> &'static str {
        match self {
            SizeCondition::AtLeastThree => "families with at least 3 children",
            SizeCondition::ExactlyThree => "families with exactly 3 children",
        }
    }
}

/// The full prediction-vs-observation report: estimates, the plug-in
/// prediction for the same-sex-triple share, the binomial benchmark, their
/// ratio, and the directly observed share.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    /// (p̂_M, p̂_F) from births at positions ≥ 2.
    pub sex: SexDistribution,
    /// (p̂_S, p̂_D, unconditional third-child share).
    pub continuation: ContinuationEstimates,
    /// The four estimated correction factors.
    pub correction_factors: CorrectionFactors,
    /// Theorem 1 plug-in: p̂_M³·first_male·second_male + p̂_F³·first_female·second_female.
    pub predicted_same3: f64,
    /// Diagnostic if the plug-in left [0, 1] (inconsistent inputs).
    pub predicted_warning: Option<String>,
    /// Binomial benchmark p̂_M³ + p̂_F³ (what the share would be with
    /// history-independent stopping).
    pub binomial_same3: f64,
    /// predicted_same3 / binomial_same3.
    pub inflation: f64,
    /// Directly observed share of same-sex triples among families with ≥ 3
    /// children.
    pub observed_same3: f64,
    /// Number of families with at least 2 children (the whole data set).
    pub families_ge2: u64,
    /// Number of families with at least 3 children.
    pub families_ge3: u64,
}

fn require_nonempty(counts: &AggregateCounts) -> Result<()> {
    if counts.total_families() == 0 {
        return Err(Error::InsufficientData(
            "no families with at least 2 children in the counts".into(),
        ));
    }
    Ok(())
}

/// p̂_M from births at positions 2 and later only (first births are
/// undercounted in the data universe), each family weighted by its count.
pub fn estimate_sex_distribution(counts: &AggregateCounts) -> Result<SexDistribution> {
    let mut males: u64 = 0;
    let mut births: u64 = 0;
    for (pattern, count) in counts.iter() {
        let later = &pattern.children()[1..];
        births += later.len() as u64 * count;
        males += later.iter().filter(|&&s| s == Sex::Male).count() as u64 * count;
    }
    if births == 0 {
        return Err(Error::InsufficientData(
            "no births at positions 2 or later to estimate the sex distribution".into(),
        ));
    }
    SexDistribution::new(males as f64 / births as f64)
}

/// p̂_S and p̂_D: third-child shares within the same-sex and mixed-sex
/// first-two strata (MM pooled with FF, MF with FM), plus the unconditional
/// share.
pub fn estimate_continuation(counts: &AggregateCounts) -> Result<ContinuationEstimates> {
    require_nonempty(counts)?;
    let mut same: u64 = 0;
    let mut same_ge3: u64 = 0;
    let mut mixed: u64 = 0;
    let mut mixed_ge3: u64 = 0;
    for (pattern, count) in counts.iter() {
        let went_on = pattern.len() >= 3;
        if pattern.is_same_sex_prefix(2)? {
            same += count;
            if went_on {
                same_ge3 += count;
            }
        } else {
            mixed += count;
            if went_on {
                mixed_ge3 += count;
            }
        }
    }
    if same == 0 {
        return Err(Error::InsufficientData(
            "no families with same-sex first two children (p̂_S stratum empty)".into(),
        ));
    }
    if mixed == 0 {
        return Err(Error::InsufficientData(
            "no families with mixed-sex first two children (p̂_D stratum empty)".into(),
        ));
    }
    Ok(ContinuationEstimates {
        same_sex: same_ge3 as f64 / same as f64,
        mixed_sex: mixed_ge3 as f64 / mixed as f64,
        unconditional: (same_ge3 + mixed_ge3) as f64 / (same + mixed) as f64,
    })
}

/// The four estimated correction factors: first factors
/// P̂(first child M | N≥2) / p̂_M (and the female analogue), second factors
/// P̂(N≥3 | N≥2, first two MM) / P̂(N≥3 | N≥2) (and the FF analogue).
pub fn estimate_correction_factors(counts: &AggregateCounts) -> Result<CorrectionFactors> {
    require_nonempty(counts)?;
    let sex = estimate_sex_distribution(counts)?;
    let mut first_m: u64 = 0;
    let mut mm: u64 = 0;
    let mut mm_ge3: u64 = 0;
    let mut ff: u64 = 0;
    let mut ff_ge3: u64 = 0;
    let mut ge3: u64 = 0;
    let total = counts.total_families();
    for (pattern, count) in counts.iter() {
        let first = pattern.child(0).expect("patterns have at least 2 children");
        if first == Sex::Male {
            first_m += count;
        }
        let went_on = pattern.len() >= 3;
        if went_on {
            ge3 += count;
        }
        if pattern.is_same_sex_prefix(2)? {
            if first == Sex::Male {
                mm += count;
                if went_on {
                    mm_ge3 += count;
                }
            } else {
                ff += count;
                if went_on {
                    ff_ge3 += count;
                }
            }
        }
    }
    if sex.p_male() == 0.0 || sex.p_female() == 0.0 {
        return Err(Error::InsufficientData(format!(
            "first correction factors divide by p̂_M = {} and p̂_F = {}; both must be positive",
            sex.p_male(),
            sex.p_female()
        )));
    }
    if mm == 0 {
        return Err(Error::InsufficientData(
            "second_male correction factor: no families whose first two children are both male"
                .into(),
        ));
    }
    if ff == 0 {
        return Err(Error::InsufficientData(
            "second_female correction factor: no families whose first two children are both female"
                .into(),
        ));
    }
    if ge3 == 0 {
        return Err(Error::InsufficientData(
            "second correction factors: no families with at least 3 children".into(),
        ));
    }
    let total = total as f64;
    let ge3_share = ge3 as f64 / total;
    let first_male = (first_m as f64 / total) / sex.p_male();
    let first_female = ((counts.total_families() - first_m) as f64 / total) / sex.p_female();
    let second_male = (mm_ge3 as f64 / mm as f64) / ge3_share;
    let second_female = (ff_ge3 as f64 / ff as f64) / ge3_share;
    CorrectionFactors::new(first_male, first_female, second_male, second_female)
}

/// Observed share of families in the stratum whose first `k` children share
/// a sex (`k` is 2 or 3).
pub fn observed_same_sex_proportion(
    counts: &AggregateCounts,
    k: usize,
    condition: SizeCondition,
) -> Result<f64> {
    if k != 2 && k != 3 {
        return Err(Error::InvalidParameter(format!(
            "the observed same-sex proportion is defined for k = 2 or 3, got {k}"
        )));
    }
    let mut stratum: u64 = 0;
    let mut same: u64 = 0;
    for (pattern, count) in counts.iter() {
        if !condition.admits(pattern.len()) {
            continue;
        }
        stratum += count;
        if pattern.is_same_sex_prefix(k)? {
            same += count;
        }
    }
    if stratum == 0 {
        return Err(Error::InsufficientData(format!(
            "no {} in the counts",
            condition.describe()
        )));
    }
    Ok(same as f64 / stratum as f64)
}

/// Runs the full pipeline: every estimator above, the Theorem 1 plug-in
/// prediction, the binomial benchmark, and the observed share.
pub fn build_report(counts: &AggregateCounts) -> Result<EstimationReport> {
    let sex = estimate_sex_distribution(counts)?;
    let continuation = estimate_continuation(counts)?;
    let correction_factors = estimate_correction_factors(counts)?;
    let PluginProbability { value: predicted_same3, warning: predicted_warning } =
        theorem1_probability(sex, correction_factors);
    let pm = sex.p_male();
    let pf = sex.p_female();
    let binomial_same3 = pm * pm * pm + pf * pf * pf;
    let inflation = predicted_same3 / binomial_same3;
    let observed_same3 = observed_same_sex_proportion(counts, 3, SizeCondition::AtLeastThree)?;
    Ok(EstimationReport {
        sex,
        continuation,
        correction_factors,
        predicted_same3,
        predicted_warning,
        binomial_same3,
        inflation,
        observed_same3,
        families_ge2: counts.families_with_at_least(2),
        families_ge3: counts.families_with_at_least(3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{
        correction_factors_from_policy, enumerate_distribution, event_probability,
        PatternEvent,
    };
    use crate::model::{ContinuationPolicy, SexPattern, TailRule};

    fn pat(s: &str) -> SexPattern {
        s.parse().expect("valid pattern")
    }

    fn counts_of(pairs: &[(&str, u64)]) -> AggregateCounts {
        let mut counts = AggregateCounts::new();
        for (pattern, count) in pairs {
            counts.insert(pat(pattern), *count).unwrap();
        }
        counts
    }

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "expected {expected}, got {actual} (tolerance {tol})"
        );
    }

    /// The worked 8-pattern data set used throughout: 25 families, 30 births
    /// at positions ≥ 2, 17 of them male.
    fn eight_pattern_counts() -> AggregateCounts {
        counts_of(&[
            ("MM", 6),
            ("FF", 4),
            ("MF", 5),
            ("FM", 5),
            ("MMM", 2),
            ("FFF", 1),
            ("MFF", 1),
            ("FMM", 1),
        ])
    }

    // === estimate_sex_distribution ===

    #[test]
    fn sex_estimate_uses_later_births_only() {
        let sex = estimate_sex_distribution(&eight_pattern_counts()).unwrap();
        assert_close(sex.p_male(), 17.0 / 30.0, 1e-15);
    }

    #[test]
    fn sex_estimate_degenerate_and_symmetric_cases() {
        let sex = estimate_sex_distribution(&counts_of(&[("MM", 1)])).unwrap();
        assert_eq!(sex.p_male(), 1.0);
        let sex = estimate_sex_distribution(&counts_of(&[("MF", 3), ("FM", 3)])).unwrap();
        assert_eq!(sex.p_male(), 0.5);
    }

    #[test]
    fn sex_estimate_requires_data() {
        let err = estimate_sex_distribution(&AggregateCounts::new()).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }

    // === estimate_continuation ===

    #[test]
    fn continuation_estimates_match_the_hand_count() {
        let c = estimate_continuation(&eight_pattern_counts()).unwrap();
        assert_close(c.same_sex, 3.0 / 13.0, 1e-15);
        assert_close(c.mixed_sex, 2.0 / 12.0, 1e-15);
        assert_close(c.unconditional, 5.0 / 25.0, 1e-15);
    }

    #[test]
    fn continuation_is_zero_when_no_family_has_three_children() {
        let c = estimate_continuation(&counts_of(&[("MM", 2), ("MF", 2)])).unwrap();
        assert_eq!(c.same_sex, 0.0);
        assert_eq!(c.mixed_sex, 0.0);
        assert_eq!(c.unconditional, 0.0);
    }

    #[test]
    fn continuation_names_the_empty_stratum() {
        let err = estimate_continuation(&counts_of(&[("MM", 5)])).unwrap_err();
        assert!(err.to_string().contains("mixed-sex"));
        let err = estimate_continuation(&counts_of(&[("MF", 5)])).unwrap_err();
        assert!(err.to_string().contains("same-sex"));
    }

    // === estimate_correction_factors ===

    #[test]
    fn correction_factors_match_the_hand_count() {
        let cf = estimate_correction_factors(&eight_pattern_counts()).unwrap();
        // first_male = (14/25) / (17/30), first_female = (11/25) / (13/30)
        assert_close(cf.first_male(), (14.0 / 25.0) / (17.0 / 30.0), 1e-15);
        assert_close(cf.first_female(), (11.0 / 25.0) / (13.0 / 30.0), 1e-15);
        // second_male: 8 families first-two-MM (MM:6, MMM:2), 2 of them with
        // a third child → (2/8) / (5/25)
        assert_close(cf.second_male(), 1.25, 1e-15);
        // second_female: 5 families first-two-FF (FF:4, FFF:1), 1 with a
        // third child → (1/5) / (5/25)
        assert_close(cf.second_female(), 1.0, 1e-15);
    }

    #[test]
    fn correction_factors_are_unit_for_balanced_history_independent_counts() {
        // Relabel-symmetric counts with the same third-child share (2/8) in
        // every first-two stratum: p̂_M = 20/40 = 1/2, first-child share 1/2,
        // so every factor is exactly 1.
        let counts = counts_of(&[
            ("MM", 6),
            ("MF", 6),
            ("FM", 6),
            ("FF", 6),
            ("MMM", 1),
            ("MMF", 1),
            ("MFM", 1),
            ("MFF", 1),
            ("FMM", 1),
            ("FMF", 1),
            ("FFM", 1),
            ("FFF", 1),
        ]);
        let cf = estimate_correction_factors(&counts).unwrap();
        assert_close(cf.first_male(), 1.0, 1e-15);
        assert_close(cf.first_female(), 1.0, 1e-15);
        assert_close(cf.second_male(), 1.0, 1e-15);
        assert_close(cf.second_female(), 1.0, 1e-15);
    }

    #[test]
    fn correction_factors_name_the_missing_ratio() {
        let err = estimate_correction_factors(&counts_of(&[("MF", 3), ("FF", 2), ("FFM", 1)]))
            .unwrap_err();
        assert!(err.to_string().contains("both male"));
        let err = estimate_correction_factors(&counts_of(&[("MM", 3), ("MF", 2)])).unwrap_err();
        assert!(err.to_string().contains("both female"));
        let err =
            estimate_correction_factors(&counts_of(&[("MM", 3), ("FF", 3), ("MF", 2)]))
                .unwrap_err();
        assert!(err.to_string().contains("at least 3 children"));
    }

    // === observed_same_sex_proportion ===

    #[test]
    fn observed_proportion_matches_the_hand_count() {
        let counts = eight_pattern_counts();
        let p3 = observed_same_sex_proportion(&counts, 3, SizeCondition::AtLeastThree).unwrap();
        assert_close(p3, 3.0 / 5.0, 1e-15);
        let p2 = observed_same_sex_proportion(&counts, 2, SizeCondition::AtLeastThree).unwrap();
        assert!(p2 >= p3, "two-same is implied by three-same");
    }

    #[test]
    fn observed_proportion_exactly_three_stratum() {
        let counts = counts_of(&[("MMM", 1), ("MFM", 1)]);
        let p = observed_same_sex_proportion(&counts, 3, SizeCondition::ExactlyThree).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn observed_proportion_rejects_other_k_and_empty_strata() {
        let counts = eight_pattern_counts();
        assert!(observed_same_sex_proportion(&counts, 4, SizeCondition::AtLeastThree).is_err());
        let two_only = counts_of(&[("MM", 3)]);
        let err = observed_same_sex_proportion(&two_only, 3, SizeCondition::AtLeastThree)
            .unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }

    // === scale invariance ===

    #[test]
    fn estimates_are_invariant_under_count_scaling() {
        let base = eight_pattern_counts();
        let scaled: AggregateCounts =
            base.iter().map(|(p, c)| (p.clone(), c * 7)).collect();
        assert_eq!(
            estimate_sex_distribution(&base).unwrap(),
            estimate_sex_distribution(&scaled).unwrap()
        );
        assert_eq!(
            estimate_continuation(&base).unwrap(),
            estimate_continuation(&scaled).unwrap()
        );
        assert_eq!(
            estimate_correction_factors(&base).unwrap(),
            estimate_correction_factors(&scaled).unwrap()
        );
    }

    // === consistency against the enumeration oracle ===

    #[test]
    fn estimators_recover_parameters_from_expected_counts() {
        let sex = SexDistribution::new(0.5164).unwrap();
        let policy = ContinuationPolicy::mixed_preference(
            0.9,
            0.426,
            0.354,
            TailRule::Constant(0.2),
            5,
        )
        .unwrap();
        let dist = enumerate_distribution(sex, &policy).unwrap();
        let counts = dist.expected_counts((1u64 << 40) as f64).unwrap();

        let sex_hat = estimate_sex_distribution(&counts).unwrap();
        assert_close(sex_hat.p_male(), 0.5164, 1e-9);

        let c = estimate_continuation(&counts).unwrap();
        assert_close(c.same_sex, 0.426, 1e-9);
        assert_close(c.mixed_sex, 0.354, 1e-9);

        let cf_hat = estimate_correction_factors(&counts).unwrap();
        let cf_exact = correction_factors_from_policy(sex, &policy).unwrap();
        assert_close(cf_hat.first_male(), cf_exact.first_male(), 1e-9);
        assert_close(cf_hat.first_female(), cf_exact.first_female(), 1e-9);
        assert_close(cf_hat.second_male(), cf_exact.second_male(), 1e-9);
        assert_close(cf_hat.second_female(), cf_exact.second_female(), 1e-9);

        let observed =
            observed_same_sex_proportion(&counts, 3, SizeCondition::AtLeastThree).unwrap();
        let oracle = event_probability(
            &dist,
            &PatternEvent::FirstKSameSex(3),
            &PatternEvent::LengthAtLeast(3),
        )
        .unwrap();
        assert_close(observed, oracle, 1e-9);
    }

    #[test]
    fn history_independent_counts_report_no_inflation() {
        let sex = SexDistribution::new(0.5164).unwrap();
        let policy = ContinuationPolicy::constant(0.4, 5).unwrap();
        let dist = enumerate_distribution(sex, &policy).unwrap();
        let counts = dist.expected_counts((1u64 << 40) as f64).unwrap();
        let report = build_report(&counts).unwrap();
        assert_close(report.inflation, 1.0, 1e-9);
        assert_close(report.predicted_same3, report.observed_same3, 1e-9);
    }

    // === build_report ===

    /// One million families whose component proportions reproduce the
    /// published pipeline's intermediate ratios to four digits.
    fn reportlike_counts() -> AggregateCounts {
        counts_of(&[
            ("MM", 148_572),
            ("MMM", 57_541),
            ("MMF", 53_887),
            ("MF", 170_128),
            ("MFM", 47_660),
            ("MFF", 44_632),
            ("FM", 143_958),
            ("FMM", 74_676),
            ("FMF", 3_418),
            ("FF", 147_342),
            ("FFM", 55_867),
            ("FFF", 52_319),
        ])
    }

    #[test]
    fn report_reproduces_the_published_pipeline_numbers() {
        let report = build_report(&reportlike_counts()).unwrap();
        assert_close(report.sex.p_male(), 0.5164, 1e-12);
        assert_close(report.continuation.same_sex, 0.426, 5e-4);
        assert_close(report.continuation.unconditional, 0.390, 1e-12);
        assert_close(report.correction_factors.first_male(), 1.0117, 1e-3);
        assert_close(report.correction_factors.first_female(), 0.9876, 1e-3);
        assert_close(report.correction_factors.second_male(), 1.0989, 1e-3);
        assert_close(report.correction_factors.second_female(), 1.0856, 1e-3);
        assert_close(report.predicted_same3, 0.2743, 1e-4);
        assert_close(report.binomial_same3, 0.2508, 1e-4);
        assert_close(report.inflation, 1.094, 1e-3);
        assert_eq!(report.families_ge2, 1_000_000);
        assert_eq!(report.families_ge3, 390_000);
        assert!(report.predicted_warning.is_none());
    }

    #[test]
    fn report_identities_hold_exactly() {
        let report = build_report(&reportlike_counts()).unwrap();
        // Recomputation identity: the prediction is the Theorem 1 plug-in of
        // the report's own estimates.
        let recomputed = theorem1_probability(report.sex, report.correction_factors);
        assert_eq!(report.predicted_same3, recomputed.value);
        // Report identity: inflation × binomial = predicted.
        assert_close(
            report.inflation * report.binomial_same3,
            report.predicted_same3,
            1e-15,
        );
    }

    #[test]
    fn report_on_empty_counts_is_an_error() {
        assert!(matches!(
            build_report(&AggregateCounts::new()),
            Err(Error::InsufficientData(_))
        ));
    }
}
