//! Exact analytics: closed forms for the size-conditioning identities and an
//! enumeration oracle that validates them under arbitrary stopping policies.
//!
//! The central results, stated over the model of [`crate::model`] (i.i.d. sex
//! at birth, history-dependent stopping, family size N):
//!
//! * **Theorem 1** — P(first three children same sex | N ≥ 3) =
//!   p_M³·first_male·second_male + p_F³·first_female·second_female, where the
//!   four factors are the [`CorrectionFactors`] ratios. It holds for *any*
//!   stopping rule.
//! * **Corollary 1** — under a rule where the third-child decision depends on
//!   the first two sexes only through p_S/p_D (and the second-child decision
//!   not at all), the probability collapses to (p_M³+p_F³) times an
//!   *inflation factor* that exceeds 1 exactly when p_S > p_D.
//! * **Theorem 2** — the analogous identity for the first two children
//!   ignoring the third: (p_M²+p_F²) times the same inflation factor.
//! * The **exactly-three** variant — conditioning on N = 3 instead of N ≥ 3
//!   multiplies each Theorem 1 term by a caller-supplied third factor
//!   P(N=3 | N≥3, same-sex triple of that sex) / P(N=3 | N≥3).
//!
//! [`enumerate_distribution`] computes the model's joint distribution over
//! completed families exactly, so every identity can be checked against
//! brute-force conditional probabilities rather than re-derived.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{
    AggregateCounts, ContinuationPolicy, CorrectionFactors, Sex, SexDistribution, SexPattern,
};
use crate::numeric::CompensatedSum;

/// Enumeration guard: a cap of L admits 2^(L+1)-2 patterns, so 20 keeps the
/// oracle comfortably under ~2M entries.
pub const MAX_ENUMERABLE_CHILDREN: usize = 20;

/// Predicate over completed family patterns: prefix properties plus length
/// constraints, closed under conjunction. One small language covers every
/// conditioning event used by the identities and the tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternEvent {
    /// Every completed family.
    Any,
    /// The first `k` children all share a sex (implies at least `k` children).
    FirstKSameSex(usize),
    /// The family has at least `n` children.
    LengthAtLeast(usize),
    /// The family has exactly `n` children.
    LengthExactly(usize),
    /// The first child has the given sex.
    FirstChildIs(Sex),
    /// Both sub-events hold.
    Both(Box<PatternEvent>, Box<PatternEvent>),
}

impl PatternEvent {
    /// Conjunction of two events.
    pub fn both(a: PatternEvent, b: PatternEvent) -> PatternEvent {
        PatternEvent::Both(Box::new(a), Box::new(b))
    }

    /// Whether the event holds for a completed pattern.
    pub fn holds_for(&self, p: &SexPattern) -> bool {
        match self {
            PatternEvent::Any => true,
            PatternEvent::FirstKSameSex(k) => {
                *k == 0
                    || (p.len() >= *k
                        && p.is_same_sex_prefix(*k).expect("length checked before asking"))
            }
            PatternEvent::LengthAtLeast(n) => p.len() >= *n,
            PatternEvent::LengthExactly(n) => p.len() == *n,
            PatternEvent::FirstChildIs(sex) => p.child(0) == Some(*sex),
            PatternEvent::Both(a, b) => a.holds_for(p) && b.holds_for(p),
        }
    }
}

impl fmt::Display for PatternEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternEvent::Any => write!(f, "any family"),
            PatternEvent::FirstKSameSex(k) => write!(f, "first {k} children same sex"),
            PatternEvent::LengthAtLeast(n) => write!(f, "at least {n} children"),
            PatternEvent::LengthExactly(n) => write!(f, "exactly {n} children"),
            PatternEvent::FirstChildIs(Sex::Male) => write!(f, "first child male"),
            PatternEvent::FirstChildIs(Sex::Female) => write!(f, "first child female"),
            PatternEvent::Both(a, b) => write!(f, "{a} and {b}"),
        }
    }
}

/// Exact joint distribution over completed family patterns induced by a
/// [`SexDistribution`] and a [`ContinuationPolicy`]. Includes mass for
/// families stopping after one child whenever the policy allows it.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternDistribution {
    probabilities: BTreeMap<SexPattern, f64>,
}

impl PatternDistribution {
    /// Probability of one completed pattern (0 if it cannot occur).
    pub fn probability(&self, pattern: &SexPattern) -> f64 {
        self.probabilities.get(pattern).copied().unwrap_or(0.0)
    }

    /// Iterates `(pattern, probability)` in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&SexPattern, f64)> {
        self.probabilities.iter().map(|(p, &q)| (p, q))
    }

    /// Number of patterns with positive probability.
    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    /// True if no pattern has positive probability.
    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// Total probability mass (compensated sum; 1 within 1e-12 by
    /// construction).
    pub fn total_mass(&self) -> f64 {
        let mut sum = CompensatedSum::new();
        for (_, q) in self.iter() {
            sum.add(q);
        }
        sum.value()
    }

    /// Expected family counts at the given scale, rounded to the nearest
    /// integer — sampling-noise-free data for estimator consistency checks.
    ///
    /// Families with fewer than 2 children are dropped: the count data
    /// universe is families with 2 or more. Patterns whose expected count
    /// rounds to 0 are omitted.
    pub fn expected_counts(&self, scale: f64) -> Result<AggregateCounts> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "expected-count scale must be positive and finite, got {scale}"
            )));
        }
        let mut counts = AggregateCounts::new();
        for (pattern, q) in self.iter() {
            if pattern.len() < 2 {
                continue;
            }
            let expected = (q * scale).round();
            if expected >= 1.0 {
                counts.insert(pattern.clone(), expected as u64)?;
            }
        }
        Ok(counts)
    }
}

/// Enumerates the exact distribution over completed patterns:
/// P(s of length n) = Π sex(s_i) × Π_{k<n} rule(s_{1..k}) × (1 − rule(s_{1..n})),
/// with the rule forced to 0 at the policy's cap.
///
/// Zero-probability patterns are omitted. Errors if the cap exceeds
/// [`MAX_ENUMERABLE_CHILDREN`].
pub fn enumerate_distribution(
    sex: SexDistribution,
    policy: &ContinuationPolicy,
) -> Result<PatternDistribution> {
    let cap = policy.max_children();
    if cap > MAX_ENUMERABLE_CHILDREN {
        return Err(Error::EnumerationTooLarge {
            max_children: cap,
            limit: MAX_ENUMERABLE_CHILDREN,
        });
    }
    let mut probabilities = BTreeMap::new();
    let mut prefix = SexPattern::empty();
    extend_families(sex, policy, &mut prefix, 1.0, &mut probabilities);
    Ok(PatternDistribution { probabilities })
}

/// Depth-first extension: `reach_probability` is the probability of having
/// exactly these children so far *and* having decided to continue at every
/// earlier parity.
fn extend_families(
    sex: SexDistribution,
    policy: &ContinuationPolicy,
    prefix: &mut SexPattern,
    reach_probability: f64,
    out: &mut BTreeMap<SexPattern, f64>,
) {
    for child in [Sex::Male, Sex::Female] {
        let born = reach_probability * sex.probability_of(child);
        if born <= 0.0 {
            continue;
        }
        prefix.push(child);
        let continue_q = policy.continuation_probability(prefix);
        let stopped = born * (1.0 - continue_q);
        if stopped > 0.0 {
            out.insert(prefix.clone(), stopped);
        }
        if continue_q > 0.0 {
            extend_families(sex, policy, prefix, born * continue_q, out);
        }
        prefix.pop();
    }
}

/// Conditional probability P(event | given) under the distribution.
///
/// Errors with a conditioning-on-null diagnostic when the conditioning event
/// has probability 0.
pub fn event_probability(
    dist: &PatternDistribution,
    event: &PatternEvent,
    given: &PatternEvent,
) -> Result<f64> {
    let mut joint = CompensatedSum::new();
    let mut margin = CompensatedSum::new();
    for (pattern, q) in dist.iter() {
        if given.holds_for(pattern) {
            margin.add(q);
            if event.holds_for(pattern) {
                joint.add(q);
            }
        }
    }
    let margin = margin.value();
    if margin <= 0.0 {
        return Err(Error::ConditioningOnNull(format!(
            "conditioning event \"{given}\" has probability 0 under this distribution"
        )));
    }
    Ok(joint.value() / margin)
}

/// The four Theorem 1 ratios computed exactly from the model itself (rather
/// than from data): first factors P(first child of that sex | N≥2) / p_sex,
/// second factors P(N≥3 | N≥2, first two that sex) / P(N≥3 | N≥2).
pub fn correction_factors_from_policy(
    sex: SexDistribution,
    policy: &ContinuationPolicy,
) -> Result<CorrectionFactors> {
    let dist = enumerate_distribution(sex, policy)?;
    let ge2 = PatternEvent::LengthAtLeast(2);
    let ge3 = PatternEvent::LengthAtLeast(3);
    let first_m = PatternEvent::FirstChildIs(Sex::Male);
    let first_f = PatternEvent::FirstChildIs(Sex::Female);
    let first_two_mm = PatternEvent::both(PatternEvent::FirstKSameSex(2), first_m.clone());
    let first_two_ff = PatternEvent::both(PatternEvent::FirstKSameSex(2), first_f.clone());

    let first_male = event_probability(&dist, &first_m, &ge2)? / sex.p_male();
    let first_female = event_probability(&dist, &first_f, &ge2)? / sex.p_female();
    let ge3_given_ge2 = event_probability(&dist, &ge3, &ge2)?;
    if ge3_given_ge2 <= 0.0 {
        return Err(Error::ConditioningOnNull(format!(
            "conditioning event \"{ge3}\" has probability 0 under this distribution"
        )));
    }
    let second_male = event_probability(&dist, &ge3, &first_two_mm)? / ge3_given_ge2;
    let second_female = event_probability(&dist, &ge3, &first_two_ff)? / ge3_given_ge2;
    CorrectionFactors::new(first_male, first_female, second_male, second_female)
}

/// A plug-in evaluation that is an identity only for internally consistent
/// inputs: the value is never clamped, and a diagnostic is attached when it
/// falls outside [0, 1] (silent clamping would hide data-entry errors).
#[derive(Debug, Clone, PartialEq)]
pub struct PluginProbability {
    pub value: f64,
    pub warning: Option<String>,
}

fn plugin(value: f64) -> PluginProbability {
    let warning = if (0.0..=1.0).contains(&value) {
        None
    } else {
        Some(format!(
            "plug-in value {value} lies outside [0, 1]; the sex distribution and \
             correction factors are not internally consistent"
        ))
    };
    PluginProbability { value, warning }
}

/// The two per-sex Theorem 1 terms, shared/reused so that the exactly-three
/// variant with unit third factors reproduces Theorem 1 bit-for-bit.
fn same_sex_run_terms(sex: SexDistribution, cf: CorrectionFactors) -> (f64, f64) {
    let pm = sex.p_male();
    let pf = sex.p_female();
    let male = pm * pm * pm * cf.first_male() * cf.second_male();
    let female = pf * pf * pf * cf.first_female() * cf.second_female();
    (male, female)
}

/// Theorem 1: P(first three same sex | N ≥ 3) =
/// p_M³·first_male·second_male + p_F³·first_female·second_female.
///
/// Valid for arbitrary stopping rules when the factors come from the same
/// model or data as the sex distribution.
pub fn theorem1_probability(sex: SexDistribution, cf: CorrectionFactors) -> PluginProbability {
    let (male, female) = same_sex_run_terms(sex, cf);
    plugin(male + female)
}

/// The exactly-three variant: each Theorem 1 term additionally multiplied by
/// a caller-supplied factor P(N=3 | N≥3, same-sex triple of that sex) /
/// P(N=3 | N≥3). With both factors 1 this is exactly Theorem 1.
pub fn exactly_three_probability(
    sex: SexDistribution,
    cf: CorrectionFactors,
    third_factor_male: f64,
    third_factor_female: f64,
) -> Result<PluginProbability> {
    for (value, name) in [
        (third_factor_male, "third_factor_male"),
        (third_factor_female, "third_factor_female"),
    ] {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "{name} must be strictly positive and finite, got {value}"
            )));
        }
    }
    let (male, female) = same_sex_run_terms(sex, cf);
    Ok(plugin(male * third_factor_male + female * third_factor_female))
}

/// Corollary 1's inflation factor 1 / (2·p_F·p_M·(p_D/p_S) + p_F² + p_M²).
///
/// The denominator is computed as 1 − 2·p_M·p_F·(1 − p_D/p_S) — algebraically
/// identical given p_M + p_F = 1, and it makes the no-preference case
/// p_S = p_D yield exactly 1.0 in floating point.
pub fn corollary1_inflation(sex: SexDistribution, p_same: f64, p_mixed: f64) -> Result<f64> {
    for (value, name) in [(p_same, "p_S"), (p_mixed, "p_D")] {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidParameter(format!(
                "{name} must lie in [0, 1], got {value}"
            )));
        }
    }
    if p_same == 0.0 {
        return Err(Error::Domain(
            "the inflation factor requires p_S > 0 (its denominator divides by p_S)".into(),
        ));
    }
    let ratio = p_mixed / p_same;
    Ok(1.0 / (1.0 - 2.0 * sex.p_male() * sex.p_female() * (1.0 - ratio)))
}

/// Corollary 1: P(first three same sex | N ≥ 3) = (p_M³ + p_F³) × inflation,
/// under a second-child decision independent of the first sex and a
/// third-child decision through p_S/p_D only.
pub fn corollary1_probability(sex: SexDistribution, p_same: f64, p_mixed: f64) -> Result<f64> {
    let pm = sex.p_male();
    let pf = sex.p_female();
    Ok((pm * pm * pm + pf * pf * pf) * corollary1_inflation(sex, p_same, p_mixed)?)
}

/// Theorem 2: P(first two same sex | N ≥ 3) = (p_M² + p_F²) × inflation —
/// the same inflation factor, applied to the two-child event with the third
/// child's sex ignored. Strictly exceeds [`corollary1_probability`] for
/// 0 < p_M < 1.
pub fn theorem2_probability(sex: SexDistribution, p_same: f64, p_mixed: f64) -> Result<f64> {
    let pm = sex.p_male();
    let pf = sex.p_female();
    Ok((pm * pm + pf * pf) * corollary1_inflation(sex, p_same, p_mixed)?)
}
