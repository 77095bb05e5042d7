//! Domain types for the generative family model.
//!
//! Each child's sex is an i.i.d. draw ([`SexDistribution`]); after every
//! birth the family decides whether to have another child with a probability
//! that may depend on the sexes so far ([`ContinuationPolicy`]). A family
//! that stops leaves a completed [`SexPattern`]; observed data arrive as
//! [`AggregateCounts`] of completed patterns. [`CorrectionFactors`] hold the
//! four ratios by which conditioning on family size rescales same-sex-run
//! probabilities relative to the plain binomial benchmark.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default hard cap on family size: the deepest published analyses pool
/// families with 3, 4, and 5 children.
pub const DEFAULT_MAX_CHILDREN: usize = 5;

/// Sex of one child.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sex {
    Male,
    Female,
}

impl Sex {
    /// Parses `'M'` or `'F'`.
    pub fn from_char(c: char) -> Option<Sex> {
        match c {
            'M' => Some(Sex::Male),
            'F' => Some(Sex::Female),
            _ => None,
        }
    }

    /// The single-letter code used in pattern strings.
    pub fn to_char(self) -> char {
        match self {
            Sex::Male => 'M',
            Sex::Female => 'F',
        }
    }

    /// The other sex (used by relabeling symmetry checks).
    pub fn other(self) -> Sex {
        match self {
            Sex::Male => Sex::Female,
            Sex::Female => Sex::Male,
        }
    }
}

/// A sequence of child sexes, oldest first.
///
/// Read as a completed family it records every child the family had; read as
/// a prefix it records the children "so far" when a continuation decision is
/// made. Ordering is lexicographic with `M < F` and prefixes sorting first,
/// which fixes the canonical serialization order everywhere.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SexPattern(Vec<Sex>);

impl SexPattern {
    /// Pattern from an explicit child list.
    pub fn new(children: Vec<Sex>) -> Self {
        SexPattern(children)
    }

    /// The empty pattern (no children yet).
    pub fn empty() -> Self {
        SexPattern(Vec::new())
    }

    /// Number of children.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True if there are no children.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The children, oldest first.
    pub fn children(&self) -> &[Sex] {
        &self.0
    }

    /// Sex of the `i`-th child (0-based), if present.
    pub fn child(&self, i: usize) -> Option<Sex> {
        self.0.get(i).copied()
    }

    /// Appends a birth (building a family incrementally).
    pub fn push(&mut self, sex: Sex) {
        self.0.push(sex);
    }

    /// Removes the most recent birth (backtracking during enumeration).
    pub fn pop(&mut self) -> Option<Sex> {
        self.0.pop()
    }

    /// Removes all children, keeping the allocation.
    pub fn clear(&mut self) {
        self.0.clear();
    }

    /// True iff the first `k` children all have the same sex.
    ///
    /// Errors if `k` is zero or the pattern has fewer than `k` children:
    /// the question is not meaningful for unrealized births.
    pub fn is_same_sex_prefix(&self, k: usize) -> Result<bool> {
        if k == 0 {
            return Err(Error::InvalidParameter(
                "same-sex prefix length k must be at least 1".into(),
            ));
        }
        if self.0.len() < k {
            return Err(Error::PatternTooShort { len: self.0.len(), needed: k });
        }
        Ok(self.0[1..k].iter().all(|&s| s == self.0[0]))
    }

    /// The pattern with every `M` and `F` swapped.
    pub fn relabeled(&self) -> SexPattern {
        SexPattern(self.0.iter().map(|s| s.other()).collect())
    }
}

impl fmt::Display for SexPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for SexPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut children = Vec::with_capacity(s.len());
        for c in s.chars() {
            match Sex::from_char(c) {
                Some(sex) => children.push(sex),
                None => {
                    return Err(Error::InvalidParameter(format!(
                        "pattern {s:?} contains {c:?}; only 'M' and 'F' are allowed"
                    )))
                }
            }
        }
        Ok(SexPattern(children))
    }
}

/// True iff the first `k` symbols of `p` are identical.
///
/// Free-function form of [`SexPattern::is_same_sex_prefix`].
pub fn pattern_is_same_sex_prefix(p: &SexPattern, k: usize) -> Result<bool> {
    p.is_same_sex_prefix(k)
}

/// The coin-toss parameters: probability of a male (and female) birth.
///
/// `p_female` is stored derived, so the two always sum to 1 exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SexDistribution {
    p_male: f64,
    p_female: f64,
}

impl SexDistribution {
    /// Distribution with the given male-birth probability.
    pub fn new(p_male: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_male) {
            return Err(Error::InvalidParameter(format!(
                "p_male must lie in [0, 1], got {p_male}"
            )));
        }
        Ok(SexDistribution { p_male, p_female: 1.0 - p_male })
    }

    /// Distribution from both probabilities, checked to sum to 1 within 1e-15.
    pub fn from_both(p_male: f64, p_female: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_male) || !(0.0..=1.0).contains(&p_female) {
            return Err(Error::InvalidParameter(format!(
                "sex probabilities must lie in [0, 1], got ({p_male}, {p_female})"
            )));
        }
        if (p_male + p_female - 1.0).abs() > 1e-15 {
            return Err(Error::InvalidParameter(format!(
                "sex probabilities must sum to 1 within 1e-15, got {p_male} + {p_female}"
            )));
        }
        Ok(SexDistribution { p_male, p_female })
    }

    /// The fair coin.
    pub fn fair() -> Self {
        SexDistribution { p_male: 0.5, p_female: 0.5 }
    }

    /// Probability of a male birth.
    pub fn p_male(&self) -> f64 {
        self.p_male
    }

    /// Probability of a female birth.
    pub fn p_female(&self) -> f64 {
        self.p_female
    }

    /// Probability of the given sex.
    pub fn probability_of(&self, sex: Sex) -> f64 {
        match sex {
            Sex::Male => self.p_male,
            Sex::Female => self.p_female,
        }
    }

    /// The distribution with male and female probabilities swapped.
    pub fn swapped(&self) -> Self {
        SexDistribution { p_male: self.p_female, p_female: self.p_male }
    }
}

/// Continuation behaviour at parities ≥ 3 for
/// [`ContinuationPolicy::mixed_preference`].
#[derive(Debug, Clone, PartialEq)]
pub enum TailRule {
    /// One history-independent continuation probability for every parity ≥ 3.
    Constant(f64),
    /// One `(same, mixed)` pair per parity starting at 3: if all children so
    /// far share a sex the family continues with the `same` probability,
    /// otherwise with `mixed`. Parities beyond the list stop (probability 0).
    PerParity(Vec<(f64, f64)>),
}

impl TailRule {
    /// Tail that never continues past the third child.
    pub fn none() -> Self {
        TailRule::Constant(0.0)
    }

    fn validate(&self) -> Result<()> {
        let check = |q: f64, what: &str| -> Result<()> {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidParameter(format!(
                    "{what} must lie in [0, 1], got {q}"
                )));
            }
            Ok(())
        };
        match self {
            TailRule::Constant(q) => check(*q, "tail continuation probability"),
            TailRule::PerParity(pairs) => {
                for (same, mixed) in pairs {
                    check(*same, "tail same-sex continuation probability")?;
                    check(*mixed, "tail mixed-sex continuation probability")?;
                }
                Ok(())
            }
        }
    }

    fn evaluate(&self, prefix: &SexPattern) -> f64 {
        match self {
            TailRule::Constant(q) => *q,
            TailRule::PerParity(pairs) => {
                // Parity p (p ≥ 3) decides child p+1; index 0 is parity 3.
                match pairs.get(prefix.len() - 3) {
                    Some(&(same, mixed)) => {
                        let all_same = prefix
                            .is_same_sex_prefix(prefix.len())
                            .expect("tail rule sees nonempty prefixes only");
                        if all_same {
                            same
                        } else {
                            mixed
                        }
                    }
                    None => 0.0,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Rule {
    Constant(f64),
    MixedPreference { second_child: f64, third_same: f64, third_mixed: f64, tail: TailRule },
    Table(BTreeMap<SexPattern, f64>),
}

/// History-dependent stopping rule: the probability of having another child
/// given the sexes so far, with a hard cap on family size.
///
/// The rule is a total mapping over nonempty prefixes; any prefix of length
/// `max_children` or more continues with probability 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationPolicy {
    max_children: usize,
    rule: Rule,
}

fn check_probability(q: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("{what} must lie in [0, 1], got {q}")));
    }
    Ok(())
}

fn check_cap(max_children: usize) -> Result<()> {
    if max_children == 0 {
        return Err(Error::InvalidParameter(
            "max_children must be at least 1 (every family has a first child)".into(),
        ));
    }
    Ok(())
}

impl ContinuationPolicy {
    /// History-independent continuation with probability `q` at every parity
    /// below the cap — the "binomial" null in which family size carries no
    /// information about the children's sexes.
    pub fn constant(q: f64, max_children: usize) -> Result<Self> {
        check_probability(q, "continuation probability")?;
        check_cap(max_children)?;
        Ok(ContinuationPolicy { max_children, rule: Rule::Constant(q) })
    }

    /// The mixed-sex-preference model: a second child with probability `q1`
    /// regardless of the first child's sex; a third child with probability
    /// `third_same` if the first two share a sex, `third_mixed` otherwise;
    /// later parities per `tail`.
    pub fn mixed_preference(
        q1: f64,
        third_same: f64,
        third_mixed: f64,
        tail: TailRule,
        max_children: usize,
    ) -> Result<Self> {
        check_probability(q1, "second-child probability q1")?;
        check_probability(third_same, "same-sex third-child probability")?;
        check_probability(third_mixed, "mixed-sex third-child probability")?;
        tail.validate()?;
        check_cap(max_children)?;
        Ok(ContinuationPolicy {
            max_children,
            rule: Rule::MixedPreference {
                second_child: q1,
                third_same,
                third_mixed,
                tail,
            },
        })
    }

    /// Fully general policy from an explicit prefix → probability table.
    /// Prefixes absent from the table stop (probability 0). The cap is
    /// inferred as one past the longest prefix in the table.
    pub fn table(map: BTreeMap<SexPattern, f64>) -> Result<Self> {
        let cap = map.keys().map(|p| p.len()).max().unwrap_or(0) + 1;
        Self::table_with_cap(map, cap)
    }

    /// Table policy with an explicit cap. Entries at or past the cap must
    /// carry probability 0 (they would contradict the cap otherwise).
    pub fn table_with_cap(map: BTreeMap<SexPattern, f64>, max_children: usize) -> Result<Self> {
        check_cap(max_children)?;
        for (prefix, q) in &map {
            if prefix.is_empty() {
                return Err(Error::InvalidParameter(
                    "policy table keys must be nonempty prefixes".into(),
                ));
            }
            check_probability(*q, &format!("continuation probability for prefix {prefix}"))?;
            if prefix.len() >= max_children && *q > 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "prefix {prefix} has length {} but the policy caps families at {} children",
                    prefix.len(),
                    max_children
                )));
            }
        }
        Ok(ContinuationPolicy { max_children, rule: Rule::Table(map) })
    }

    /// The hard cap on family size.
    pub fn max_children(&self) -> usize {
        self.max_children
    }

    /// Probability of having another child given the children so far.
    ///
    /// Pure: the same prefix always yields the same probability. Prefixes at
    /// or past the cap return 0. The prefix must be nonempty (there is no
    /// continuation decision before the first child).
    pub fn continuation_probability(&self, prefix: &SexPattern) -> f64 {
        assert!(!prefix.is_empty(), "continuation decisions start after the first child");
        if prefix.len() >= self.max_children {
            return 0.0;
        }
        match &self.rule {
            Rule::Constant(q) => *q,
            Rule::MixedPreference { second_child, third_same, third_mixed, tail } => {
                match prefix.len() {
                    1 => *second_child,
                    2 => {
                        if prefix.child(0) == prefix.child(1) {
                            *third_same
                        } else {
                            *third_mixed
                        }
                    }
                    _ => tail.evaluate(prefix),
                }
            }
            Rule::Table(map) => map.get(prefix).copied().unwrap_or(0.0),
        }
    }
}

/// Counts of completed sibling-sex patterns — the canonical raw form of the
/// published data. The data universe is families with at least 2 children,
/// so every stored pattern has length ≥ 2.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AggregateCounts {
    counts: BTreeMap<SexPattern, u64>,
}

impl AggregateCounts {
    /// Empty counts.
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a pattern with its count; rejects duplicates and patterns
    /// shorter than 2 children.
    pub fn insert(&mut self, pattern: SexPattern, count: u64) -> Result<()> {
        if pattern.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "pattern {pattern:?} has fewer than 2 children; the data universe \
                 is families with 2 or more"
            )));
        }
        if self.counts.contains_key(&pattern) {
            return Err(Error::DuplicatePattern(pattern.to_string()));
        }
        self.counts.insert(pattern, count);
        Ok(())
    }

    /// Adds one family with the given completed pattern (sampling path).
    pub fn record(&mut self, pattern: SexPattern) -> Result<()> {
        if pattern.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "pattern {pattern:?} has fewer than 2 children; the data universe \
                 is families with 2 or more"
            )));
        }
        *self.counts.entry(pattern).or_insert(0) += 1;
        Ok(())
    }

    /// Count recorded for a pattern (0 if absent).
    pub fn get(&self, pattern: &SexPattern) -> u64 {
        self.counts.get(pattern).copied().unwrap_or(0)
    }

    /// Iterates `(pattern, count)` in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&SexPattern, u64)> {
        self.counts.iter().map(|(p, &c)| (p, c))
    }

    /// True if no patterns are stored.
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Total number of families.
    pub fn total_families(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Number of families with at least `len` children.
    pub fn families_with_at_least(&self, len: usize) -> u64 {
        self.counts.iter().filter(|(p, _)| p.len() >= len).map(|(_, &c)| c).sum()
    }

    /// Length of the longest observed pattern (0 when empty).
    pub fn max_len(&self) -> usize {
        self.counts.keys().map(|p| p.len()).max().unwrap_or(0)
    }

    /// The counts with every `M` and `F` swapped (for symmetry checks).
    pub fn relabeled(&self) -> AggregateCounts {
        AggregateCounts {
            counts: self.counts.iter().map(|(p, &c)| (p.relabeled(), c)).collect(),
        }
    }
}

impl FromIterator<(SexPattern, u64)> for AggregateCounts {
    /// Builds counts from pairs, summing any repeated patterns.
    fn from_iter<I: IntoIterator<Item = (SexPattern, u64)>>(iter: I) -> Self {
        let mut counts = BTreeMap::new();
        for (p, c) in iter {
            *counts.entry(p).or_insert(0) += c;
        }
        AggregateCounts { counts }
    }
}

/// The four multiplicative ratios by which conditioning on family size
/// rescales first-three-same-sex probabilities relative to the binomial
/// benchmark: `P(N≥2|first M)/P(N≥2)`, its female analogue,
/// `P(N≥3|N≥2, first two MM)/P(N≥3|N≥2)`, and its female analogue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionFactors {
    first_male: f64,
    first_female: f64,
    second_male: f64,
    second_female: f64,
}

impl CorrectionFactors {
    /// Factors from the four ratios; each must be strictly positive and finite.
    pub fn new(
        first_male: f64,
        first_female: f64,
        second_male: f64,
        second_female: f64,
    ) -> Result<Self> {
        for (value, name) in [
            (first_male, "first_male"),
            (first_female, "first_female"),
            (second_male, "second_male"),
            (second_female, "second_female"),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "correction factor {name} must be strictly positive and finite, got {value}"
                )));
            }
        }
        Ok(CorrectionFactors { first_male, first_female, second_male, second_female })
    }

    /// All four factors equal to 1 — the history-independent case.
    pub fn identity() -> Self {
        CorrectionFactors { first_male: 1.0, first_female: 1.0, second_male: 1.0, second_female: 1.0 }
    }

    pub fn first_male(&self) -> f64 {
        self.first_male
    }

    pub fn first_female(&self) -> f64 {
        self.first_female
    }

    pub fn second_male(&self) -> f64 {
        self.second_male
    }

    pub fn second_female(&self) -> f64 {
        self.second_female
    }

    /// Factors with the male/female roles swapped.
    pub fn swapped(&self) -> Self {
        CorrectionFactors {
            first_male: self.first_female,
            first_female: self.first_male,
            second_male: self.second_female,
            second_female: self.second_male,
        }
    }
}
