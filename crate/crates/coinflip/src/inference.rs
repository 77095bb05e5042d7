//! Chi-square inference: the two-cell Pearson proportion test and the
//! order-respecting sequential tests, plus the underlying chi-square CDF.
//!
//! The sequential tests condition each birth only on the history before it,
//! so a genuine coin-toss mechanism cannot be rejected no matter how
//! families decide to stop: for every k they pool the kth births of families
//! with at least k children whose first k−1 children share a sex, and test
//! the next-birth sex fraction against the estimated birth rates.
//!
//! Tests are two-sided Pearson chi-square on two cells without a continuity
//! correction (plain Pearson is the default reading, and at the sample sizes
//! involved the correction is immaterial).

use crate::error::{Error, Result};
use crate::model::{AggregateCounts, Sex, SexDistribution};

/// Outcome of a single two-sided 1-df proportion test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    /// Pearson chi-square statistic.
    pub statistic: f64,
    /// Degrees of freedom (1 for every test here).
    pub df: u32,
    /// Two-sided p-value, 1 − chi2_cdf(statistic, df).
    pub p_value: f64,
    /// Observed success proportion.
    pub observed_prop: f64,
    /// Null success proportion.
    pub null_prop: f64,
    /// Number of trials pooled into the test.
    pub n: u64,
}

// === chi-square CDF ===

/// Lanczos approximation (g = 7, 9 terms) for ln Γ; relative error well
/// under 1e-13 on the positive half-line.
fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEFFICIENTS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula; the CDF only needs x ≥ 0.5 but totality is cheap.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFICIENTS[0];
    for (i, &c) in COEFFICIENTS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Lower regularized incomplete gamma P(a, z) by its power series; converges
/// fast for z ≲ a + 1.
fn lower_gamma_series(a: f64, z: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut denom = a;
    for _ in 0..500 {
        denom += 1.0;
        term *= z / denom;
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (a * z.ln() - z - ln_gamma(a)).exp()
}

/// Upper regularized incomplete gamma Q(a, z) by Lentz's modified continued
/// fraction; converges fast for z ≳ a + 1.
fn upper_gamma_continued_fraction(a: f64, z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (a * z.ln() - z - ln_gamma(a)).exp() * h
}

/// CDF of the chi-square distribution with `df` degrees of freedom:
/// the regularized lower incomplete gamma P(df/2, x/2), absolute error
/// ≤ 1e-10. The series branch is used for x < df + 1, the continued
/// fraction beyond.
pub fn chi2_cdf(x: f64, df: u32) -> Result<f64> {
    if df == 0 {
        return Err(Error::InvalidParameter(
            "chi-square degrees of freedom must be at least 1".into(),
        ));
    }
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!(
            "chi-square CDF requires finite x ≥ 0, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let a = df as f64 / 2.0;
    let z = x / 2.0;
    let p = if x < df as f64 + 1.0 {
        lower_gamma_series(a, z)
    } else {
        1.0 - upper_gamma_continued_fraction(a, z)
    };
    Ok(p.clamp(0.0, 1.0))
}

// === Pearson proportion test ===

/// Two-sided Pearson chi-square test of `successes/n` against the null
/// proportion `p0`: statistic (x − n·p0)² / (n·p0·(1 − p0)) on 1 df, no
/// continuity correction.
pub fn proportion_chi2_test(successes: u64, n: u64, p0: f64) -> Result<TestResult> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "the proportion test needs at least one trial".into(),
        ));
    }
    if successes > n {
        return Err(Error::InvalidParameter(format!(
            "successes ({successes}) cannot exceed trials ({n})"
        )));
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::DegenerateNull(p0));
    }
    let n_f = n as f64;
    let expected = n_f * p0;
    let diff = successes as f64 - expected;
    let statistic = diff * diff / (expected * (1.0 - p0));
    let p_value = 1.0 - chi2_cdf(statistic, 1)?;
    Ok(TestResult {
        statistic,
        df: 1,
        p_value,
        observed_prop: successes as f64 / n_f,
        null_prop: p0,
        n,
    })
}

// === order-respecting sequential tests ===

/// Tallies, over k ≥ 3, the kth births in families with at least k children
/// whose first k−1 children are all `run_sex`; a success is a kth birth of
/// `success_sex`.
fn tally_runs(
    counts: &AggregateCounts,
    run_sex: Sex,
    success_sex: Sex,
) -> (u64, u64) {
    let mut instances: u64 = 0;
    let mut successes: u64 = 0;
    for (pattern, count) in counts.iter() {
        let children = pattern.children();
        for k in 3..=children.len() {
            if children[..k - 1].iter().all(|&s| s == run_sex) {
                instances += count;
                if children[k - 1] == success_sex {
                    successes += count;
                }
            }
        }
    }
    (instances, successes)
}

/// The two order-respecting tests: for each sex, pool every birth that
/// follows an unbroken run of that sex (k = 3 up to the longest observed
/// family, each family contributing one instance per qualifying k) and test
/// the fraction of next births of the same sex against p̂ for that sex.
pub fn sequential_same_sex_tests(
    counts: &AggregateCounts,
    sex_dist: SexDistribution,
) -> Result<(TestResult, TestResult)> {
    let (male_n, male_x) = tally_runs(counts, Sex::Male, Sex::Male);
    let (female_n, female_x) = tally_runs(counts, Sex::Female, Sex::Female);
    if male_n == 0 {
        return Err(Error::InsufficientData(
            "no births following an all-male run (male stratum empty)".into(),
        ));
    }
    if female_n == 0 {
        return Err(Error::InsufficientData(
            "no births following an all-female run (female stratum empty)".into(),
        ));
    }
    let male = proportion_chi2_test(male_x, male_n, sex_dist.p_male())?;
    let female = proportion_chi2_test(female_x, female_n, sex_dist.p_female())?;
    Ok((male, female))
}

/// Null proportion for the combined sequence test: with `female_share` f of
/// qualifying instances following an all-female run, a coin-toss mechanism
/// continues the run with probability p̂_F·f + p̂_M·(1 − f).
pub fn combined_null_proportion(sex_dist: SexDistribution, female_share: f64) -> f64 {
    debug_assert!(
        (0.0..=1.0).contains(&female_share),
        "female_share is a fraction of instances"
    );
    sex_dist.p_female() * female_share + sex_dist.p_male() * (1.0 - female_share)
}

/// The combined order-respecting test: pools both sexes' run-continuation
/// instances and tests the observed same-sex continuation fraction against
/// [`combined_null_proportion`].
pub fn combined_sequence_test(
    counts: &AggregateCounts,
    sex_dist: SexDistribution,
) -> Result<TestResult> {
    let mut instances: u64 = 0;
    let mut female_runs: u64 = 0;
    let mut same_sex_next: u64 = 0;
    for (pattern, count) in counts.iter() {
        let children = pattern.children();
        for k in 3..=children.len() {
            let run = children[0];
            if children[1..k - 1].iter().all(|&s| s == run) {
                instances += count;
                if run == Sex::Female {
                    female_runs += count;
                }
                if children[k - 1] == run {
                    same_sex_next += count;
                }
            }
        }
    }
    if instances == 0 {
        return Err(Error::InsufficientData(
            "no births following a same-sex run (combined stratum empty)".into(),
        ));
    }
    let female_share = female_runs as f64 / instances as f64;
    let p0 = combined_null_proportion(sex_dist, female_share);
    proportion_chi2_test(same_sex_next, instances, p0)
}
