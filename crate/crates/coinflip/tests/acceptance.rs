//! Acceptance suite: one test per shipping criterion, each printing a single
//! PASS/FAIL line (visible under `--nocapture`) before asserting.
//!
//! Run with:
//!
//! ```text
//! cargo test -p coinflip --test acceptance -- --nocapture
//! ```
//!
//! Criterion 1 carries a known-failing sub-check: the four-decimal target
//! 0.2743 sits 5.55e-5 away from the value the stated inputs actually
//! produce (0.27435551529346724, confirmed against the enumeration oracle
//! and independent arithmetic), so a 5e-5 tolerance around it cannot be met
//! by any correct implementation. The sub-check is kept at its stated
//! tolerance rather than silently widened; the other golden values in the
//! criterion pass.

use std::collections::BTreeMap;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coinflip::{
    build_report, chi2_cdf, combined_null_proportion, combined_sequence_test,
    corollary1_inflation, corollary1_probability, correction_factors_from_policy,
    enumerate_distribution, estimate_continuation, estimate_correction_factors,
    estimate_sex_distribution, event_probability, exactly_three_probability,
    proportion_chi2_test, sample_counts, sequential_same_sex_tests, theorem1_probability,
    theorem2_probability, ContinuationPolicy, CorrectionFactors, PatternEvent, Sex,
    SexDistribution, SexPattern, SweepConfig, TailRule,
};

fn report(criterion: &str, failures: Vec<String>) {
    if failures.is_empty() {
        println!("{criterion}: PASS");
    } else {
        println!("{criterion}: FAIL — {}", failures.join("; "));
    }
    assert!(failures.is_empty(), "{criterion}: {}", failures.join("; "));
}

fn check(failures: &mut Vec<String>, ok: bool, detail: impl FnOnce() -> String) {
    if !ok {
        failures.push(detail());
    }
}

fn sex(p_male: f64) -> SexDistribution {
    SexDistribution::new(p_male).unwrap()
}

// === criterion 1: plug-in golden values ===

#[test]
fn criterion_1_plugin_golden_values() {
    let mut failures = Vec::new();
    let d = sex(0.5164);
    let cf = CorrectionFactors::new(1.0117, 0.9876, 1.0989, 1.0856).unwrap();
    let predicted = theorem1_probability(d, cf).value;
    let binomial = 0.5164f64.powi(3) + 0.4836f64.powi(3);
    let inflation = predicted / binomial;
    check(&mut failures, (predicted - 0.2743).abs() <= 5e-5, || {
        format!(
            "plug-in probability {predicted:.10} misses the four-decimal target 0.2743 \
             by {:.2e} (> 5e-5); the stated inputs reproducibly yield this value, so \
             the target is the display rounding, kept failing by design",
            (predicted - 0.2743).abs()
        )
    });
    check(&mut failures, (binomial - 0.2508).abs() <= 5e-5, || {
        format!("binomial baseline {binomial:.10} not within 5e-5 of 0.2508")
    });
    check(&mut failures, (inflation - 1.094).abs() <= 1e-3, || {
        format!("inflation {inflation:.10} not within 1e-3 of 1.094")
    });
    report("criterion 1 (plug-in golden values)", failures);
}

// === criterion 2: closed forms vs the enumeration oracle ===

fn uniform_prob(rng: &mut ChaCha8Rng) -> f64 {
    0.05 + 0.9 * rng.random::<f64>()
}

fn pattern_from_bits(len: usize, bits: u32) -> SexPattern {
    SexPattern::new(
        (0..len)
            .map(|i| if bits >> i & 1 == 1 { Sex::Female } else { Sex::Male })
            .collect(),
    )
}

/// A table policy over every prefix shorter than 5 children. With
/// `two_parameter` the first two parities use the (q1, p_S, p_D) structure
/// required by the ratio closed forms; later parities stay arbitrary either
/// way, since behaviour beyond the third child cannot move the events under
/// test.
fn random_table_policy(
    rng: &mut ChaCha8Rng,
    two_parameter: bool,
) -> (ContinuationPolicy, f64, f64) {
    let q1 = uniform_prob(rng);
    let p_same = uniform_prob(rng);
    let p_mixed = uniform_prob(rng);
    let mut map = BTreeMap::new();
    for len in 1..=4usize {
        for bits in 0..(1u32 << len) {
            let pattern = pattern_from_bits(len, bits);
            let q = if two_parameter {
                match len {
                    1 => q1,
                    2 => {
                        if pattern.is_same_sex_prefix(2).unwrap() {
                            p_same
                        } else {
                            p_mixed
                        }
                    }
                    _ => uniform_prob(rng),
                }
            } else {
                uniform_prob(rng)
            };
            map.insert(pattern, q);
        }
    }
    (ContinuationPolicy::table_with_cap(map, 5).unwrap(), p_same, p_mixed)
}

#[test]
fn criterion_2_closed_forms_match_the_oracle() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0AC1E5);
    let first3same = PatternEvent::FirstKSameSex(3);
    let first2same = PatternEvent::FirstKSameSex(2);
    let ge3 = PatternEvent::LengthAtLeast(3);
    let eq3 = PatternEvent::LengthExactly(3);
    let tol = 1e-12;
    let mut worst_arbitrary = 0.0f64;
    let mut worst_two_parameter = 0.0f64;

    // Arbitrary history-dependent policies: the run-probability identity and
    // its exactly-three variant hold with no structural assumptions.
    for _ in 0..1000 {
        let d = sex(uniform_prob(&mut rng));
        let (policy, _, _) = random_table_policy(&mut rng, false);
        let dist = enumerate_distribution(d, &policy).unwrap();
        let cf = correction_factors_from_policy(d, &policy).unwrap();

        let closed = theorem1_probability(d, cf).value;
        let oracle = event_probability(&dist, &first3same, &ge3).unwrap();
        worst_arbitrary = worst_arbitrary.max((closed - oracle).abs());

        let p_eq3_m = event_probability(
            &dist,
            &eq3,
            &PatternEvent::both(first3same.clone(), PatternEvent::FirstChildIs(Sex::Male)),
        )
        .unwrap();
        let p_eq3_f = event_probability(
            &dist,
            &eq3,
            &PatternEvent::both(first3same.clone(), PatternEvent::FirstChildIs(Sex::Female)),
        )
        .unwrap();
        let p_eq3 = event_probability(&dist, &eq3, &ge3).unwrap();
        let closed_eq3 =
            exactly_three_probability(d, cf, p_eq3_m / p_eq3, p_eq3_f / p_eq3)
                .unwrap()
                .value;
        let oracle_eq3 = event_probability(&dist, &first3same, &eq3).unwrap();
        worst_arbitrary = worst_arbitrary.max((closed_eq3 - oracle_eq3).abs());
    }
    check(&mut failures, worst_arbitrary <= tol, || {
        format!(
            "arbitrary-policy closed forms deviate from the oracle by {worst_arbitrary:.3e} \
             (> {tol:.0e})"
        )
    });

    // Two-parameter policies (expressed as tables): the ratio closed forms.
    for _ in 0..1000 {
        let d = sex(uniform_prob(&mut rng));
        let (policy, p_same, p_mixed) = random_table_policy(&mut rng, true);
        let dist = enumerate_distribution(d, &policy).unwrap();
        let c1 = corollary1_probability(d, p_same, p_mixed).unwrap();
        let t2 = theorem2_probability(d, p_same, p_mixed).unwrap();
        let oracle_c1 = event_probability(&dist, &first3same, &ge3).unwrap();
        let oracle_t2 = event_probability(&dist, &first2same, &ge3).unwrap();
        worst_two_parameter = worst_two_parameter.max((c1 - oracle_c1).abs());
        worst_two_parameter = worst_two_parameter.max((t2 - oracle_t2).abs());
    }
    check(&mut failures, worst_two_parameter <= tol, || {
        format!(
            "two-parameter closed forms deviate from the oracle by \
             {worst_two_parameter:.3e} (> {tol:.0e})"
        )
    });
    report("criterion 2 (closed forms vs enumeration oracle)", failures);
}

// === criterion 3: inflation factor structure ===

#[test]
fn criterion_3_inflation_structure() {
    let mut failures = Vec::new();
    let pm_grid: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();

    for &pm in &pm_grid {
        let d = sex(pm);
        for &p in &[0.1, 0.354, 0.9] {
            let equal = corollary1_inflation(d, p, p).unwrap();
            check(&mut failures, equal == 1.0, || {
                format!("inflation at p_S = p_D = {p}, p_M = {pm} is {equal}, not exactly 1")
            });
        }
        let above = corollary1_inflation(d, 0.426, 0.354).unwrap();
        check(&mut failures, above > 1.0, || {
            format!("inflation {above} not above 1 at p_S > p_D, p_M = {pm}")
        });
    }
    for &pm in &[0.0, 1.0] {
        let degenerate = corollary1_inflation(sex(pm), 0.426, 0.354).unwrap();
        check(&mut failures, degenerate == 1.0, || {
            format!("inflation must collapse to 1 for a one-sex coin, got {degenerate}")
        });
    }

    // Strictly decreasing in p_D/p_S: sweep the ratio upward (so p_D/p_S
    // falls) over a 100-point grid and require strict growth.
    for &pm in &[0.2, 0.5, 0.5164, 0.8] {
        let d = sex(pm);
        let p_mixed = 0.354;
        let mut last = corollary1_inflation(d, p_mixed, p_mixed).unwrap();
        for i in 1..100 {
            let ratio = 1.0 + 0.5 * i as f64 / 99.0;
            let next = corollary1_inflation(d, ratio * p_mixed, p_mixed).unwrap();
            check(&mut failures, next > last, || {
                format!(
                    "inflation not strictly increasing in p_S/p_D at p_M = {pm}, \
                     ratio {ratio}: {next} ≤ {last}"
                )
            });
            last = next;
        }
    }
    report("criterion 3 (inflation factor structure)", failures);
}

// === criterion 4: sweep reproduces the closed form at scale ===

#[test]
fn criterion_4_sweep_tracks_theory_at_scale() {
    let mut failures = Vec::new();
    let d = sex(0.5164);
    let config = SweepConfig {
        sex: d,
        p_mixed: 0.354,
        ratio_grid: coinflip::default_ratio_grid(1.0, 1.5, 100).unwrap(),
        reps: 100,
        n_families: 58_007,
        master_seed: 58_007,
        band: (5.0, 95.0),
    };
    let summary = coinflip::run_sweep(&config).unwrap();

    let mut worst_gap = 0.0f64;
    for point in &summary.points {
        worst_gap = worst_gap.max((point.mean - point.theory).abs());
    }
    check(&mut failures, worst_gap < 0.003, || {
        format!("worst |mean − theory| over the grid is {worst_gap:.5} (≥ 0.003)")
    });

    let theory_at_observed = corollary1_probability(d, 1.205 * 0.354, 0.354).unwrap();
    check(&mut failures, (theory_at_observed - 0.2741).abs() <= 5e-4, || {
        format!("theory at ratio 1.205 is {theory_at_observed:.6}, not 0.2741 ± 5e-4")
    });

    let nearest = summary
        .points
        .iter()
        .min_by(|a, b| {
            (a.ratio - 1.205).abs().total_cmp(&(b.ratio - 1.205).abs())
        })
        .unwrap();
    let observed = 0.2751;
    check(
        &mut failures,
        nearest.band_low <= observed && observed <= nearest.band_high,
        || {
            format!(
                "observed point (1.205, {observed}) outside the (5,95) band \
                 [{:.6}, {:.6}] at grid ratio {:.6}",
                nearest.band_low, nearest.band_high, nearest.ratio
            )
        },
    );
    report("criterion 4 (sweep reproduces the closed form)", failures);
}

// === criterion 5: proportion chi-square golden ===

#[test]
fn criterion_5_proportion_test_golden() {
    let mut failures = Vec::new();
    // 22,623 ≈ 0.390 × 58,007 families with a third child; 6,224 of them
    // (proportion 0.2751) with a same-sex first triple, tested against the
    // predicted 0.2743.
    let result = proportion_chi2_test(6_224, 22_623, 0.2743).unwrap();
    check(&mut failures, result.df == 1, || format!("df {} ≠ 1", result.df));
    check(&mut failures, (result.p_value - 0.786).abs() <= 0.03, || {
        format!("p-value {:.6} not within 0.03 of 0.786", result.p_value)
    });
    check(
        &mut failures,
        result.p_value > 0.0 && result.p_value < 1.0,
        || format!("degenerate p-value {}", result.p_value),
    );
    report("criterion 5 (proportion chi-square golden)", failures);
}

// === criterion 6: chi-square CDF vs independent references ===

/// erf via composite Simpson quadrature of (2/√π)·e^(−u²) on [0, t] with
/// 20,000 panels: discretization error ≤ (t/180)·h⁴·max|f⁗| ≈ 1e-15 for
/// t ≤ 5, far below the comparison tolerance.
fn simpson_erf(t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let panels = 20_000usize;
    let h = t / panels as f64;
    let f = |u: f64| (-u * u).exp();
    let mut acc = f(0.0) + f(t);
    for i in 1..panels {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += weight * f(h * i as f64);
    }
    acc * h / 3.0 * 2.0 / std::f64::consts::PI.sqrt()
}

/// Pure power-series reference with closed-form Γ(df/2 + 1): no shared code
/// with the library implementation (which routes through a Lanczos
/// log-gamma and a continued fraction for large x).
fn series_chi2_cdf(x: f64, df: u32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let a = df as f64 / 2.0;
    let z = x / 2.0;
    let gamma_a_plus_1 = if df % 2 == 0 {
        (1..=u64::from(df / 2)).map(|k| k as f64).product()
    } else {
        let mut g = std::f64::consts::PI.sqrt();
        let mut factor = 0.5;
        for _ in 0..(df + 1) / 2 {
            g *= factor;
            factor += 1.0;
        }
        g
    };
    let mut term = 1.0 / gamma_a_plus_1;
    let mut sum = term;
    let mut k = 1.0;
    while term.abs() > sum.abs() * 1e-18 && k < 10_000.0 {
        term *= z / (a + k);
        sum += term;
        k += 1.0;
    }
    ((a * z.ln() - z).exp() * sum).clamp(0.0, 1.0)
}

#[test]
fn criterion_6_chi2_cdf_against_independent_references() {
    let mut failures = Vec::new();
    let mut worst_series = 0.0f64;
    let mut worst_erf = 0.0f64;
    for i in 0..=500 {
        let x = i as f64 * 0.1;
        let erf_reference = simpson_erf((x / 2.0).sqrt());
        worst_erf = worst_erf.max((chi2_cdf(x, 1).unwrap() - erf_reference).abs());
        for df in 1..=10 {
            let implementation = chi2_cdf(x, df).unwrap();
            let reference = series_chi2_cdf(x, df);
            worst_series = worst_series.max((implementation - reference).abs());
        }
    }
    check(&mut failures, worst_erf <= 1e-8, || {
        format!("df=1 deviation from the quadrature erf reference: {worst_erf:.3e} > 1e-8")
    });
    check(&mut failures, worst_series <= 1e-8, || {
        format!("df≤10 deviation from the series reference: {worst_series:.3e} > 1e-8")
    });
    report("criterion 6 (chi-square CDF vs independent references)", failures);
}

// === criterion 7: run tests — golden null proportion and null calibration ===

fn decile_deviation(p_values: &mut [f64]) -> f64 {
    p_values.sort_by(f64::total_cmp);
    let n = p_values.len() as f64;
    let mut worst = 0.0f64;
    for decile in 1..10 {
        let d = decile as f64 / 10.0;
        let below = p_values.iter().filter(|&&p| p <= d).count() as f64 / n;
        worst = worst.max((below - d).abs());
    }
    worst
}

#[test]
fn criterion_7_run_tests_null_behaviour() {
    let mut failures = Vec::new();

    let d = SexDistribution::from_both(0.5164, 0.4836).unwrap();
    let null_prop = combined_null_proportion(d, 0.4573);
    check(&mut failures, (null_prop - 0.5014).abs() <= 1e-4, || {
        format!("combined null proportion {null_prop:.6} not within 1e-4 of 0.5014")
    });

    // Null calibration: data generated from the coin-toss model (with a
    // strongly history-dependent stopping rule, which the order-respecting
    // tests must ignore) should give approximately uniform p-values.
    let gen_sex = sex(0.5164);
    let policy = ContinuationPolicy::mixed_preference(
        0.9,
        0.426,
        0.354,
        TailRule::Constant(0.2),
        5,
    )
    .unwrap();
    let seeds = 200u64;
    let mut male_ps = Vec::with_capacity(seeds as usize);
    let mut female_ps = Vec::with_capacity(seeds as usize);
    let mut combined_ps = Vec::with_capacity(seeds as usize);
    for seed in 0..seeds {
        let counts = sample_counts(gen_sex, &policy, 1_000_000, 7_000 + seed).unwrap();
        let estimated = estimate_sex_distribution(&counts).unwrap();
        let (male, female) = sequential_same_sex_tests(&counts, estimated).unwrap();
        let combined = combined_sequence_test(&counts, estimated).unwrap();
        male_ps.push(male.p_value);
        female_ps.push(female.p_value);
        combined_ps.push(combined.p_value);
    }
    for (name, ps) in [
        ("male run test", &mut male_ps),
        ("female run test", &mut female_ps),
        ("combined run test", &mut combined_ps),
    ] {
        let degenerate = ps.iter().filter(|&&p| !(p > 0.0 && p < 1.0)).count();
        check(&mut failures, degenerate == 0, || {
            format!("{name}: {degenerate} degenerate p-value(s) under the null")
        });
        let worst = decile_deviation(ps);
        check(&mut failures, worst <= 0.1, || {
            format!("{name}: empirical p-value CDF deviates from uniform by {worst:.3} at a decile")
        });
    }
    report("criterion 7 (run tests: golden null proportion and calibration)", failures);
}

// === criterion 8: estimator consistency ===

#[test]
fn criterion_8_estimator_consistency() {
    let mut failures = Vec::new();

    // (a) On exact expected frequencies the estimators reproduce the
    // generating parameters to numerical precision.
    let cases = [
        (0.5164, 0.9, 0.426, 0.354, 0.2),
        (0.45, 0.8, 0.6, 0.25, 0.4),
        (0.6, 1.0, 0.5, 0.5, 0.0),
    ];
    for (pm, q1, p_same, p_mixed, tail) in cases {
        let d = sex(pm);
        let policy = ContinuationPolicy::mixed_preference(
            q1,
            p_same,
            p_mixed,
            TailRule::Constant(tail),
            5,
        )
        .unwrap();
        let dist = enumerate_distribution(d, &policy).unwrap();
        let counts = dist.expected_counts((1u64 << 40) as f64).unwrap();
        let estimated_sex = estimate_sex_distribution(&counts).unwrap();
        let continuation = estimate_continuation(&counts).unwrap();
        let factors = estimate_correction_factors(&counts).unwrap();
        let target = correction_factors_from_policy(d, &policy).unwrap();
        for (what, got, want) in [
            ("p_M", estimated_sex.p_male(), pm),
            ("p_S", continuation.same_sex, p_same),
            ("p_D", continuation.mixed_sex, p_mixed),
            ("first male factor", factors.first_male(), target.first_male()),
            ("first female factor", factors.first_female(), target.first_female()),
            ("second male factor", factors.second_male(), target.second_male()),
            ("second female factor", factors.second_female(), target.second_female()),
        ] {
            check(&mut failures, (got - want).abs() <= 1e-9, || {
                format!(
                    "{what} from expected frequencies at p_M = {pm}: got {got:.12}, \
                     want {want:.12}"
                )
            });
        }
    }

    // (b) On sampled data at one million families the estimates land within
    // three standard errors of the truth in at least 95 of 100 seeds.
    let pm = 0.5164;
    let (q1, p_same, p_mixed) = (0.9, 0.426, 0.354);
    let d = sex(pm);
    let policy = ContinuationPolicy::mixed_preference(
        q1,
        p_same,
        p_mixed,
        TailRule::Constant(0.2),
        5,
    )
    .unwrap();
    let mut successes = 0u32;
    for seed in 0..100u64 {
        let counts = sample_counts(d, &policy, 1_000_000, 40_000 + seed).unwrap();
        let mut later_births = 0u64;
        let mut same_pairs = 0u64;
        let mut mixed_pairs = 0u64;
        for (pattern, count) in counts.iter() {
            later_births += (pattern.len() as u64 - 1) * count;
            if pattern.is_same_sex_prefix(2).unwrap() {
                same_pairs += count;
            } else {
                mixed_pairs += count;
            }
        }
        let estimated_sex = estimate_sex_distribution(&counts).unwrap();
        let continuation = estimate_continuation(&counts).unwrap();
        let se_pm = (pm * (1.0 - pm) / later_births as f64).sqrt();
        let se_ps = (p_same * (1.0 - p_same) / same_pairs as f64).sqrt();
        let se_pd = (p_mixed * (1.0 - p_mixed) / mixed_pairs as f64).sqrt();
        let within = (estimated_sex.p_male() - pm).abs() <= 3.0 * se_pm
            && (continuation.same_sex - p_same).abs() <= 3.0 * se_ps
            && (continuation.mixed_sex - p_mixed).abs() <= 3.0 * se_pd;
        if within {
            successes += 1;
        }
    }
    check(&mut failures, successes >= 95, || {
        format!("only {successes}/100 sampled-data seeds recovered all parameters within 3 SE")
    });

    // The full report stays internally consistent on sampled data.
    let counts = sample_counts(d, &policy, 1_000_000, 40_000).unwrap();
    let r = build_report(&counts).unwrap();
    check(
        &mut failures,
        (r.inflation * r.binomial_same3 - r.predicted_same3).abs() <= 1e-12,
        || "report identity inflation × binomial ≠ predicted".to_string(),
    );
    report("criterion 8 (estimator consistency)", failures);
}

// === criterion 9: CLI sweep determinism across thread counts ===

#[test]
fn criterion_9_sweep_byte_determinism_across_threads() {
    let mut failures = Vec::new();
    let run = |threads: &str| {
        let output = Command::new(env!("CARGO_BIN_EXE_coinflip"))
            .args([
                "sweep", "--grid", "10", "--reps", "10", "--n", "5000", "--seed", "99",
            ])
            .env("COINFLIP_THREADS", threads)
            .output()
            .expect("failed to launch the sweep");
        assert!(
            output.status.success(),
            "sweep exited with {:?}: {}",
            output.status.code(),
            String::from_utf8_lossy(&output.stderr)
        );
        output.stdout
    };
    let single = run("1");
    let triple = run("3");
    let quad = run("4");
    let single_again = run("1");
    check(&mut failures, single == triple, || {
        "1-thread and 3-thread sweeps differ".to_string()
    });
    check(&mut failures, single == quad, || {
        "1-thread and 4-thread sweeps differ".to_string()
    });
    check(&mut failures, single == single_again, || {
        "repeated identical sweeps differ".to_string()
    });
    check(
        &mut failures,
        single.starts_with(b"ratio,mean,p5,p95,theory,n_ge3_mean\n"),
        || "summary CSV header missing".to_string(),
    );

    // The library-level sweep agrees with itself too: the CSV must reflect
    // the same summary that a direct in-process run produces.
    let config = SweepConfig {
        sex: sex(0.5164),
        p_mixed: 0.354,
        ratio_grid: coinflip::default_ratio_grid(1.0, 1.5, 10).unwrap(),
        reps: 10,
        n_families: 5_000,
        master_seed: 99,
        band: (5.0, 95.0),
    };
    let summary = coinflip::run_sweep(&config).unwrap();
    let text = String::from_utf8(single).unwrap();
    let first_row = text.lines().nth(1).unwrap();
    let expected = format!(
        "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
        summary.points[0].ratio,
        summary.points[0].mean,
        summary.points[0].band_low,
        summary.points[0].band_high,
        summary.points[0].theory,
        summary.points[0].mean_families_with_three,
    );
    check(&mut failures, first_row == expected, || {
        format!("CLI row {first_row:?} differs from the library summary {expected:?}")
    });
    report("criterion 9 (sweep byte determinism across thread counts)", failures);
}
