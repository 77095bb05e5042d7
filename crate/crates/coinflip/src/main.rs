//! Command-line front end: exact probabilities, enumeration oracle,
//! estimation from pattern counts, chi-square tests, and the seeded
//! ratio sweep with CSV/SVG output.
//!
//! All numeric CSV output uses fixed 6-decimal formatting (counts and
//! degrees of freedom print as plain integers), so identical inputs produce
//! byte-identical output on every platform and thread count. Errors print
//! one line to stderr and exit 1; flag misuse exits 2.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use coinflip::{
    build_report, combined_sequence_test, corollary1_probability, default_ratio_grid,
    enumerate_distribution, estimate_sex_distribution, event_probability,
    exactly_three_probability, proportion_chi2_test, read_counts_file, render_sweep_svg,
    sequential_same_sex_tests, summarize_cells, sweep_cells, theorem1_probability,
    theorem2_probability, ContinuationPolicy, CorrectionFactors, Error, PatternEvent,
    PluginProbability, Result, SexDistribution, SexPattern, SweepConfig, SweepSummary,
    TailRule, TestResult, DEFAULT_MAX_CHILDREN,
};

#[derive(Parser)]
#[command(
    name = "coinflip",
    about = "Selection bias from family-size stopping rules: exact probabilities, \
             estimation, tests, and seeded Monte Carlo sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form probabilities and the exact enumeration oracle.
    Exact {
        #[command(subcommand)]
        cmd: ExactCommand,
    },
    /// Estimate coin and stopping parameters from a pattern-count file.
    Estimate {
        /// Path to a `pattern,count` CSV file.
        #[arg(long)]
        counts: PathBuf,
    },
    /// Chi-square tests of observed counts against the coin-toss null.
    Test {
        #[command(subcommand)]
        cmd: TestCommand,
    },
    /// Deterministic Monte Carlo sweep of the p_S/p_D stopping ratio.
    Sweep(SweepArgs),
}

#[derive(Subcommand)]
enum ExactCommand {
    /// P(first three same sex | at least three children) from plug-in
    /// correction factors.
    Theorem1 {
        /// Probability of a male birth.
        #[arg(long)]
        pm: f64,
        /// Correction factors `first_m,first_f,second_m,second_f`.
        #[arg(long)]
        cf: String,
    },
    /// The same probability under the two-parameter stopping rule.
    Corollary1 {
        #[arg(long)]
        pm: f64,
        /// Third-child probability after a same-sex pair.
        #[arg(long)]
        ps: f64,
        /// Third-child probability after a mixed-sex pair.
        #[arg(long)]
        pd: f64,
    },
    /// P(first two same sex | at least three children) under the
    /// two-parameter stopping rule.
    Theorem2 {
        #[arg(long)]
        pm: f64,
        #[arg(long)]
        ps: f64,
        #[arg(long)]
        pd: f64,
    },
    /// The exactly-three variant of theorem1, with per-sex factors for
    /// stopping at the third child.
    Exactly3 {
        #[arg(long)]
        pm: f64,
        /// Correction factors `first_m,first_f,second_m,second_f`.
        #[arg(long)]
        cf: String,
        /// Male-run factor P(N=3 | run, N≥3) / P(N=3 | N≥3).
        #[arg(long)]
        third_m: f64,
        /// Female-run factor P(N=3 | run, N≥3) / P(N=3 | N≥3).
        #[arg(long)]
        third_f: f64,
    },
    /// Conditional event probability from exact enumeration of a policy.
    Oracle {
        #[arg(long)]
        pm: f64,
        /// `mp:q1,ps,pd,tail` shorthand or a `prefix,prob` table file.
        #[arg(long)]
        policy: String,
        #[arg(long, value_enum)]
        event: OracleEvent,
        #[arg(long, value_enum)]
        given: OracleGiven,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleEvent {
    /// First three children share a sex.
    #[value(name = "first3same")]
    First3Same,
    /// First two children share a sex.
    #[value(name = "first2same")]
    First2Same,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleGiven {
    /// Families with at least three children.
    #[value(name = "ge3")]
    Ge3,
    /// Families with exactly three children.
    #[value(name = "eq3")]
    Eq3,
}

#[derive(Subcommand)]
enum TestCommand {
    /// One-proportion chi-square test (1 df, no continuity correction).
    Proportion {
        /// Observed successes.
        #[arg(long)]
        x: u64,
        /// Number of trials.
        #[arg(long)]
        n: u64,
        /// Null proportion.
        #[arg(long)]
        p0: f64,
    },
    /// Per-sex tests: does a same-sex run predict the next child's sex?
    Sequential {
        #[arg(long)]
        counts: PathBuf,
    },
    /// Pooled run-continuation test across both sexes.
    Combined {
        #[arg(long)]
        counts: PathBuf,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// Probability of a male birth.
    #[arg(long, default_value_t = 0.5164)]
    pm: f64,
    /// Third-child probability after a mixed-sex pair; p_S = ratio × pd.
    #[arg(long, default_value_t = 0.354)]
    pd: f64,
    /// Smallest p_S/p_D ratio.
    #[arg(long, default_value_t = 1.0)]
    ratio_min: f64,
    /// Largest p_S/p_D ratio.
    #[arg(long, default_value_t = 1.5)]
    ratio_max: f64,
    /// Number of evenly spaced grid points.
    #[arg(long, default_value_t = 100)]
    grid: usize,
    /// Replicate datasets per grid point.
    #[arg(long, default_value_t = 1000)]
    reps: u32,
    /// Families per replicate dataset.
    #[arg(long, default_value_t = 58_007)]
    n: u64,
    /// Master seed; every cell seed derives from it deterministically.
    #[arg(long)]
    seed: u64,
    /// Write the summary CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a self-contained SVG chart of the sweep.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Write per-replicate raw cells (`ratio_index,rep,same3,ge3`).
    #[arg(long)]
    raw: Option<PathBuf>,
    /// Highlight one `x,y` point on the chart.
    #[arg(long)]
    mark: Option<String>,
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Honors `COINFLIP_THREADS` by capping the global rayon pool before any
/// parallel work starts. Unset or empty means all cores.
fn init_thread_pool() {
    let Ok(raw) = std::env::var("COINFLIP_THREADS") else { return };
    if raw.trim().is_empty() {
        return;
    }
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => eprintln!(
            "warning: COINFLIP_THREADS={raw:?} is not a positive integer; using all cores"
        ),
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Exact { cmd } => run_exact(cmd),
        Command::Estimate { counts } => run_estimate(&counts),
        Command::Test { cmd } => run_test(cmd),
        Command::Sweep(args) => run_sweep_command(args),
    }
}

fn fmt6(value: f64) -> String {
    format!("{value:.6}")
}

fn emit_plugin(name: &str, result: PluginProbability) {
    if let Some(warning) = result.warning {
        eprintln!("warning: {warning}");
    }
    println!("{name},{}", fmt6(result.value));
}

fn run_exact(cmd: ExactCommand) -> Result<()> {
    match cmd {
        ExactCommand::Theorem1 { pm, cf } => {
            let sex = SexDistribution::new(pm)?;
            let cf = parse_correction_factors(&cf)?;
            emit_plugin("theorem1", theorem1_probability(sex, cf));
        }
        ExactCommand::Corollary1 { pm, ps, pd } => {
            let sex = SexDistribution::new(pm)?;
            println!("corollary1,{}", fmt6(corollary1_probability(sex, ps, pd)?));
        }
        ExactCommand::Theorem2 { pm, ps, pd } => {
            let sex = SexDistribution::new(pm)?;
            println!("theorem2,{}", fmt6(theorem2_probability(sex, ps, pd)?));
        }
        ExactCommand::Exactly3 { pm, cf, third_m, third_f } => {
            let sex = SexDistribution::new(pm)?;
            let cf = parse_correction_factors(&cf)?;
            emit_plugin("exactly3", exactly_three_probability(sex, cf, third_m, third_f)?);
        }
        ExactCommand::Oracle { pm, policy, event, given } => {
            let sex = SexDistribution::new(pm)?;
            let policy = parse_policy(&policy)?;
            let dist = enumerate_distribution(sex, &policy)?;
            let event = match event {
                OracleEvent::First3Same => PatternEvent::FirstKSameSex(3),
                OracleEvent::First2Same => PatternEvent::FirstKSameSex(2),
            };
            let given = match given {
                OracleGiven::Ge3 => PatternEvent::LengthAtLeast(3),
                OracleGiven::Eq3 => PatternEvent::LengthExactly(3),
            };
            println!("oracle,{}", fmt6(event_probability(&dist, &event, &given)?));
        }
    }
    Ok(())
}

/// Parses `first_m,first_f,second_m,second_f`.
fn parse_correction_factors(text: &str) -> Result<CorrectionFactors> {
    let values = parse_float_list(text, 4, "--cf expects first_m,first_f,second_m,second_f")?;
    CorrectionFactors::new(values[0], values[1], values[2], values[3])
}

fn parse_float_list(text: &str, expected: usize, usage: &str) -> Result<Vec<f64>> {
    let fields: Vec<&str> = text.split(',').collect();
    if fields.len() != expected {
        return Err(Error::InvalidParameter(format!(
            "{usage}; got {} value(s) in {text:?}",
            fields.len()
        )));
    }
    fields
        .iter()
        .map(|f| {
            f.trim().parse::<f64>().map_err(|_| {
                Error::InvalidParameter(format!("{usage}; {f:?} is not a number"))
            })
        })
        .collect()
}

/// Parses a policy argument: the `mp:q1,ps,pd,tail` shorthand for the
/// mixed-preference rule, or a path to a `prefix,prob` table file.
fn parse_policy(text: &str) -> Result<ContinuationPolicy> {
    if let Some(rest) = text.strip_prefix("mp:") {
        let v = parse_float_list(rest, 4, "mp: policy expects q1,ps,pd,tail")?;
        return ContinuationPolicy::mixed_preference(
            v[0],
            v[1],
            v[2],
            TailRule::Constant(v[3]),
            DEFAULT_MAX_CHILDREN,
        );
    }
    let path = Path::new(text);
    let body = fs::read_to_string(path).map_err(|e| {
        Error::InvalidParameter(format!("cannot read policy file {}: {e}", path.display()))
    })?;
    let mut map = BTreeMap::new();
    for (index, raw) in body.lines().enumerate() {
        let line_no = index + 1;
        let row = raw.trim();
        if row.is_empty() || (line_no == 1 && row == "prefix,prob") {
            continue;
        }
        let (prefix_field, prob_field) = row.split_once(',').ok_or_else(|| {
            Error::InvalidParameter(format!(
                "policy file line {line_no}: expected prefix,prob, found {row:?}"
            ))
        })?;
        let prefix = SexPattern::from_str(prefix_field.trim()).map_err(|e| {
            Error::InvalidParameter(format!("policy file line {line_no}: {e}"))
        })?;
        if prefix.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "policy file line {line_no}: the prefix must have at least one child"
            )));
        }
        let prob: f64 = prob_field.trim().parse().map_err(|_| {
            Error::InvalidParameter(format!(
                "policy file line {line_no}: {prob_field:?} is not a number"
            ))
        })?;
        if map.insert(prefix, prob).is_some() {
            return Err(Error::InvalidParameter(format!(
                "policy file line {line_no}: duplicate prefix {}",
                prefix_field.trim()
            )));
        }
    }
    if map.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "policy file {} has no prefix,prob rows",
            path.display()
        )));
    }
    ContinuationPolicy::table(map)
}

fn run_estimate(counts_path: &Path) -> Result<()> {
    let counts = read_counts_file(counts_path)?;
    let report = build_report(&counts)?;
    if let Some(warning) = &report.predicted_warning {
        eprintln!("warning: {warning}");
    }
    let cf = &report.correction_factors;
    let rows: [(&str, String); 14] = [
        ("pm_hat", fmt6(report.sex.p_male())),
        ("pf_hat", fmt6(report.sex.p_female())),
        ("ps_hat", fmt6(report.continuation.same_sex)),
        ("pd_hat", fmt6(report.continuation.mixed_sex)),
        ("cf_first_m", fmt6(cf.first_male())),
        ("cf_first_f", fmt6(cf.first_female())),
        ("cf_second_m", fmt6(cf.second_male())),
        ("cf_second_f", fmt6(cf.second_female())),
        ("predicted_same3", fmt6(report.predicted_same3)),
        ("binomial_same3", fmt6(report.binomial_same3)),
        ("inflation_hat", fmt6(report.inflation)),
        ("observed_same3", fmt6(report.observed_same3)),
        ("n_ge2", report.families_ge2.to_string()),
        ("n_ge3", report.families_ge3.to_string()),
    ];
    for (key, value) in rows {
        println!("{key},{value}");
    }
    Ok(())
}

const TEST_HEADER: &str = "test,statistic,df,p_value,observed,null,n";

fn test_row(name: &str, r: &TestResult) -> String {
    format!(
        "{name},{},{},{},{},{},{}",
        fmt6(r.statistic),
        r.df,
        fmt6(r.p_value),
        fmt6(r.observed_prop),
        fmt6(r.null_prop),
        r.n
    )
}

fn run_test(cmd: TestCommand) -> Result<()> {
    println!("{TEST_HEADER}");
    match cmd {
        TestCommand::Proportion { x, n, p0 } => {
            let result = proportion_chi2_test(x, n, p0)?;
            println!("{}", test_row("proportion", &result));
        }
        TestCommand::Sequential { counts } => {
            let counts = read_counts_file(&counts)?;
            let sex = estimate_sex_distribution(&counts)?;
            let (male, female) = sequential_same_sex_tests(&counts, sex)?;
            println!("{}", test_row("sequential_male", &male));
            println!("{}", test_row("sequential_female", &female));
        }
        TestCommand::Combined { counts } => {
            let counts = read_counts_file(&counts)?;
            let sex = estimate_sex_distribution(&counts)?;
            let result = combined_sequence_test(&counts, sex)?;
            println!("{}", test_row("combined", &result));
        }
    }
    Ok(())
}

const SWEEP_HEADER: &str = "ratio,mean,p5,p95,theory,n_ge3_mean";

fn sweep_summary_csv(summary: &SweepSummary) -> String {
    let mut out = String::with_capacity(64 * (summary.points.len() + 1));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for p in &summary.points {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt6(p.ratio),
            fmt6(p.mean),
            fmt6(p.band_low),
            fmt6(p.band_high),
            fmt6(p.theory),
            fmt6(p.mean_families_with_three),
        ));
    }
    out
}

fn run_sweep_command(args: SweepArgs) -> Result<()> {
    let sex = SexDistribution::new(args.pm)?;
    let config = SweepConfig {
        sex,
        p_mixed: args.pd,
        ratio_grid: default_ratio_grid(args.ratio_min, args.ratio_max, args.grid)?,
        reps: args.reps,
        n_families: args.n,
        master_seed: args.seed,
        band: (5.0, 95.0),
    };
    let mark = match &args.mark {
        Some(text) => {
            let v = parse_float_list(text, 2, "--mark expects x,y")?;
            Some((v[0], v[1]))
        }
        None => None,
    };
    let cells = sweep_cells(&config)?;
    let summary = summarize_cells(&config, &cells)?;
    let excluded: u64 = summary.points.iter().map(|p| u64::from(p.excluded_reps)).sum();
    if excluded > 0 {
        eprintln!(
            "warning: excluded {excluded} replicate(s) with no third children from band \
             statistics"
        );
    }
    let csv = sweep_summary_csv(&summary);
    match &args.out {
        Some(path) => fs::write(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = &args.raw {
        let mut raw = String::with_capacity(24 * (cells.len() + 1));
        raw.push_str("ratio_index,rep,same3,ge3\n");
        for cell in &cells {
            raw.push_str(&format!(
                "{},{},{},{}\n",
                cell.ratio_index, cell.rep, cell.stats.same_sex_triples,
                cell.stats.families_with_three,
            ));
        }
        fs::write(path, raw)?;
    }
    if let Some(path) = &args.svg {
        let pm = sex.p_male();
        let pf = sex.p_female();
        let no_preference = pm * pm * pm + pf * pf * pf;
        fs::write(path, render_sweep_svg(&summary, no_preference, mark)?)?;
    }
    Ok(())
}
