//! The `puredp` command-line experiment runner.
//!
//! Subcommands: `params` (derive and print protocol parameters),
//! `sum-experiment` and `ut-experiment` (seeded batch experiments with CSV
//! output), `relagg-verify` (the relaxed-aggregator invariant suite),
//! `verify` (the exact inequality suite), and `figure1` (the two-user
//! convolution pmfs as CSV).
//!
//! Every run is deterministic given `--seed`: reruns produce byte-identical
//! output files. The seed defaults to the `PUREDP_SEED` environment
//! variable, then 0. A JSON config file (`--config`) can supply any of the
//! numeric options; explicit flags win on conflict. Exit status: 0 on
//! success, 1 on validation errors, 2 when a verification suite finds a
//! violated claim.

pub mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dist::{llr_distance, Pmf, Rng};
use crate::model::Attack;
use crate::relagg::{self, RelAggParams};
use crate::sum::{self, AggregatorKind, SumParams};
use crate::utest::{self, FinalUTestParams, UTestParams};
use crate::verify::{self, InequalityReport};
use crate::{Error, Result};
use output::{emit_results, fmt_sig9, write_json, CsvRecord, Format};

/// Environment variable supplying the default seed.
pub const SEED_ENV_VAR: &str = "PUREDP_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "puredp",
    version,
    about = "Pure differentially private counting and testing protocols over secure intermediaries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Derive protocol parameters from privacy/accuracy targets and print them.
    Params(ParamsArgs),
    /// Seeded bounded-sum experiment; writes trial,true_sum,estimate,abs_error.
    SumExperiment(SumExperimentArgs),
    /// Seeded uniformity-testing experiment; writes trial,n,Z_prime,ell,verdict.
    UtExperiment(UtExperimentArgs),
    /// Relaxed-aggregator invariant suite (correctness + exact security); JSON report.
    RelaggVerify(RelaggVerifyArgs),
    /// Exact inequality verification suite; JSON array of reports.
    Verify(VerifyArgs),
    /// The two-user ones-count convolutions as CSV (point, mass_black, mass_red).
    Figure1(Figure1Args),
}

/// Optional values loadable from `--config` (JSON). Flags override these.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    eps: Option<f64>,
    q: Option<f64>,
    n: Option<usize>,
    trials: Option<u64>,
    d: Option<u64>,
    alpha: Option<f64>,
    kappa: Option<f64>,
    cap_n: Option<f64>,
    eps_hat: Option<f64>,
    q_hat: Option<f64>,
    m: Option<u64>,
    corrupt: Option<usize>,
    aggregator: Option<String>,
    dist: Option<String>,
    mode: Option<String>,
    out: Option<PathBuf>,
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let raw = fs::read_to_string(p)?;
            Ok(serde_json::from_str(&raw)?)
        }
    }
}

fn resolve_seed(flag: Option<u64>, cfg: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(cfg) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(raw) => raw
            .parse::<u64>()
            .map_err(|_| Error::parameter(format!("{SEED_ENV_VAR}={raw} is not a valid seed"))),
        Err(_) => Ok(0),
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Protocol {
    Sum,
    Relagg,
    Utest,
}

#[derive(Args, Debug)]
struct ParamsArgs {
    /// Which protocol's parameter rule to evaluate.
    #[arg(long, value_enum)]
    protocol: Protocol,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long = "eps-hat")]
    eps_hat: Option<f64>,
    #[arg(long = "q-hat")]
    q_hat: Option<f64>,
    #[arg(long)]
    d: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long = "cap-N")]
    cap_n: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum AggregatorChoice {
    Ideal,
    Relagg,
    RelaggWithAttack,
}

#[derive(Args, Debug)]
struct SumExperimentArgs {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    aggregator: Option<AggregatorChoice>,
    /// Security target of the relagg layer (relagg aggregators only).
    #[arg(long = "eps-hat")]
    eps_hat: Option<f64>,
    /// Failure target of the relagg layer (relagg aggregators only).
    #[arg(long = "q-hat")]
    q_hat: Option<f64>,
    /// How many users the relagg-with-attack aggregator drops (default n/2).
    #[arg(long)]
    corrupt: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also dump every trial's transcript as a JSON array.
    #[arg(long = "dump-transcripts")]
    dump_transcripts: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum UtMode {
    Prelim,
    Final,
}

#[derive(Args, Debug)]
struct UtExperimentArgs {
    #[arg(long)]
    d: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Data distribution: `uniform`, `half-bump:<alpha>`, or `file:<json pmf>`.
    #[arg(long)]
    dist: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<UtMode>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Cap on the expected sample size N.
    #[arg(long = "cap-N")]
    cap_n: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RelaggVerifyArgs {
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "eps-hat")]
    eps_hat: Option<f64>,
    #[arg(long = "q-hat")]
    q_hat: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Figure1Args {
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "eps-hat")]
    eps_hat: Option<f64>,
    #[arg(long = "q-hat")]
    q_hat: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Parses argv and runs the requested workflow. Returns the exit status:
/// 0 success, 1 validation error, 2 verification failure.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Params(args) => cmd_params(args),
        Command::SumExperiment(args) => cmd_sum_experiment(args),
        Command::UtExperiment(args) => cmd_ut_experiment(args),
        Command::RelaggVerify(args) => cmd_relagg_verify(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Figure1(args) => cmd_figure1(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn cmd_params(args: ParamsArgs) -> Result<i32> {
    let cfg = load_config(&args.config)?;
    match args.protocol {
        Protocol::Sum => {
            let eps = args.eps.or(cfg.eps).unwrap_or(1.0);
            let q = args.q.or(cfg.q).unwrap_or(0.05);
            let n = args.n.or(cfg.n).unwrap_or(100);
            let p = SumParams::select(eps, q, n)?;
            println!("g={} tau={} m={} lambda={:.9}", p.g, p.tau, p.m, p.lam);
        }
        Protocol::Relagg => {
            let m = args.m.or(cfg.m).unwrap_or(2);
            let n = args.n.or(cfg.n).unwrap_or(2);
            let eps_hat = args.eps_hat.or(cfg.eps_hat).unwrap_or(0.4);
            let q_hat = args.q_hat.or(cfg.q_hat).unwrap_or(0.1);
            let p = RelAggParams::select(m, n, eps_hat, q_hat)?;
            println!(
                "lambda={:.9} p={:.9} t={} msg_len={}",
                p.lam, p.p, p.t, p.msg_len
            );
        }
        Protocol::Utest => {
            let d = args.d.or(cfg.d).unwrap_or(10);
            let alpha = args.alpha.or(cfg.alpha).unwrap_or(0.4);
            let eps = args.eps.or(cfg.eps).unwrap_or(1.0);
            let kappa = args.kappa.or(cfg.kappa).unwrap_or(1.0);
            let cap = args.cap_n.or(cfg.cap_n);
            let p = UTestParams::prelim(d, alpha, eps, kappa, cap)?;
            println!(
                "q={} tau={} m={} n_star={} n={} ell={}",
                fmt_sig9(p.q),
                p.tau,
                p.m,
                fmt_sig9(p.n_star),
                fmt_sig9(p.n_expected),
                fmt_sig9(p.ell)
            );
        }
    }
    Ok(0)
}

/// One bounded-sum trial row.
#[derive(Debug, Clone, Serialize)]
pub struct SumTrialRecord {
    pub trial: u64,
    pub true_sum: f64,
    pub estimate: f64,
    pub abs_error: f64,
}

impl CsvRecord for SumTrialRecord {
    fn csv_header() -> &'static str {
        "trial,true_sum,estimate,abs_error"
    }
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.trial,
            fmt_sig9(self.true_sum),
            fmt_sig9(self.estimate),
            fmt_sig9(self.abs_error)
        )
    }
}

fn cmd_sum_experiment(args: SumExperimentArgs) -> Result<i32> {
    let cfg = load_config(&args.config)?;
    let eps = args.eps.or(cfg.eps).unwrap_or(1.0);
    let q = args.q.or(cfg.q).unwrap_or(0.05);
    let n = args.n.or(cfg.n).unwrap_or(100);
    let trials = args.trials.or(cfg.trials).unwrap_or(100);
    let seed = resolve_seed(args.seed, cfg.seed)?;
    let out = args.out.or(cfg.out).unwrap_or_else(|| PathBuf::from("sum_results.csv"));
    let choice = match args.aggregator {
        Some(c) => c,
        None => match cfg.aggregator.as_deref() {
            None => AggregatorChoice::Ideal,
            Some("ideal") => AggregatorChoice::Ideal,
            Some("relagg") => AggregatorChoice::Relagg,
            Some("relagg-with-attack") => AggregatorChoice::RelaggWithAttack,
            Some(other) => {
                return Err(Error::parameter(format!("unknown aggregator {other:?} in config")))
            }
        },
    };

    let params = SumParams::select(eps, q, n)?;
    let (aggregator, attack) = match choice {
        AggregatorChoice::Ideal => (AggregatorKind::Ideal, Attack::none()),
        AggregatorChoice::Relagg | AggregatorChoice::RelaggWithAttack => {
            let eps_hat = args.eps_hat.or(cfg.eps_hat).unwrap_or(0.2);
            let q_hat = args.q_hat.or(cfg.q_hat).unwrap_or(0.05);
            let rel = RelAggParams::select(params.m, n, eps_hat, q_hat)?;
            let attack = if choice == AggregatorChoice::RelaggWithAttack {
                let corrupt = args.corrupt.or(cfg.corrupt).unwrap_or(n / 2);
                if corrupt > n {
                    return Err(Error::parameter(format!(
                        "cannot corrupt {corrupt} of {n} users"
                    )));
                }
                Attack::dropouts(0..corrupt)
            } else {
                Attack::none()
            };
            (AggregatorKind::Relagg(rel), attack)
        }
    };

    let master = Rng::new(seed, 0);
    let mut records = Vec::with_capacity(trials as usize);
    let mut transcripts = Vec::new();
    for trial in 0..trials {
        let trial_rng = master.substream(trial);
        let mut input_rng = trial_rng.substream(u64::MAX);
        let inputs: Vec<f64> = (0..n).map(|_| input_rng.next_f64()).collect();
        let true_sum: f64 = inputs.iter().sum();
        let transcript =
            sum::run_bounded_sum_transcript(&inputs, &params, &aggregator, &attack, &trial_rng)?;
        let estimate = transcript.analyzer_output;
        records.push(SumTrialRecord {
            trial,
            true_sum,
            estimate,
            abs_error: (estimate - true_sum).abs(),
        });
        if args.dump_transcripts.is_some() {
            transcripts.push(transcript);
        }
    }
    emit_results(&records, &out, Format::Csv)?;
    if let Some(path) = &args.dump_transcripts {
        write_json(&transcripts, path)?;
    }
    let worst =
        records.iter().map(|r| r.abs_error).fold(0.0f64, f64::max);
    println!(
        "sum-experiment: {} trials, n={}, eps={}, aggregator={:?}, worst |error| {} -> {}",
        trials,
        n,
        eps,
        choice,
        fmt_sig9(worst),
        out.display()
    );
    Ok(0)
}

/// One uniformity-testing trial row.
#[derive(Debug, Clone, Serialize)]
pub struct UtTrialRow {
    pub trial: u64,
    pub n: u64,
    pub z_prime: f64,
    pub ell: f64,
    pub verdict: utest::Verdict,
}

impl CsvRecord for UtTrialRow {
    fn csv_header() -> &'static str {
        "trial,n,Z_prime,ell,verdict"
    }
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.trial,
            self.n,
            fmt_sig9(self.z_prime),
            fmt_sig9(self.ell),
            self.verdict
        )
    }
}

fn parse_dist(spec: &str, d: u64) -> Result<Pmf> {
    if spec == "uniform" {
        return utest::uniform_pmf(d);
    }
    if let Some(alpha) = spec.strip_prefix("half-bump:") {
        let alpha: f64 = alpha
            .parse()
            .map_err(|_| Error::parameter(format!("half-bump accuracy {alpha:?} is not a number")))?;
        return utest::half_bump_pmf(d, alpha);
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let raw = fs::read_to_string(path)?;
        let pmf: Pmf = serde_json::from_str(&raw)?;
        if pmf.min_point() < 1 || pmf.max_point() > d as i64 {
            return Err(Error::parameter(format!(
                "pmf support [{}, {}] is not inside [1, {d}]",
                pmf.min_point(),
                pmf.max_point()
            )));
        }
        return Ok(pmf);
    }
    Err(Error::parameter(format!(
        "unknown distribution {spec:?}; expected uniform, half-bump:<alpha>, or file:<path>"
    )))
}

fn cmd_ut_experiment(args: UtExperimentArgs) -> Result<i32> {
    let cfg = load_config(&args.config)?;
    let d = args.d.or(cfg.d).unwrap_or(10);
    let alpha = args.alpha.or(cfg.alpha).unwrap_or(0.4);
    let eps = args.eps.or(cfg.eps).unwrap_or(1.0);
    let trials = args.trials.or(cfg.trials).unwrap_or(50);
    let kappa = args.kappa.or(cfg.kappa).unwrap_or(1.0);
    let cap = args.cap_n.or(cfg.cap_n);
    let seed = resolve_seed(args.seed, cfg.seed)?;
    let out = args.out.or(cfg.out).unwrap_or_else(|| PathBuf::from("ut_results.csv"));
    let dist_spec = args.dist.or(cfg.dist).unwrap_or_else(|| "uniform".into());
    let dist = parse_dist(&dist_spec, d)?;
    let mode = match args.mode {
        Some(m) => m,
        None => match cfg.mode.as_deref() {
            None | Some("prelim") => UtMode::Prelim,
            Some("final") => UtMode::Final,
            Some(other) => {
                return Err(Error::parameter(format!("unknown mode {other:?} in config")))
            }
        },
    };

    enum Tester {
        Prelim(UTestParams),
        Final(FinalUTestParams),
    }
    let tester = match mode {
        UtMode::Prelim => Tester::Prelim(UTestParams::prelim(d, alpha, eps, kappa, cap)?),
        UtMode::Final => Tester::Final(FinalUTestParams::select(d, alpha, eps, kappa, cap)?),
    };
    let n_expected = match &tester {
        Tester::Prelim(p) => p.n_expected,
        Tester::Final(f) => f.inner.n_expected,
    };
    // the sample-size formula explodes at small accuracy targets (the final
    // tester's compressed target especially); refuse rather than stall
    const SAMPLE_SIZE_LIMIT: f64 = 1e7;
    if n_expected > SAMPLE_SIZE_LIMIT {
        return Err(Error::parameter(format!(
            "expected sample size {n_expected:.3e} exceeds the practical limit {SAMPLE_SIZE_LIMIT:.0e}; \
             pass --cap-N to bound it"
        )));
    }

    let master = Rng::new(seed, 0);
    let mut rows = Vec::with_capacity(trials as usize);
    let mut rejections = 0u64;
    for trial in 0..trials {
        let trial_rng = master.substream(trial);
        let record = match &tester {
            Tester::Prelim(p) => utest::run_prelim_trial(p, &dist, &trial_rng)?,
            // fresh public partition per execution, shared via the seed
            Tester::Final(f) => {
                utest::run_final_trial(f, &dist, seed.wrapping_add(trial), &trial_rng)?
            }
        };
        rejections += u64::from(record.verdict == utest::Verdict::NotUniform);
        rows.push(UtTrialRow {
            trial,
            n: record.n,
            z_prime: record.z_prime,
            ell: record.ell,
            verdict: record.verdict,
        });
    }
    emit_results(&rows, &out, Format::Csv)?;
    println!(
        "ut-experiment: {} trials, d={}, dist={}, mode={}, not-uniform {}/{} -> {}",
        trials,
        d,
        dist_spec,
        match mode {
            UtMode::Prelim => "prelim",
            UtMode::Final => "final",
        },
        rejections,
        trials,
        out.display()
    );
    Ok(0)
}

/// JSON report of the relaxed-aggregator invariant suite.
#[derive(Debug, Serialize)]
pub struct RelaggVerifyReport {
    pub m: u64,
    pub n: usize,
    pub eps_hat: f64,
    pub q_hat: f64,
    pub t: u64,
    pub msg_len: u64,
    pub correctness: relagg::CorrectnessReport,
    /// Exact two-user security: max LLR over equal-mod-sum input pairs vs
    /// the per-step budget eps_hat / 2.
    pub two_user_max_llr: f64,
    pub two_user_bound: f64,
    pub two_user_pass: bool,
    /// Exact hybrid consistency at three users: max LLR between any input
    /// vector and its collapsed form (sum, 0, 0) vs the full budget eps_hat.
    pub hybrid_max_llr: f64,
    pub hybrid_bound: f64,
    pub hybrid_pass: bool,
    /// A fixed adversarial bit-count shifts both convolutions identically.
    pub corrupt_shift_invariant: bool,
    pub pass: bool,
}

fn cmd_relagg_verify(args: RelaggVerifyArgs) -> Result<i32> {
    let cfg = load_config(&args.config)?;
    let m = args.m.or(cfg.m).unwrap_or(3);
    let n = args.n.or(cfg.n).unwrap_or(4);
    let eps_hat = args.eps_hat.or(cfg.eps_hat).unwrap_or(0.4);
    let q_hat = args.q_hat.or(cfg.q_hat).unwrap_or(0.1);
    let trials = args.trials.or(cfg.trials).unwrap_or(10_000);
    let seed = resolve_seed(args.seed, cfg.seed)?;
    let out = args.out.or(cfg.out).unwrap_or_else(|| PathBuf::from("relagg_report.json"));

    let params = RelAggParams::select(m, n, eps_hat, q_hat)?;
    let correctness = relagg::correctness_experiment(&params, trials, &Rng::new(seed, 0))?;

    // exact security at two users
    let two = RelAggParams::select(m, 2, eps_hat, q_hat)?;
    let mut two_user_max: f64 = 0.0;
    for s in 0..m {
        let class: Vec<(u64, u64)> =
            (0..m).map(|x1| (x1, (s + m - x1 % m) % m)).collect();
        for &(a1, a2) in &class {
            for &(b1, b2) in &class {
                let llr = relagg::ones_count_llr(&[a1, a2], &[b1, b2], &two)?;
                two_user_max = two_user_max.max(llr);
            }
        }
    }
    let two_user_bound = eps_hat / 2.0 + verify::SLACK_TOL;
    let two_user_pass = two_user_max <= two_user_bound;

    // exact hybrid collapse at three users
    let three = RelAggParams::select(m, 3, eps_hat, q_hat)?;
    let mut hybrid_max: f64 = 0.0;
    for x1 in 0..m {
        for x2 in 0..m {
            for x3 in 0..m {
                let total = (x1 + x2 + x3) % m;
                let llr =
                    relagg::ones_count_llr(&[x1, x2, x3], &[total, 0, 0], &three)?;
                hybrid_max = hybrid_max.max(llr);
            }
        }
    }
    let hybrid_bound = eps_hat + verify::SLACK_TOL;
    let hybrid_pass = hybrid_max <= hybrid_bound;

    // adversarial shift invariance on one representative pair
    let base_a = relagg::ones_count_pmf(&[0, 0], &two)?;
    let base_b = relagg::ones_count_pmf(&[1, m - 1], &two)?;
    let base = llr_distance(&base_a, &base_b);
    let corrupt_shift_invariant = [1i64, 9, 42]
        .iter()
        .all(|&c| llr_distance(&base_a.shift(c), &base_b.shift(c)) == base);

    let report = RelaggVerifyReport {
        m,
        n,
        eps_hat,
        q_hat,
        t: params.t,
        msg_len: params.msg_len,
        pass: correctness.pass && two_user_pass && hybrid_pass && corrupt_shift_invariant,
        correctness,
        two_user_max_llr: two_user_max,
        two_user_bound,
        two_user_pass,
        hybrid_max_llr: hybrid_max,
        hybrid_bound,
        hybrid_pass,
        corrupt_shift_invariant,
    };
    write_json(&report, &out)?;
    println!(
        "relagg-verify: m={m} n={n} miscount {}/{} two-user max LLR {} hybrid max LLR {} -> {}",
        report.correctness.miscounts,
        report.correctness.trials,
        fmt_sig9(report.two_user_max_llr),
        fmt_sig9(report.hybrid_max_llr),
        out.display()
    );
    Ok(if report.pass { 0 } else { 2 })
}

fn demo_as_report(demo: &verify::NoSecurityDemo) -> InequalityReport {
    // positive mass on the all-zero output for equal inputs, zero mass for
    // the split pair, and an infinite LLR; encoded as slacks so the report
    // array stays homogeneous
    let llr_slack = if demo.llr_infinite { 0.0 } else { f64::NEG_INFINITY };
    let worst = demo
        .all_zero_prob_equal_inputs
        .min(-demo.all_zero_prob_split_inputs)
        .min(llr_slack);
    InequalityReport {
        claim: "blanket-free construction admits no finite security bound".into(),
        params: json!({"m": demo.m}),
        hypothesis_met: true,
        worst_slack: worst,
        worst_point: json!({
            "all_zero_prob_equal_inputs": demo.all_zero_prob_equal_inputs,
            "all_zero_prob_split_inputs": demo.all_zero_prob_split_inputs,
        }),
        pass: demo.pass,
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let cfg = load_config(&args.config)?;
    let out = args.out.or(cfg.out).unwrap_or_else(|| PathBuf::from("verify_report.json"));
    let suite = verify::default_suite()?;
    let mut reports = suite.reports.clone();
    reports.extend(suite.demos.iter().map(demo_as_report));
    write_json(&reports, &out)?;
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| !(r.pass && r.hypothesis_met))
        .map(|r| r.claim.as_str())
        .collect();
    println!(
        "verify: {} checks, {} failed -> {}",
        reports.len(),
        failed.len(),
        out.display()
    );
    Ok(if failed.is_empty() { 0 } else { 2 })
}

/// One figure row: a point of the two-user ones-count supports with the
/// masses of the equal-inputs (black) and split-inputs (red) convolutions.
#[derive(Debug, Clone, Serialize)]
pub struct FigureRow {
    pub point: i64,
    pub mass_black: f64,
    pub mass_red: f64,
}

impl CsvRecord for FigureRow {
    fn csv_header() -> &'static str {
        "point,mass_black,mass_red"
    }
    fn csv_row(&self) -> String {
        format!("{},{},{}", self.point, fmt_sig9(self.mass_black), fmt_sig9(self.mass_red))
    }
}

fn cmd_figure1(args: Figure1Args) -> Result<i32> {
    let cfg = load_config(&args.config)?;
    let m = args.m.or(cfg.m).unwrap_or(4);
    let n = args.n.or(cfg.n).unwrap_or(2);
    let eps_hat = args.eps_hat.or(cfg.eps_hat).unwrap_or(0.4);
    let q_hat = args.q_hat.or(cfg.q_hat).unwrap_or(0.1);
    let out = args.out.or(cfg.out).unwrap_or_else(|| PathBuf::from("figure1.csv"));

    let params = RelAggParams::select(m, n, eps_hat, q_hat)?;
    let black = relagg::ones_count_pmf_naive(&[0, 0], &params)?;
    let red = relagg::ones_count_pmf_naive(&[1, m - 1], &params)?;
    let mut points: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for &(v, p) in black.entries() {
        points.entry(v).or_insert((0.0, 0.0)).0 = p;
    }
    for &(v, p) in red.entries() {
        points.entry(v).or_insert((0.0, 0.0)).1 = p;
    }
    let rows: Vec<FigureRow> = points
        .into_iter()
        .map(|(point, (mass_black, mass_red))| FigureRow { point, mass_black, mass_red })
        .collect();
    emit_results(&rows, &out, Format::Csv)?;
    println!("figure1: m={m} t={} {} points -> {}", params.t, rows.len(), out.display());
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<String> {
        std::iter::once("puredp")
            .chain(list.iter().copied())
            .map(String::from)
            .collect()
    }

    #[test]
    fn params_sum_prints_reference_line() {
        // printed values checked via the library; here just exercise exit codes
        assert_eq!(run_cli(args(&["params", "--protocol", "sum", "--eps", "1", "--q", "0.05", "--n", "100"])), 0);
    }

    #[test]
    fn bad_flags_exit_one() {
        assert_eq!(run_cli(args(&["params", "--protocol", "sum", "--eps", "7"])), 1);
        assert_eq!(run_cli(args(&["no-such-subcommand"])), 1);
        assert_eq!(run_cli(args(&["sum-experiment", "--n", "3"])), 1); // odd n
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run_cli(args(&["--help"])), 0);
    }

    #[test]
    fn dist_spec_parsing() {
        assert!(parse_dist("uniform", 6).is_ok());
        let bump = parse_dist("half-bump:0.4", 6).unwrap();
        assert_eq!(bump.support_len(), 6);
        assert!(parse_dist("half-bump:x", 6).is_err());
        assert!(parse_dist("triangle", 6).is_err());
        assert!(parse_dist("file:/nonexistent/x.json", 6).is_err());
    }

    #[test]
    fn seed_resolution_order() {
        // explicit flag wins over config
        assert_eq!(resolve_seed(Some(5), Some(7)).unwrap(), 5);
        assert_eq!(resolve_seed(None, Some(7)).unwrap(), 7);
    }
}
