//! Uniformity testing over `[d]` under pure differential privacy.
//!
//! Users hold categories in `{1, ..., d}`; the number of users is Poisson
//! with known mean `N`. Each user one-hot encodes its category and runs the
//! bounded-sum randomizer per coordinate with encoding scale `g = 1`, so the
//! aggregator's output is a noised histogram. The analyzer decodes the
//! counts, forms the chi-squared-style statistic
//! `Z' = (d/N) * sum_j ((c_j - N/d)^2 - c_j)`, and reports "uniform" exactly
//! when `Z'` is at most a threshold `ell` computed from the exact moments of
//! the truncated discrete Laplace noise.
//!
//! The guarantees are one-sided constants: on uniform data the tester
//! rejects with probability at most 2/27, and on data at statistical
//! distance more than `alpha` from uniform it rejects with probability at
//! least 71/162. Majority voting over repeated runs ([`amplify`]) converts
//! that gap into any fixed confidence.
//!
//! The final tester first compresses the domain: a public uniformly random
//! partition of `[d]` into `dhat` equal groups coarsens each datum, paying a
//! predictable factor in statistical distance with constant probability but
//! shrinking the universe enough to improve the sample complexity's
//! dependence on `d` to `d^{2/3}`.

use serde::Serialize;

use crate::dist::{dlap_truncated, sample_poisson, Pmf, PolyaSampler, Rng};
use crate::model::{self, Attack};
use crate::sum::noised_residue;
use crate::{Error, Result};

/// Rejection probability on uniform data is at most 2/27.
pub const REJECT_RATE_UNIFORM_MAX: f64 = 2.0 / 27.0;
/// Rejection probability on far-from-uniform data is at least 71/162.
pub const REJECT_RATE_FAR_MIN: f64 = 71.0 / 162.0;
/// Default amplification threshold: the midpoint (2/27 + 71/162)/2 = 83/324.
pub const AMPLIFY_DEFAULT_THRESHOLD: f64 = 83.0 / 324.0;

/// The tester's verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Uniform,
    NotUniform,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Uniform => f.write_str("uniform"),
            Verdict::NotUniform => f.write_str("not-uniform"),
        }
    }
}

/// Parameters of the preliminary tester on universe `[d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UTestParams {
    pub d: u64,
    /// Statistical-distance accuracy target.
    pub alpha: f64,
    pub eps: f64,
    /// Leading sample-complexity constant; no ground-truth value exists, so
    /// it is a knob with default 1.
    pub kappa: f64,
    /// Noise scale `exp(-eps)`.
    pub lam: f64,
    /// Per-count failure budget `1 / (484 d)`.
    pub q: f64,
    /// Truncation radius: the bounded-sum rule, also forced strictly above
    /// `ln 10 / ln(1/lam) - 1` so the truncated-noise moment bounds apply.
    pub tau: u64,
    /// Modulus `ceil(2N) + 4 tau`: the expected sample size stands in for
    /// the (random) user count, with a factor-2 safety margin.
    pub m: u64,
    /// The sample-size formula value before any cap.
    pub n_star: f64,
    /// The expected sample size actually used (`n_star` capped).
    pub n_expected: f64,
    /// Decision threshold for `Z'`.
    pub ell: f64,
}

/// The sample-size formula
/// `kappa*sqrt(d)/alpha^2 + 174 d^(3/4) e^eps / (alpha (e^eps - 1))
///  + 261 d^(2/3) e^(2 eps/3) / (alpha^(4/3) (e^eps - 1)^(2/3))`.
pub fn n_star(d: u64, alpha: f64, eps: f64, kappa: f64) -> f64 {
    let d = d as f64;
    let e_eps = eps.exp();
    kappa * d.sqrt() / alpha.powi(2)
        + 174.0 * d.powf(0.75) * e_eps / (alpha * (e_eps - 1.0))
        + 261.0 * d.powf(2.0 / 3.0) * (2.0 * eps / 3.0).exp()
            / (alpha.powf(4.0 / 3.0) * (e_eps - 1.0).powf(2.0 / 3.0))
}

/// The decision threshold: the expected statistic under uniform data plus
/// nine standard deviations of every fluctuation term. The first-moment
/// term vanishes (truncated discrete Laplace noise is centered) but is kept
/// in the evaluation.
pub fn compute_ell(d: u64, alpha: f64, lam: f64, tau: u64, n_expected: f64) -> Result<f64> {
    if !(n_expected > 0.0) {
        return Err(Error::parameter(format!(
            "expected sample size {n_expected} must be positive"
        )));
    }
    let noise = dlap_truncated(tau, 0, lam)?;
    let e1 = noise.moment(1);
    let e2 = noise.moment(2);
    let d_f = d as f64;
    let n = n_expected;
    Ok(alpha.powi(2) * n / 500.0 + (4.0 * d_f * d_f / n) * e2 - (2.0 * d_f * d_f / n) * e1
        + 9.0
            * (alpha.powi(2) * n / 500_000f64.sqrt()
                + 7.0 * d_f / (n.sqrt() * (1.0 - lam))
                + 25.0 * d_f.powf(1.5) / (n * (1.0 - lam).powi(2))))
}

fn validate_common(d: u64, alpha: f64, eps: f64) -> Result<()> {
    if d < 2 {
        return Err(Error::parameter(format!("universe size d={d} must be at least 2")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::parameter(format!("alpha={alpha} outside (0,1)")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::parameter(format!("eps={eps} outside (0,1]")));
    }
    Ok(())
}

impl UTestParams {
    /// Parameters for the preliminary tester. `cap` optionally bounds the
    /// expected sample size (the formula value grows quickly).
    pub fn prelim(d: u64, alpha: f64, eps: f64, kappa: f64, cap: Option<f64>) -> Result<Self> {
        validate_common(d, alpha, eps)?;
        if !(kappa > 0.0) {
            return Err(Error::parameter(format!("kappa={kappa} must be positive")));
        }
        if let Some(c) = cap {
            if !(c > 0.0) {
                return Err(Error::parameter(format!("sample-size cap {c} must be positive")));
            }
        }
        let lam = (-eps).exp();
        let q = 1.0 / (484.0 * d as f64);
        let star = n_star(d, alpha, eps, kappa);
        let n_expected = cap.map_or(star, |c| star.min(c));

        let tau_wrap = ((2.0 / q).ln() / eps).ceil();
        let moment_threshold = 10f64.ln() / eps - 1.0;
        let mut tau_moment = moment_threshold.ceil().max(0.0);
        if tau_moment <= moment_threshold {
            tau_moment += 1.0;
        }
        let tau = tau_wrap.max(tau_moment) as u64;

        let m = (2.0 * n_expected).ceil() as u64 + 4 * tau;
        let ell = compute_ell(d, alpha, lam, tau, n_expected)?;
        Ok(UTestParams { d, alpha, eps, kappa, lam, q, tau, m, n_star: star, n_expected, ell })
    }

    /// The wraparound threshold for decoding counts (`g = 1`).
    pub fn wrap_threshold(&self) -> u64 {
        self.m - 2 * self.tau
    }

    /// Decodes one aggregated residue into a (possibly negative) count.
    pub fn decode_count(&self, y: u64) -> Result<f64> {
        if y >= self.m {
            return Err(Error::structural(format!("residue {y} not below modulus {}", self.m)));
        }
        if y > self.wrap_threshold() {
            Ok(y as f64 - self.m as f64)
        } else {
            Ok(y as f64)
        }
    }
}

/// The chi-squared-style statistic `(d/N) * sum_j ((c_j - N/d)^2 - c_j)`.
pub fn z_statistic(counts: &[f64], n_expected: f64) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::parameter("statistic needs at least one count"));
    }
    if !(n_expected > 0.0) {
        return Err(Error::parameter(format!(
            "expected sample size {n_expected} must be positive"
        )));
    }
    let d = counts.len() as f64;
    let mean = n_expected / d;
    let sum: f64 = counts.iter().map(|&c| (c - mean) * (c - mean) - c).sum();
    Ok(d / n_expected * sum)
}

/// One analyzed execution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UtOutcome {
    pub z_prime: f64,
    pub ell: f64,
    pub verdict: Verdict,
}

/// The analyzer. `aggregated` is the aggregator's output, or `None` when no
/// messages arrived (`n = 0`); in that case the analyzer draws each count
/// from the very same truncated-noise convolution the protocol would have
/// added, so the output law does not depend on `n`.
pub fn analyze(
    aggregated: Option<&[u64]>,
    params: &UTestParams,
    rng: &mut Rng,
) -> Result<UtOutcome> {
    let counts: Vec<f64> = match aggregated {
        Some(residues) => {
            if residues.len() != params.d as usize {
                return Err(Error::structural(format!(
                    "aggregate has {} coordinates, universe size is {}",
                    residues.len(),
                    params.d
                )));
            }
            residues.iter().map(|&y| params.decode_count(y)).collect::<Result<_>>()?
        }
        None => {
            let noise = dlap_truncated(params.tau, 0, params.lam)?.sampler();
            (0..params.d).map(|_| (noise.sample(rng) + noise.sample(rng)) as f64).collect()
        }
    };
    let z_prime = z_statistic(&counts, params.n_expected)?;
    let verdict = if z_prime <= params.ell { Verdict::Uniform } else { Verdict::NotUniform };
    Ok(UtOutcome { z_prime, ell: params.ell, verdict })
}

/// The per-user randomizer: one-hot encode `x` and add independent
/// two-sided Polya noise per coordinate, shaped `2/n` for the realized user
/// count `n` so the aggregate noise per coordinate is two discrete Laplace
/// draws.
pub fn ut_randomize(
    x: u64,
    n_users: usize,
    params: &UTestParams,
    rng: &mut Rng,
) -> Result<Vec<u64>> {
    if n_users == 0 {
        return Err(Error::parameter("randomizer requires at least one participating user"));
    }
    let polya = PolyaSampler::new(2.0 / n_users as f64, params.lam)?;
    ut_randomize_with(x, params, &polya, rng)
}

fn ut_randomize_with(
    x: u64,
    params: &UTestParams,
    polya: &PolyaSampler,
    rng: &mut Rng,
) -> Result<Vec<u64>> {
    if x < 1 || x > params.d {
        return Err(Error::parameter(format!("category {x} outside [1, {}]", params.d)));
    }
    let mut row = Vec::with_capacity(params.d as usize);
    for j in 1..=params.d {
        let phi = u64::from(x == j);
        let up = polya.sample(rng) as i128;
        let down = polya.sample(rng) as i128;
        row.push(noised_residue(phi, up - down, params.m));
    }
    Ok(row)
}

/// Noise-suppressed one-hot encoding, reachable only from unit tests.
#[cfg(test)]
pub(crate) fn ut_randomize_forced(x: u64, params: &UTestParams) -> Result<Vec<u64>> {
    if x < 1 || x > params.d {
        return Err(Error::parameter(format!("category {x} outside [1, {}]", params.d)));
    }
    Ok((1..=params.d).map(|j| u64::from(x == j)).collect())
}

/// An equal-size partition of `{1, ..., d}` into `dhat` labeled groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    d: u64,
    dhat: u64,
    // assign[j-1] = group of category j, in 1..=dhat
    assign: Vec<u64>,
}

/// Stream id reserved for deriving partitions from public seeds.
const PARTITION_STREAM: u64 = 0x7061_7274_6974_696f;

impl Partition {
    /// A uniformly random equal partition.
    pub fn random(d: u64, dhat: u64, rng: &mut Rng) -> Result<Self> {
        if dhat < 2 {
            return Err(Error::parameter(format!("group count dhat={dhat} must be at least 2")));
        }
        if dhat > d {
            return Err(Error::parameter(format!("group count dhat={dhat} exceeds d={d}")));
        }
        if !d.is_multiple_of(dhat) {
            return Err(Error::parameter(format!("dhat={dhat} does not divide d={d}")));
        }
        let mut order: Vec<u64> = (1..=d).collect();
        rng.shuffle(&mut order);
        let group_size = d / dhat;
        let mut assign = vec![0u64; d as usize];
        for (idx, &category) in order.iter().enumerate() {
            assign[category as usize - 1] = idx as u64 / group_size + 1;
        }
        Ok(Partition { d, dhat, assign })
    }

    /// The partition shared through public randomness: randomizers and the
    /// analyzer derive the identical partition from the same seed.
    pub fn from_seed(d: u64, dhat: u64, public_seed: u64) -> Result<Self> {
        Partition::random(d, dhat, &mut Rng::new(public_seed, PARTITION_STREAM))
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn dhat(&self) -> u64 {
        self.dhat
    }

    /// The group index (in `1..=dhat`) containing category `j`.
    pub fn coarsen(&self, j: u64) -> Result<u64> {
        if j < 1 || j > self.d {
            return Err(Error::parameter(format!("category {j} outside [1, {}]", self.d)));
        }
        Ok(self.assign[j as usize - 1])
    }

    pub fn groups(&self) -> Vec<Vec<u64>> {
        let mut groups = vec![Vec::new(); self.dhat as usize];
        for (j, &g) in self.assign.iter().enumerate() {
            groups[g as usize - 1].push(j as u64 + 1);
        }
        groups
    }

    /// The law of `coarsen(X)` for `X ~ pmf` over `{1, ..., d}`.
    pub fn pushforward(&self, pmf: &Pmf) -> Result<Pmf> {
        let mut masses = vec![0.0f64; self.dhat as usize];
        for &(v, p) in pmf.entries() {
            if v < 1 || v as u64 > self.d {
                return Err(Error::parameter(format!("pmf point {v} outside [1, {}]", self.d)));
            }
            masses[self.assign[v as usize - 1] as usize - 1] += p;
        }
        Pmf::from_entries(masses.into_iter().enumerate().map(|(i, p)| (i as i64 + 1, p)))
    }
}

/// The universe-shrinking rule: `d^(2/3) eps^(4/3) / alpha^(4/3)`, clamped
/// to `[2, d]` and rounded to the nearest divisor of `d` (ties toward the
/// smaller divisor) so equal-size partitions exist.
pub fn select_dhat(d: u64, eps: f64, alpha: f64) -> Result<u64> {
    validate_common(d, alpha, eps)?;
    let raw = (d as f64).powf(2.0 / 3.0) * eps.powf(4.0 / 3.0) / alpha.powf(4.0 / 3.0);
    if raw < 2.0 {
        return Ok(2);
    }
    if raw > d as f64 {
        return Ok(d);
    }
    let mut best: u64 = d;
    let mut best_dist = f64::INFINITY;
    let mut consider = |k: u64| {
        if k >= 2 && k <= d {
            let dist = (k as f64 - raw).abs();
            if dist < best_dist - 1e-12 || (dist <= best_dist + 1e-12 && k < best) {
                best = k;
                best_dist = dist;
            }
        }
    };
    let mut i = 1u64;
    while i * i <= d {
        if d.is_multiple_of(i) {
            consider(i);
            consider(d / i);
        }
        i += 1;
    }
    Ok(best)
}

/// Parameters of the final (domain-compressed) tester.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalUTestParams {
    /// Original universe size.
    pub d: u64,
    /// Compressed universe size, a divisor of `d`.
    pub dhat: u64,
    /// Accuracy target after compression:
    /// `alpha * sqrt(dhat) / (477 sqrt(10 d))`.
    pub alpha_hat: f64,
    /// The preliminary tester instantiated on `[dhat]` at `alpha_hat`.
    pub inner: UTestParams,
}

impl FinalUTestParams {
    pub fn select(d: u64, alpha: f64, eps: f64, kappa: f64, cap: Option<f64>) -> Result<Self> {
        let dhat = select_dhat(d, eps, alpha)?;
        let alpha_hat = alpha * (dhat as f64).sqrt() / (477.0 * (10.0 * d as f64).sqrt());
        let inner = UTestParams::prelim(dhat, alpha_hat, eps, kappa, cap)?;
        Ok(FinalUTestParams { d, dhat, alpha_hat, inner })
    }
}

/// The final randomizer: coarsen with the public partition, then run the
/// preliminary randomizer on the compressed universe.
pub fn ut_final_randomize(
    x: u64,
    partition: &Partition,
    params: &FinalUTestParams,
    n_users: usize,
    rng: &mut Rng,
) -> Result<Vec<u64>> {
    if partition.d() != params.d || partition.dhat() != params.dhat {
        return Err(Error::parameter(format!(
            "partition shape ({}, {}) does not match parameters ({}, {})",
            partition.d(),
            partition.dhat(),
            params.d,
            params.dhat
        )));
    }
    let coarse = partition.coarsen(x)?;
    ut_randomize(coarse, n_users, &params.inner, rng)
}

/// The final analyzer: identical to the preliminary analyzer on `[dhat]`.
pub fn ut_final_analyze(
    aggregated: Option<&[u64]>,
    params: &FinalUTestParams,
    rng: &mut Rng,
) -> Result<UtOutcome> {
    analyze(aggregated, &params.inner, rng)
}

/// Majority amplification: run the tester `reps` times on fresh data and
/// report "not uniform" exactly when the rejecting fraction exceeds
/// `threshold_frac` (default [`AMPLIFY_DEFAULT_THRESHOLD`]).
pub fn amplify(
    mut tester: impl FnMut(&mut Rng) -> Result<Verdict>,
    reps: u64,
    threshold_frac: f64,
    rng: &mut Rng,
) -> Result<Verdict> {
    if reps < 1 {
        return Err(Error::parameter("amplification needs at least one repetition"));
    }
    if !(threshold_frac > 0.0 && threshold_frac < 1.0) {
        return Err(Error::parameter(format!(
            "threshold fraction {threshold_frac} outside (0,1)"
        )));
    }
    let mut rejections = 0u64;
    for rep in 0..reps {
        let mut rep_rng = rng.substream(rep);
        if tester(&mut rep_rng)? == Verdict::NotUniform {
            rejections += 1;
        }
    }
    Ok(if rejections as f64 / reps as f64 > threshold_frac {
        Verdict::NotUniform
    } else {
        Verdict::Uniform
    })
}

/// Draws `n ~ Pois(n_expected)` and then `n` i.i.d. categories from `dist`
/// (a pmf over `{1, ..., d}`).
pub fn sample_dataset(dist: &Pmf, n_expected: f64, rng: &mut Rng) -> Result<Vec<u64>> {
    if dist.min_point() < 1 {
        return Err(Error::parameter(format!(
            "category distribution has point {} below 1",
            dist.min_point()
        )));
    }
    let n = sample_poisson(n_expected, rng)?;
    let sampler = dist.sampler();
    Ok((0..n).map(|_| sampler.sample(rng) as u64).collect())
}

/// The canonical far-from-uniform alternative: mass `(1+2 alpha)/d` on the
/// lower half of the universe and `(1-2 alpha)/d` on the upper half, at
/// statistical distance exactly `alpha` from uniform. Requires even `d`.
pub fn half_bump_pmf(d: u64, alpha: f64) -> Result<Pmf> {
    if d < 2 || !d.is_multiple_of(2) {
        return Err(Error::parameter(format!("half-bump universe size d={d} must be even")));
    }
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::parameter(format!("half-bump alpha={alpha} outside (0, 0.5]")));
    }
    let d_f = d as f64;
    let lo = (1.0 + 2.0 * alpha) / d_f;
    let hi = (1.0 - 2.0 * alpha) / d_f;
    Pmf::from_entries((1..=d as i64).map(|j| (j, if j <= d as i64 / 2 { lo } else { hi })))
}

/// The uniform pmf over `{1, ..., d}`.
pub fn uniform_pmf(d: u64) -> Result<Pmf> {
    Pmf::uniform(1, d as i64)
}

/// One experiment row.
#[derive(Debug, Clone, Serialize)]
pub struct UtTrialRecord {
    pub n: u64,
    pub z_prime: f64,
    pub ell: f64,
    pub verdict: Verdict,
}

// Stream used inside a trial for drawing n and the dataset; user streams
// are 0..n and the model reserves n and n+1.
const DATA_STREAM: u64 = u64::MAX - 7;

/// One preliminary-tester trial against the ideal aggregator: draw the
/// dataset, run every user's randomizer, aggregate coordinatewise mod `m`,
/// analyze.
pub fn run_prelim_trial(params: &UTestParams, data: &Pmf, rng: &Rng) -> Result<UtTrialRecord> {
    if data.max_point() as u64 > params.d {
        return Err(Error::parameter(format!(
            "data distribution reaches {} but the universe is [1, {}]",
            data.max_point(),
            params.d
        )));
    }
    let mut data_rng = rng.substream(DATA_STREAM);
    let dataset = sample_dataset(data, params.n_expected, &mut data_rng)?;
    run_tester_on(&dataset, params, None, rng)
}

/// One final-tester trial: the public partition coarsens every datum before
/// the preliminary machinery runs on the compressed universe.
pub fn run_final_trial(
    params: &FinalUTestParams,
    data: &Pmf,
    public_seed: u64,
    rng: &Rng,
) -> Result<UtTrialRecord> {
    if data.max_point() as u64 > params.d {
        return Err(Error::parameter(format!(
            "data distribution reaches {} but the universe is [1, {}]",
            data.max_point(),
            params.d
        )));
    }
    let partition = Partition::from_seed(params.d, params.dhat, public_seed)?;
    let mut data_rng = rng.substream(DATA_STREAM);
    let dataset = sample_dataset(data, params.inner.n_expected, &mut data_rng)?;
    run_tester_on(&dataset, &params.inner, Some(&partition), rng)
}

fn run_tester_on(
    dataset: &[u64],
    params: &UTestParams,
    partition: Option<&Partition>,
    rng: &Rng,
) -> Result<UtTrialRecord> {
    let n = dataset.len();
    let polya = if n > 0 { Some(PolyaSampler::new(2.0 / n as f64, params.lam)?) } else { None };
    let transcript = model::execute(
        params.d as usize,
        params.m,
        dataset,
        &Attack::none(),
        |_, &x, user_rng| {
            let category = match partition {
                Some(part) => part.coarsen(x)?,
                None => x,
            };
            ut_randomize_with(category, params, polya.as_ref().expect("n > 0"), user_rng)
        },
        |batch, _| if batch.is_empty() { None } else { Some(model::aggregate(batch)) },
        |agg: &Option<Vec<u64>>, analyzer_rng| analyze(agg.as_deref(), params, analyzer_rng),
        rng,
    )?;
    let outcome = transcript.analyzer_output?;
    Ok(UtTrialRecord {
        n: n as u64,
        z_prime: outcome.z_prime,
        ell: outcome.ell,
        verdict: outcome.verdict,
    })
}
