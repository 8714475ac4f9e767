//! A relaxed modular aggregator built from a shuffler.
//!
//! Each user holding a residue `x` modulo `m` sends one binary vector of
//! length `m*t + (m-1)` whose number of ones is congruent to `x` mod `m` —
//! almost always. The ones-count is drawn from a mixture: with weight `1-p`
//! from the center-peaked window pushed onto the residue class of `x`
//! ([`residue_window`]), and with weight `p` from the tail blanket
//! ([`residue_blanket`]). After an ideal shuffler mixes all the bits, the
//! analyzer recovers the modular sum by counting ones.
//!
//! The blanket is what makes likelihood ratios finite: without it the
//! all-zero output is possible under some inputs and impossible under
//! others with the same modular sum, so no finite LLR bound can hold. With
//! parameters `lam = eps_hat/(4n)`, `p = q_hat/n`, and any odd `t` at least
//! `3 + 4/lam + (2/lam) ln(m^2/(lam p^2))`, composing the randomizer with an
//! `(eps, q)`-relaxed shuffler yields an `(eps + eps_hat, q + q_hat)`-relaxed
//! aggregator; the ideal shuffler used in experiments contributes
//! `eps = q = 0`.
//!
//! Because the shuffler's output is equivalent to the total ones-count, the
//! exact distribution of that count — an `n`-fold convolution of mixture
//! pmfs — is a faithful oracle for the security claims, and small instances
//! can be checked without enumerating permutations.

use crate::dist::{llr_distance, mixture, residue_blanket, residue_window, Pmf, PmfSampler, Rng};
use crate::model::{self, Attack, MessageBatch};
use crate::{Error, Result};

/// Guard on `n * msg_len` for the exact convolution oracles.
pub const EXACT_SUPPORT_GUARD: u64 = 1_000_000;

/// Parameters of the shuffle-based relaxed aggregator.
#[derive(Debug, Clone, PartialEq)]
pub struct RelAggParams {
    /// Modulus of the sums being aggregated.
    pub m: u64,
    /// Number of users.
    pub n: usize,
    /// Security target added by this layer.
    pub eps_hat: f64,
    /// Failure-probability target added by this layer.
    pub q_hat: f64,
    /// Window rate `eps_hat / (4n)`.
    pub lam: f64,
    /// Blanket mixture weight `q_hat / n`.
    pub p: f64,
    /// Window width: the smallest odd integer meeting the security bound.
    pub t: u64,
    /// Per-user message length `m*t + (m-1)`.
    pub msg_len: u64,
}

/// The smallest odd `t` with `t >= 3 + 4/lam + (2/lam) ln(m^2/(lam p^2))`.
fn minimal_odd_t(m: u64, lam: f64, p: f64) -> u64 {
    let bound = 3.0 + 4.0 / lam + (2.0 / lam) * ((m * m) as f64 / (lam * p * p)).ln();
    smallest_odd_at_least(bound)
}

pub(crate) fn smallest_odd_at_least(bound: f64) -> u64 {
    let mut t = bound.ceil().max(1.0) as u64;
    if t.is_multiple_of(2) {
        t += 1;
    }
    while (t as f64) < bound {
        t += 2;
    }
    t
}

impl RelAggParams {
    /// Derives parameters from the privacy and failure targets.
    pub fn select(m: u64, n: usize, eps_hat: f64, q_hat: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::parameter(format!("modulus m={m} must be at least 2")));
        }
        if n < 1 {
            return Err(Error::parameter("user count n must be at least 1"));
        }
        if !(eps_hat > 0.0 && eps_hat < 1.0) {
            return Err(Error::parameter(format!("eps_hat={eps_hat} outside (0,1)")));
        }
        if !(q_hat > 0.0 && q_hat < 1.0) {
            return Err(Error::parameter(format!("q_hat={q_hat} outside (0,1)")));
        }
        let lam = eps_hat / (4.0 * n as f64);
        let p = q_hat / n as f64;
        let t = minimal_odd_t(m, lam, p);
        Ok(RelAggParams { m, n, eps_hat, q_hat, lam, p, t, msg_len: m * t + m - 1 })
    }

    /// The ones-count distribution of one honest user holding residue `x`.
    pub fn ones_pmf(&self, x: u64) -> Result<Pmf> {
        let window = residue_window(x, self.m, self.t, self.lam)?;
        let blanket = residue_blanket(self.m, self.t, self.lam)?;
        mixture(&[1.0 - self.p, self.p], &[window, blanket])
    }

    /// Same but for the naive randomizer, which omits the blanket.
    pub fn ones_pmf_naive(&self, x: u64) -> Result<Pmf> {
        residue_window(x, self.m, self.t, self.lam)
    }
}

/// Builds a binary vector of length `len` with `ones` ones in uniformly
/// random positions (Floyd's sampling). Any placement would do — the
/// shuffler erases positions — but uniform placement keeps unshuffled
/// transcripts unremarkable.
fn place_ones(len: u64, ones: u64, rng: &mut Rng) -> Vec<u64> {
    debug_assert!(ones <= len);
    let mut bits = vec![0u64; len as usize];
    for slot in len - ones..len {
        let j = rng.next_below(slot + 1) as usize;
        if bits[j] == 1 {
            bits[slot as usize] = 1;
        } else {
            bits[j] = 1;
        }
    }
    bits
}

/// Cached per-residue samplers for the randomizer; build once per protocol
/// run and reuse across users and trials.
#[derive(Debug, Clone)]
pub struct RelAggRandomizer {
    params: RelAggParams,
    mixed: Vec<PmfSampler>,
    naive: Vec<PmfSampler>,
}

impl RelAggRandomizer {
    pub fn new(params: &RelAggParams) -> Result<Self> {
        let mut mixed = Vec::with_capacity(params.m as usize);
        let mut naive = Vec::with_capacity(params.m as usize);
        for x in 0..params.m {
            mixed.push(params.ones_pmf(x)?.sampler());
            naive.push(params.ones_pmf_naive(x)?.sampler());
        }
        Ok(RelAggRandomizer { params: params.clone(), mixed, naive })
    }

    pub fn params(&self) -> &RelAggParams {
        &self.params
    }

    /// The full randomizer: a binary vector whose ones-count is drawn from
    /// the window/blanket mixture for residue `x`.
    pub fn randomize(&self, x: u64, rng: &mut Rng) -> Result<Vec<u64>> {
        if x >= self.params.m {
            return Err(Error::parameter(format!(
                "input residue {x} not below modulus {}",
                self.params.m
            )));
        }
        let ones = self.mixed[x as usize].sample(rng) as u64;
        Ok(place_ones(self.params.msg_len, ones, rng))
    }

    /// The naive randomizer: blanket weight forced to zero. Its ones-count
    /// is always congruent to `x`, which is exactly why it cannot be secure:
    /// the supports of different equal-sum inputs do not coincide.
    pub fn randomize_naive(&self, x: u64, rng: &mut Rng) -> Result<Vec<u64>> {
        if x >= self.params.m {
            return Err(Error::parameter(format!(
                "input residue {x} not below modulus {}",
                self.params.m
            )));
        }
        let ones = self.naive[x as usize].sample(rng) as u64;
        Ok(place_ones(self.params.msg_len, ones, rng))
    }
}

/// One-shot form of [`RelAggRandomizer::randomize`].
pub fn randomize(x: u64, params: &RelAggParams, rng: &mut Rng) -> Result<Vec<u64>> {
    RelAggRandomizer::new(params)?.randomize(x, rng)
}

/// One-shot form of [`RelAggRandomizer::randomize_naive`].
pub fn randomize_naive(x: u64, params: &RelAggParams, rng: &mut Rng) -> Result<Vec<u64>> {
    RelAggRandomizer::new(params)?.randomize_naive(x, rng)
}

/// The analyzer's post-processing: the ones-count of the shuffled bits,
/// reduced modulo `m`. Permutation-invariant by construction.
pub fn bit_sum_mod(bits: &[u64], m: u64) -> u64 {
    bits.iter().sum::<u64>() % m
}

/// A bit tagged with the coordinate it encodes, for the `d > 1` extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledBit {
    pub label: u32,
    pub bit: u64,
}

/// The `d`-dimensional extension: runs the randomizer once per coordinate
/// and tags every produced bit with its coordinate label, so a joint shuffle
/// of all labeled bits still lets the analyzer split them back apart.
pub fn randomize_labeled(
    xs: &[u64],
    randomizer: &RelAggRandomizer,
    rng: &mut Rng,
) -> Result<Vec<LabeledBit>> {
    let mut out = Vec::with_capacity(xs.len() * randomizer.params.msg_len as usize);
    for (j, &x) in xs.iter().enumerate() {
        for bit in randomizer.randomize(x, rng)? {
            out.push(LabeledBit { label: j as u32, bit });
        }
    }
    Ok(out)
}

/// Groups shuffled labeled bits by label and applies [`bit_sum_mod`] per
/// group. A label with no bits decodes to 0.
pub fn decode_labeled(messages: &[LabeledBit], m: u64, d: usize) -> Vec<u64> {
    let mut counts = vec![0u64; d];
    for msg in messages {
        if (msg.label as usize) < d {
            counts[msg.label as usize] += msg.bit;
        }
    }
    counts.iter().map(|&c| c % m).collect()
}

fn guarded_len(xs: &[u64], params: &RelAggParams) -> Result<()> {
    let cost = xs.len() as u64 * params.msg_len;
    if cost > EXACT_SUPPORT_GUARD {
        return Err(Error::resource(format!(
            "exact oracle support {cost} exceeds guard {EXACT_SUPPORT_GUARD}"
        )));
    }
    Ok(())
}

/// Exact distribution of the total ones-count across `n` honest users: the
/// `n`-fold convolution of the per-user mixture pmfs. This is a lossless
/// stand-in for the shuffled output, since a shuffled batch of bits carries
/// exactly the information in its ones-count.
pub fn ones_count_pmf(xs: &[u64], params: &RelAggParams) -> Result<Pmf> {
    ones_count_pmf_impl(xs, params, false)
}

/// Exact ones-count distribution under the naive randomizer (no blanket).
pub fn ones_count_pmf_naive(xs: &[u64], params: &RelAggParams) -> Result<Pmf> {
    ones_count_pmf_impl(xs, params, true)
}

fn ones_count_pmf_impl(xs: &[u64], params: &RelAggParams, naive: bool) -> Result<Pmf> {
    if xs.is_empty() {
        return Err(Error::parameter("exact oracle needs at least one user"));
    }
    guarded_len(xs, params)?;
    let mut acc: Option<Pmf> = None;
    for &x in xs {
        let user = if naive { params.ones_pmf_naive(x)? } else { params.ones_pmf(x)? };
        acc = Some(match acc {
            None => user,
            Some(prev) => prev.convolve(&user),
        });
    }
    Ok(acc.unwrap())
}

/// Exact LLR distance between the ones-count distributions of two input
/// vectors. The security bound `eps_hat / n` applies when the two vectors
/// have equal sums modulo `m`; the distance is computed either way.
pub fn ones_count_llr(xs: &[u64], ys: &[u64], params: &RelAggParams) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::parameter(format!(
            "input vectors have lengths {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    Ok(llr_distance(&ones_count_pmf(xs, params)?, &ones_count_pmf(ys, params)?))
}

/// Outcome of one full shuffle-protocol execution.
#[derive(Debug, Clone)]
pub struct RelAggRun {
    pub reported: u64,
    pub expected: u64,
}

/// Runs one execution of the protocol through the model: honest users
/// randomize, corrupted users follow the attack, the ideal shuffler mixes
/// all bits, and the analyzer counts ones mod `m`. `expected` is the modular
/// sum of the *honest* inputs plus any injected rows' ones-counts.
pub fn run_shuffle_protocol(
    inputs: &[u64],
    randomizer: &RelAggRandomizer,
    attack: &Attack,
    rng: &Rng,
) -> Result<RelAggRun> {
    let params = randomizer.params();
    let transcript = model::execute(
        params.msg_len as usize,
        2,
        inputs,
        attack,
        |_, &x, user_rng| randomizer.randomize(x, user_rng),
        |batch: &MessageBatch, shuffle_rng| model::shuffle(batch, shuffle_rng),
        |shuffled: &Vec<u64>, _| bit_sum_mod(shuffled, params.m),
        rng,
    )?;

    let mut expected: u64 = 0;
    for (i, &x) in inputs.iter().enumerate() {
        match attack.injection(i) {
            Some(Some(row)) => expected += row.iter().sum::<u64>(),
            Some(None) => {}
            None => expected += x,
        }
    }
    Ok(RelAggRun { reported: transcript.analyzer_output, expected: expected % params.m })
}

/// Seeded correctness experiment: random inputs per trial, ideal shuffler,
/// counts how often the analyzer misses the true modular sum.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CorrectnessReport {
    pub trials: u64,
    pub miscounts: u64,
    pub frequency: f64,
    /// `q_hat` plus three-sigma binomial slack.
    pub bound: f64,
    pub pass: bool,
}

pub fn correctness_experiment(
    params: &RelAggParams,
    trials: u64,
    rng: &Rng,
) -> Result<CorrectnessReport> {
    let randomizer = RelAggRandomizer::new(params)?;
    let mut miscounts = 0u64;
    for trial in 0..trials {
        let trial_rng = rng.substream(trial);
        let mut input_rng = trial_rng.substream(u64::MAX);
        let inputs: Vec<u64> =
            (0..params.n).map(|_| input_rng.next_below(params.m)).collect();
        let run = run_shuffle_protocol(&inputs, &randomizer, &Attack::none(), &trial_rng)?;
        if run.reported != run.expected {
            miscounts += 1;
        }
    }
    let frequency = miscounts as f64 / trials as f64;
    let bound = params.q_hat + 3.0 * (params.q_hat / trials as f64).sqrt();
    Ok(CorrectnessReport { trials, miscounts, frequency, bound, pass: frequency <= bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::sd_distance;

    fn toy_params() -> RelAggParams {
        // Small hand-built instance for cheap tests; not security-valid.
        RelAggParams {
            m: 2,
            n: 2,
            eps_hat: 0.4,
            q_hat: 0.1,
            lam: 0.3,
            p: 0.1,
            t: 5,
            msg_len: 11,
        }
    }

    #[test]
    fn select_matches_reference_values() {
        let p = RelAggParams::select(2, 2, 0.4, 0.1).unwrap();
        assert_eq!(p.lam, 0.05);
        assert_eq!(p.p, 0.05);
        assert_eq!(p.t, 499); // bound evaluates to ~497.94
        assert_eq!(p.msg_len, 2 * 499 + 1);

        let p3 = RelAggParams::select(3, 2, 0.4, 0.1).unwrap();
        assert_eq!(p3.t, 531);
        assert_eq!(p3.msg_len, 3 * 531 + 2);
    }

    #[test]
    fn select_t_is_odd_and_lam_scales() {
        for m in [2u64, 3, 5] {
            for n in [1usize, 2, 7] {
                let p = RelAggParams::select(m, n, 0.7, 0.3).unwrap();
                assert_eq!(p.t % 2, 1, "m={m} n={n}");
            }
        }
        let full = RelAggParams::select(2, 4, 0.8, 0.1).unwrap();
        let half = RelAggParams::select(2, 4, 0.4, 0.1).unwrap();
        assert!((half.lam - full.lam / 2.0).abs() < 1e-15);
    }

    #[test]
    fn select_rejects_bad_ranges() {
        assert!(RelAggParams::select(1, 2, 0.4, 0.1).is_err());
        assert!(RelAggParams::select(2, 0, 0.4, 0.1).is_err());
        assert!(RelAggParams::select(2, 2, 1.0, 0.1).is_err());
        assert!(RelAggParams::select(2, 2, 0.4, 0.0).is_err());
    }

    #[test]
    fn randomizer_output_shape() {
        let params = toy_params();
        let r = RelAggRandomizer::new(&params).unwrap();
        let mut rng = Rng::new(1, 0);
        for x in 0..params.m {
            for _ in 0..50 {
                let bits = r.randomize(x, &mut rng).unwrap();
                assert_eq!(bits.len() as u64, params.msg_len);
                assert!(bits.iter().all(|&b| b <= 1));
            }
        }
        assert!(r.randomize(params.m, &mut rng).is_err());
    }

    #[test]
    fn naive_ones_count_always_matches_residue() {
        let params = toy_params();
        let r = RelAggRandomizer::new(&params).unwrap();
        let mut rng = Rng::new(2, 0);
        for x in 0..params.m {
            for _ in 0..200 {
                let bits = r.randomize_naive(x, &mut rng).unwrap();
                assert_eq!(bits.iter().sum::<u64>() % params.m, x);
            }
        }
    }

    #[test]
    fn naive_zero_possible_only_for_zero_residue() {
        let params = toy_params();
        // Pr[all-zero | x=0] = window mass at 0 > 0; for x=1 the minimum
        // ones-count is 1.
        let p0 = params.ones_pmf_naive(0).unwrap();
        assert!(p0.prob(0) > 0.0);
        let p1 = params.ones_pmf_naive(1).unwrap();
        assert_eq!(p1.min_point(), 1);
    }

    #[test]
    fn mixed_ones_count_mostly_matches_residue() {
        // Pr[count = x mod m] >= 1 - p, read off the exact pmf.
        let params = toy_params();
        for x in 0..params.m {
            let pmf = params.ones_pmf(x).unwrap();
            let mass_on_class: f64 = pmf
                .entries()
                .iter()
                .filter(|&&(v, _)| v as u64 % params.m == x)
                .map(|&(_, p)| p)
                .sum();
            assert!(mass_on_class >= 1.0 - params.p - 1e-12, "x={x}");
        }
    }

    #[test]
    fn bit_sum_mod_examples() {
        assert_eq!(bit_sum_mod(&[0, 0, 0], 5), 0);
        assert_eq!(bit_sum_mod(&[1; 7], 5), 2);
        let mut rng = Rng::new(0, 0);
        let mut bits = vec![1, 0, 1, 1, 0, 0, 1];
        let before = bit_sum_mod(&bits, 3);
        rng.shuffle(&mut bits);
        assert_eq!(bit_sum_mod(&bits, 3), before);
    }

    #[test]
    fn labeled_roundtrip() {
        let params = toy_params();
        let r = RelAggRandomizer::new(&params).unwrap();
        let mut rng = Rng::new(3, 1);
        let xs = [1u64, 0, 1];
        let mut labeled = randomize_labeled(&xs, &r, &mut rng).unwrap();
        assert_eq!(labeled.len() as u64, 3 * params.msg_len);

        // shuffling the labeled bits must not change the decoded residues
        let decoded_in_order = decode_labeled(&labeled, params.m, 3);
        rng.shuffle(&mut labeled);
        assert_eq!(decode_labeled(&labeled, params.m, 3), decoded_in_order);

        // an empty message list decodes to the zero vector
        assert_eq!(decode_labeled(&[], params.m, 2), vec![0, 0]);
    }

    #[test]
    fn labeled_decode_counts_per_group() {
        // 3 ones under label 0 and 7 under label 1, mod 5 -> (3, 2)
        let mut msgs = Vec::new();
        for _ in 0..3 {
            msgs.push(LabeledBit { label: 0, bit: 1 });
        }
        for _ in 0..7 {
            msgs.push(LabeledBit { label: 1, bit: 1 });
        }
        msgs.push(LabeledBit { label: 0, bit: 0 });
        assert_eq!(decode_labeled(&msgs, 5, 2), vec![3, 2]);
    }

    #[test]
    fn labeled_marginals_match_single_coordinate() {
        // Per-label ones-count frequencies agree with the exact mixture pmf.
        let params = toy_params();
        let r = RelAggRandomizer::new(&params).unwrap();
        let pmf = params.ones_pmf(1).unwrap();
        let mut rng = Rng::new(9, 0);
        let trials = 4000;
        let mut zero_label_counts = Vec::with_capacity(trials);
        for _ in 0..trials {
            let labeled = randomize_labeled(&[1, 0], &r, &mut rng).unwrap();
            let count: u64 = labeled.iter().filter(|b| b.label == 0).map(|b| b.bit).sum();
            zero_label_counts.push(count as f64);
        }
        let mean = zero_label_counts.iter().sum::<f64>() / trials as f64;
        let sigma = (pmf.variance() / trials as f64).sqrt();
        assert!((mean - pmf.mean()).abs() < 5.0 * sigma, "mean {mean} vs {}", pmf.mean());
    }

    #[test]
    fn exact_pmf_single_user_is_the_mixture() {
        let params = toy_params();
        let single = ones_count_pmf(&[1], &params).unwrap();
        assert_eq!(single, params.ones_pmf(1).unwrap());
        let naive = ones_count_pmf_naive(&[0], &params).unwrap();
        assert_eq!(naive, params.ones_pmf_naive(0).unwrap());
        assert!((single.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exact_llr_self_is_zero() {
        let params = toy_params();
        assert_eq!(ones_count_llr(&[0, 1], &[0, 1], &params).unwrap(), 0.0);
        assert!(ones_count_llr(&[0], &[0, 1], &params).is_err());
    }

    #[test]
    fn naive_llr_is_infinite_for_equal_sums() {
        let params = toy_params();
        let a = ones_count_pmf_naive(&[0, 0], &params).unwrap();
        let b = ones_count_pmf_naive(&[1, 1], &params).unwrap();
        assert!(a.prob(0) > 0.0);
        assert_eq!(b.prob(0), 0.0);
        assert_eq!(llr_distance(&a, &b), f64::INFINITY);
    }

    #[test]
    fn corrupt_shift_leaves_llr_unchanged() {
        // A fixed adversarial ones-count shifts both convolutions equally.
        let params = toy_params();
        let a = ones_count_pmf(&[0, 0], &params).unwrap();
        let b = ones_count_pmf(&[1, 1], &params).unwrap();
        let base = llr_distance(&a, &b);
        for adversarial in [1i64, 7, 20] {
            assert_eq!(llr_distance(&a.shift(adversarial), &b.shift(adversarial)), base);
        }
    }

    #[test]
    fn hybrid_collapse_within_full_budget() {
        // Collapsing any three-user input to (sum, 0, 0) moves the exact
        // ones-count law by at most eps_hat in LLR (two hybrid steps of
        // eps_hat/3 each, plus slack the bound never needs).
        let params = RelAggParams::select(2, 3, 0.4, 0.1).unwrap();
        let mut worst: f64 = 0.0;
        for bits in 0..8u64 {
            let x = [bits & 1, (bits >> 1) & 1, (bits >> 2) & 1];
            let total = (x[0] + x[1] + x[2]) % 2;
            let llr = ones_count_llr(&x, &[total, 0, 0], &params).unwrap();
            worst = worst.max(llr);
        }
        assert!(worst <= params.eps_hat + 1e-9, "worst hybrid LLR {worst}");
    }

    #[test]
    fn exact_oracle_guard_trips() {
        let params = RelAggParams::select(2, 2, 0.01, 0.01).unwrap();
        // enormous t: the guard must reject an n=2000-user oracle
        let xs = vec![0u64; 2000];
        assert!(matches!(ones_count_pmf(&xs, &params), Err(Error::Resource(_))));
    }

    #[test]
    fn protocol_run_with_dropouts() {
        let params = toy_params();
        let randomizer = RelAggRandomizer::new(&params).unwrap();
        let inputs = [1u64, 1];
        let attack = Attack::dropouts([0]);
        let run = run_shuffle_protocol(&inputs, &randomizer, &attack, &Rng::new(5, 0)).unwrap();
        assert_eq!(run.expected, 1);
        let zeros = run_shuffle_protocol(
            &inputs,
            &randomizer,
            &Attack::dropouts([0, 1]),
            &Rng::new(5, 1),
        )
        .unwrap();
        assert_eq!(zeros.expected, 0);
        assert_eq!(zeros.reported, 0); // no messages at all
    }

    #[test]
    fn small_correctness_experiment_passes() {
        let params = toy_params();
        let report = correctness_experiment(&params, 400, &Rng::new(11, 0)).unwrap();
        assert!(report.pass, "freq {} > bound {}", report.frequency, report.bound);
    }

    #[test]
    fn mixture_pmf_mass_is_one() {
        let params = toy_params();
        let two = ones_count_pmf(&[0, 1], &params).unwrap();
        assert!((two.total_mass() - 1.0).abs() < 1e-9);
        // mixture of window and blanket has the blanket's full support
        let one = params.ones_pmf(0).unwrap();
        assert_eq!(one.min_point(), 0);
        assert_eq!(one.max_point() as u64, params.msg_len);
    }

    #[test]
    fn two_user_exact_pmf_matches_independent_sampling() {
        // Monte-Carlo cross-check of the convolution oracle on a small case.
        let params = toy_params();
        let randomizer = RelAggRandomizer::new(&params).unwrap();
        let exact = ones_count_pmf(&[0, 1], &params).unwrap();
        let mut rng = Rng::new(21, 0);
        let trials = 20_000;
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..trials {
            let a = randomizer.randomize(0, &mut rng).unwrap();
            let b = randomizer.randomize(1, &mut rng).unwrap();
            let total: u64 = a.iter().sum::<u64>() + b.iter().sum::<u64>();
            *counts.entry(total as i64).or_insert(0u64) += 1;
        }
        let empirical =
            Pmf::from_entries(counts.into_iter().map(|(v, c)| (v, c as f64 / trials as f64)))
                .unwrap();
        // TV between empirical (20k draws, ~20-point support) and exact law
        assert!(sd_distance(&empirical, &exact) < 0.02);
    }
}
