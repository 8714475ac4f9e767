//! Bounded sums of `[0,1]` values with `O(1/eps)` error.
//!
//! Each user encodes `x` by randomized rounding to an integer in `[0, g]`,
//! adds the difference of two Polya(2/n, lam) draws, and reduces modulo `m`.
//! Summing the per-user Polya noise across any `n/2` users yields one
//! discrete Laplace draw (infinite divisibility), so with at least half the
//! users honest the aggregate carries a full `DLap(lam)` sample with
//! `lam = exp(-eps/g)` — the scale the discrete Laplace mechanism needs for
//! a sensitivity-`g` sum. The analyzer undoes the modular wraparound with a
//! threshold test and rescales by `g`.
//!
//! With `g = ceil(eps*sqrt(n))`, `tau = ceil((g/eps) ln(2/q))` and
//! `m = n*g + 4*tau`, the estimate lands within `2*tau/g +
//! (1/eps)*sqrt(ln(2/q))` of the true sum except with probability about
//! `q_hat + 3q` (aggregator failure plus noise and rounding tails).

use crate::dist::{dlap_truncated, sd_distance, Pmf, PolyaSampler, Rng};
use crate::model::{self, Attack, MessageBatch};
use crate::relagg::{bit_sum_mod, RelAggParams, RelAggRandomizer};
use crate::{Error, Result};

/// Parameters of the bounded-sum protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct SumParams {
    pub eps: f64,
    pub q: f64,
    pub n: usize,
    /// Encoding scale `ceil(eps * sqrt(n))`.
    pub g: u64,
    /// Wraparound guard `ceil((g/eps) * ln(2/q))`.
    pub tau: u64,
    /// Modulus `n*g + 4*tau`.
    pub m: u64,
    /// Polya scale `exp(-eps/g)`.
    pub lam: f64,
}

impl SumParams {
    /// Derives parameters from the privacy target, failure target, and user
    /// count. `n` must be even: the noise analysis splits users into two
    /// halves, and odd counts are rejected rather than silently floored.
    pub fn select(eps: f64, q: f64, n: usize) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::parameter(format!("eps={eps} outside (0,1]")));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::parameter(format!("q={q} outside (0,1)")));
        }
        if n < 2 {
            return Err(Error::parameter(format!("user count n={n} must be at least 2")));
        }
        if !n.is_multiple_of(2) {
            return Err(Error::parameter(format!("user count n={n} must be even")));
        }
        let g = (eps * (n as f64).sqrt()).ceil() as u64;
        let tau = ((g as f64 / eps) * (2.0 / q).ln()).ceil() as u64;
        let m = n as u64 * g + 4 * tau;
        let lam = (-eps / g as f64).exp();
        Ok(SumParams { eps, q, n, g, tau, m, lam })
    }

    /// The binary-data configuration: `g` forced to 1 (rounding is lossless
    /// on bits), with `tau`, `m`, `lam` assigned by the same rules.
    pub fn select_binary(eps: f64, q: f64, n: usize) -> Result<Self> {
        let mut params = SumParams::select(eps, q, n)?;
        params.g = 1;
        params.tau = ((2.0 / q).ln() / eps).ceil() as u64;
        params.m = n as u64 + 4 * params.tau;
        params.lam = (-eps).exp();
        Ok(params)
    }

    /// The wraparound threshold `n*g + 2*tau` used by the analyzer.
    pub fn wrap_threshold(&self) -> u64 {
        self.n as u64 * self.g + 2 * self.tau
    }
}

/// Randomized rounding: `floor(x*g)` plus a Bernoulli draw of the fractional
/// part, an unbiased integer encoding with expectation exactly `x*g`.
pub fn encode_round(x: f64, g: u64, rng: &mut Rng) -> Result<u64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::parameter(format!("input {x} outside [0,1]")));
    }
    let scaled = x * g as f64;
    let floor = scaled.floor();
    let frac = scaled - floor;
    Ok(floor as u64 + u64::from(rng.bernoulli(frac)))
}

/// Per-user randomizer with the Polya sampler precomputed; reuse across
/// users and trials.
#[derive(Debug, Clone)]
pub struct SumRandomizer {
    params: SumParams,
    polya: PolyaSampler,
}

impl SumRandomizer {
    pub fn new(params: &SumParams) -> Result<Self> {
        let polya = PolyaSampler::new(2.0 / params.n as f64, params.lam)?;
        Ok(SumRandomizer { params: params.clone(), polya })
    }

    pub fn params(&self) -> &SumParams {
        &self.params
    }

    /// Encode, add the two-sided Polya noise, reduce mod `m`.
    pub fn randomize(&self, x: f64, rng: &mut Rng) -> Result<u64> {
        let phi = encode_round(x, self.params.g, rng)?;
        let up = self.polya.sample(rng) as i128;
        let down = self.polya.sample(rng) as i128;
        Ok(noised_residue(phi, up - down, self.params.m))
    }

    /// Noise-suppressed variant for unit tests: the caller pins the two
    /// Polya draws. Not reachable outside the crate; production sampling is
    /// unconditional.
    #[cfg(test)]
    pub(crate) fn randomize_forced(&self, x: f64, up: u64, down: u64, rng: &mut Rng) -> Result<u64> {
        let phi = encode_round(x, self.params.g, rng)?;
        Ok(noised_residue(phi, up as i128 - down as i128, self.params.m))
    }
}

/// `(phi + delta) mod m` with a possibly negative noise difference.
pub(crate) fn noised_residue(phi: u64, delta: i128, m: u64) -> u64 {
    (phi as i128 + delta).rem_euclid(m as i128) as u64
}

/// One-shot form of [`SumRandomizer::randomize`].
pub fn randomize(x: f64, params: &SumParams, rng: &mut Rng) -> Result<u64> {
    SumRandomizer::new(params)?.randomize(x, rng)
}

/// The analyzer: undo the wraparound if the residue is implausibly large,
/// then rescale. The boundary `y = n*g + 2*tau` itself is *not* wrapped.
pub fn decode(y: u64, params: &SumParams) -> Result<f64> {
    if y >= params.m {
        return Err(Error::parameter(format!("residue {y} not below modulus {}", params.m)));
    }
    if y > params.wrap_threshold() {
        Ok((y as f64 - params.m as f64) / params.g as f64)
    } else {
        Ok(y as f64 / params.g as f64)
    }
}

/// Which functionality plays the modular aggregator.
#[derive(Debug, Clone)]
pub enum AggregatorKind {
    /// The ideal functionality: exact coordinatewise modular sum.
    Ideal,
    /// The shuffle-based relaxed aggregator: every residue is re-encoded as
    /// a binary vector, all bits pass through an ideal shuffler, and the
    /// ones-count mod `m` is reported. Message length grows quickly with
    /// `n`; see [`relagg`](crate::relagg).
    Relagg(RelAggParams),
}

/// Guard on the total bits materialized per trial by the relagg-backed
/// aggregator.
pub const RELAGG_BITS_GUARD: u64 = 1 << 26;

/// Runs one protocol execution and returns the analyzer's estimate of the
/// sum of `inputs`.
pub fn run_bounded_sum(
    inputs: &[f64],
    params: &SumParams,
    aggregator: &AggregatorKind,
    attack: &Attack,
    rng: &Rng,
) -> Result<f64> {
    Ok(run_bounded_sum_transcript(inputs, params, aggregator, attack, rng)?.analyzer_output)
}

/// Like [`run_bounded_sum`] but returns the whole transcript.
pub fn run_bounded_sum_transcript(
    inputs: &[f64],
    params: &SumParams,
    aggregator: &AggregatorKind,
    attack: &Attack,
    rng: &Rng,
) -> Result<model::Transcript<f64, Vec<u64>, f64>> {
    if inputs.len() != params.n {
        return Err(Error::structural(format!(
            "got {} inputs for n={} users",
            inputs.len(),
            params.n
        )));
    }
    let randomizer = SumRandomizer::new(params)?;
    let relagg_randomizer = match aggregator {
        AggregatorKind::Ideal => None,
        AggregatorKind::Relagg(rel_params) => {
            if rel_params.m != params.m {
                return Err(Error::parameter(format!(
                    "relaxed aggregator modulus {} does not match sum modulus {}",
                    rel_params.m, params.m
                )));
            }
            let bits = rel_params.msg_len * params.n as u64;
            if bits > RELAGG_BITS_GUARD {
                return Err(Error::resource(format!(
                    "relagg-backed aggregation would materialize {bits} bits (guard {RELAGG_BITS_GUARD}); \
                     it is only practical for small n"
                )));
            }
            Some(RelAggRandomizer::new(rel_params)?)
        }
    };

    model::execute(
        1,
        params.m,
        inputs,
        attack,
        |_, &x, user_rng| Ok(vec![randomizer.randomize(x, user_rng)?]),
        |batch: &MessageBatch, agg_rng| match &relagg_randomizer {
            None => model::aggregate(batch),
            Some(rel) => {
                // Simulate the relaxed aggregator: each residue row becomes a
                // binary vector, the shuffler mixes all the bits, and the
                // ones-count mod m is the functionality's output.
                let mut bit_batch = MessageBatch::new(rel.params().msg_len as usize, 2)
                    .expect("valid bit batch shape");
                for (i, row) in batch.rows().iter().enumerate() {
                    let mut row_rng = agg_rng.substream(i as u64);
                    let bits = rel
                        .randomize(row[0], &mut row_rng)
                        .expect("residue already validated by the batch");
                    bit_batch.push_row(bits).expect("bit rows are well-formed");
                }
                let mut shuffle_rng = agg_rng.substream(u64::MAX);
                let shuffled = model::shuffle(&bit_batch, &mut shuffle_rng);
                vec![bit_sum_mod(&shuffled, batch.modulus())]
            }
        },
        |output: &Vec<u64>, _| decode(output[0], params).expect("aggregate is below m"),
        rng,
    )
}

/// The central summation oracle: encode every input, add its two Polya
/// draws, and return the *unreduced* integer total. Its distribution on
/// neighboring inputs upper-bounds what any attacked modular execution can
/// leak, so its LLR is the protocol's privacy oracle. The Polya shape is
/// `2/len(inputs)`.
pub fn central_oracle(inputs: &[f64], g: u64, lam: f64, rng: &mut Rng) -> Result<i64> {
    if inputs.is_empty() {
        return Ok(0);
    }
    if !(lam > 0.0 && lam < 1.0) {
        return Err(Error::parameter(format!("lam={lam} outside (0,1)")));
    }
    let polya = PolyaSampler::new(2.0 / inputs.len() as f64, lam)?;
    let mut total: i64 = 0;
    for &x in inputs {
        let phi = encode_round(x, g, rng)?;
        total += phi as i64;
        total += polya.sample(rng) as i64;
        total -= polya.sample(rng) as i64;
    }
    Ok(total)
}

/// Exact pmf of the aggregate noise contributed by `n` users, i.e. the
/// `2n`-fold signed convolution of Polya(2/n, lam). By divisibility this is
/// the convolution of two `DLap(lam)` draws.
pub fn aggregate_noise_pmf(n: usize, lam: f64, tail_cut: f64) -> Result<Pmf> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::parameter(format!("noise pmf needs even n, got {n}")));
    }
    let part = crate::dist::polya(2.0 / n as f64, lam, tail_cut)?;
    let neg = part.negate();
    let mut acc = part.clone();
    for _ in 1..n {
        acc = acc.convolve(&part);
    }
    for _ in 0..n {
        acc = acc.convolve(&neg);
    }
    Ok(acc)
}

/// Report of the exact binary-case noise decomposition (the `g = 1`
/// configuration, where rounding is lossless).
#[derive(Debug, Clone, serde::Serialize)]
pub struct NoiseDecomposition {
    /// Exact mass one `DLap(lam)` half places outside `[-tau, tau]`.
    pub out_of_range_mass: f64,
    /// Per-half requirement `out_of_range_mass <= q`.
    pub half_bound_ok: bool,
    /// Total mixture weight off the truncated component, at most `2q` (plus
    /// the aggregator's own failure rate, zero for the ideal one).
    pub gamma_upper: f64,
    /// TV between the renormalized in-range aggregate noise and the
    /// convolution of two truncated discrete Laplace pmfs.
    pub conditional_tv: f64,
    pub pass: bool,
}

/// Checks that the aggregate noise, conditioned on both halves staying in
/// `[-tau, tau]`, is exactly the convolution of two truncated discrete
/// Laplace draws — computed through the Polya route on one side and the
/// closed-form truncated constructor on the other.
pub fn binary_noise_report(params: &SumParams) -> Result<NoiseDecomposition> {
    if params.g != 1 {
        return Err(Error::parameter(format!(
            "the binary decomposition applies to g=1, got g={}",
            params.g
        )));
    }
    let tau = params.tau as i64;
    // One half of the users: n/2 users contribute n Polya(2/n) draws.
    let half = aggregate_noise_pmf(params.n, params.lam, 1e-12)?;
    // aggregate_noise_pmf over n users is DLap * DLap; recompute one half
    // as the n-fold signed convolution directly.
    let part = crate::dist::polya(2.0 / params.n as f64, params.lam, 1e-12)?;
    let neg = part.negate();
    let mut half_noise = part.clone();
    for _ in 1..params.n / 2 {
        half_noise = half_noise.convolve(&part);
    }
    for _ in 0..params.n / 2 {
        half_noise = half_noise.convolve(&neg);
    }
    let in_range_mass: f64 = half_noise
        .entries()
        .iter()
        .filter(|&&(v, _)| -tau <= v && v <= tau)
        .map(|&(_, p)| p)
        .sum();
    let w = 1.0 - in_range_mass / half_noise.total_mass();
    let half_ok = w <= params.q;

    let conditioned = half_noise.restrict(-tau, tau)?;
    let both = conditioned.convolve(&conditioned);
    let truncated = dlap_truncated(params.tau, 0, params.lam)?;
    let reference = truncated.convolve(&truncated);
    let tv = sd_distance(&both, &reference);

    // `half` is the full-population noise; sanity-tie it to the two-half
    // split: total out-of-range weight is at most 2w by a union bound.
    let _ = half;
    Ok(NoiseDecomposition {
        out_of_range_mass: w,
        half_bound_ok: half_ok,
        gamma_upper: 2.0 * params.q,
        conditional_tv: tv,
        pass: half_ok && tv <= 1e-8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{dlap, llr_distance};

    #[test]
    fn select_matches_reference_values() {
        let p = SumParams::select(1.0, 0.05, 100).unwrap();
        assert_eq!((p.g, p.tau, p.m), (10, 37, 1148));
        assert!((p.lam - 0.9048374180359595).abs() < 1e-15);

        let big = SumParams::select(1.0, 0.05, 10_000).unwrap();
        assert_eq!((big.g, big.tau, big.m), (100, 369, 1_001_476));
    }

    #[test]
    fn select_rejects_odd_n_and_bad_ranges() {
        assert!(SumParams::select(1.0, 0.05, 101).is_err());
        assert!(SumParams::select(0.0, 0.05, 100).is_err());
        assert!(SumParams::select(1.0, 1.0, 100).is_err());
        assert!(SumParams::select(0.5, 0.05, 0).is_err());
        // g >= 1 for all valid inputs
        let tiny = SumParams::select(0.01, 0.4, 2).unwrap();
        assert!(tiny.g >= 1);
    }

    #[test]
    fn encode_round_endpoints() {
        let mut rng = Rng::new(0, 0);
        for _ in 0..50 {
            assert_eq!(encode_round(0.0, 10, &mut rng).unwrap(), 0);
            assert_eq!(encode_round(1.0, 10, &mut rng).unwrap(), 10);
        }
        assert!(encode_round(1.5, 10, &mut rng).is_err());
        assert!(encode_round(-0.1, 10, &mut rng).is_err());
    }

    #[test]
    fn encode_round_fractional_part() {
        // x=0.25, g=10: floor 2, Ber(0.5)
        let mut rng = Rng::new(7, 0);
        let n = 100_000;
        let mut threes = 0u64;
        for _ in 0..n {
            let v = encode_round(0.25, 10, &mut rng).unwrap();
            assert!(v == 2 || v == 3);
            threes += u64::from(v == 3);
        }
        let frac = threes as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.008, "frac {frac}"); // ~5 sigma
    }

    #[test]
    fn randomizer_stays_in_range_and_decodes() {
        let params = SumParams::select(0.9, 0.2, 4).unwrap();
        let r = SumRandomizer::new(&params).unwrap();
        let mut rng = Rng::new(3, 0);
        for _ in 0..500 {
            let y = r.randomize(0.7, &mut rng).unwrap();
            assert!(y < params.m);
            decode(y, &params).unwrap();
        }
    }

    #[test]
    fn forced_noise_is_deterministic_arithmetic() {
        let params = SumParams::select(0.9, 0.2, 4).unwrap();
        let r = SumRandomizer::new(&params).unwrap();
        let mut rng = Rng::new(3, 1);
        // zero noise, x=0: always 0
        assert_eq!(r.randomize_forced(0.0, 0, 0, &mut rng).unwrap(), 0);
        // negative noise wraps mod m
        let y = r.randomize_forced(0.0, 0, 3, &mut rng).unwrap();
        assert_eq!(y, params.m - 3);
    }

    #[test]
    fn decode_branches() {
        // n=100, g=10, tau=37 (m=1148): threshold 1074
        let params = SumParams::select(1.0, 0.05, 100).unwrap();
        assert_eq!(decode(500, &params).unwrap(), 50.0);
        assert_eq!(decode(1147, &params).unwrap(), -0.1);
        assert_eq!(decode(0, &params).unwrap(), 0.0);
        // the boundary itself takes the else-branch
        let b = params.wrap_threshold();
        assert_eq!(decode(b, &params).unwrap(), b as f64 / params.g as f64);
        assert!(decode(params.m, &params).is_err());
    }

    #[test]
    fn central_oracle_basics() {
        let mut rng = Rng::new(5, 0);
        assert_eq!(central_oracle(&[], 10, 0.5, &mut rng).unwrap(), 0);

        // E[output] = g * sum(x): noise is mean-zero
        let inputs = vec![0.5f64; 4];
        let g = 3u64;
        let n = 30_000;
        let mut acc = 0i64;
        for _ in 0..n {
            acc += central_oracle(&inputs, g, 0.5, &mut rng).unwrap();
        }
        let mean = acc as f64 / n as f64;
        let expected = g as f64 * 2.0;
        assert!((mean - expected).abs() < 0.1, "mean {mean} vs {expected}");
    }

    #[test]
    fn aggregate_noise_is_two_dlap_convolutions() {
        // Exact check of the divisibility route for n=4 users.
        let lam = (-1.0f64).exp();
        let noise = aggregate_noise_pmf(4, lam, 1e-12).unwrap();
        let single = dlap(lam, 1e-12).unwrap();
        let two = single.convolve(&single);
        assert!(sd_distance(&noise, &two) < 1e-8);
    }

    #[test]
    fn binary_noise_decomposition_passes() {
        let params = SumParams::select_binary(1.0, 0.05, 4).unwrap();
        assert_eq!(params.g, 1);
        assert_eq!(params.tau, 4);
        assert!((params.lam - (-1.0f64).exp()).abs() < 1e-15);
        let report = binary_noise_report(&params).unwrap();
        // exact geometric tail: 2 lam^(tau+1) / (1+lam)
        let lam = params.lam;
        let predicted = 2.0 * lam.powi(params.tau as i32 + 1) / (1.0 + lam);
        assert!((report.out_of_range_mass - predicted).abs() < 1e-10);
        assert!(report.half_bound_ok);
        assert!(report.conditional_tv <= 1e-8, "tv {}", report.conditional_tv);
        assert!(report.pass);

        let not_binary = SumParams::select(1.0, 0.05, 100).unwrap();
        assert!(binary_noise_report(&not_binary).is_err());
    }

    #[test]
    fn run_bounded_sum_small_smoke() {
        let params = SumParams::select(0.9, 0.2, 4).unwrap();
        let inputs = [0.0, 0.25, 0.5, 1.0];
        let est =
            run_bounded_sum(&inputs, &params, &AggregatorKind::Ideal, &Attack::none(), &Rng::new(7, 0))
                .unwrap();
        // crude sanity: within the accuracy envelope with huge margin
        let bound = 2.0 * params.tau as f64 / params.g as f64
            + (2.0f64 / params.q).ln().sqrt() / params.eps;
        assert!((est - 1.75).abs() <= bound, "est {est}");
        // wrong input count is structural
        assert!(run_bounded_sum(&[0.1], &params, &AggregatorKind::Ideal, &Attack::none(), &Rng::new(0, 0))
            .is_err());
    }

    #[test]
    fn privacy_oracle_exact_llr_small() {
        // n=4, g=1, binary inputs with forced encodings: the noised-total
        // pmfs of neighbors are shifts of the same aggregate-noise law; over
        // the central 1-1e-9 region the pointwise LLR stays below eps + 0.01.
        let eps = 1.0;
        let g = 1u64;
        let lam = (-eps / g as f64).exp();
        let noise = aggregate_noise_pmf(4, lam, 1e-12).unwrap();
        let p = noise.shift(2); // sum of (1,1,0,0)
        let q = noise.shift(1); // neighbor (1,0,0,0)
        let (lo_p, hi_p) = central_region(&p, 1e-9);
        let (lo_q, hi_q) = central_region(&q, 1e-9);
        let (lo, hi) = (lo_p.max(lo_q), hi_p.min(hi_q));
        let mut worst: f64 = 0.0;
        for v in lo..=hi {
            let ratio = (p.prob(v) / q.prob(v)).ln().abs();
            worst = worst.max(ratio);
        }
        assert!(worst <= eps + 0.01, "worst llr {worst}");
    }

    fn central_region(p: &Pmf, tail: f64) -> (i64, i64) {
        let entries = p.entries();
        let half = tail / 2.0;
        let mut lo_idx = 0;
        let mut acc = 0.0;
        while acc + entries[lo_idx].1 < half {
            acc += entries[lo_idx].1;
            lo_idx += 1;
        }
        let mut hi_idx = entries.len() - 1;
        acc = 0.0;
        while acc + entries[hi_idx].1 < half {
            acc += entries[hi_idx].1;
            hi_idx -= 1;
        }
        (entries[lo_idx].0, entries[hi_idx].0)
    }

    #[test]
    fn relagg_backed_sum_smoke() {
        // Tiny composed run: n=2 users, relaxed aggregator simulated by the
        // shuffle construction end to end.
        let params = SumParams::select(0.9, 0.4, 2).unwrap();
        let rel = RelAggParams::select(params.m, params.n, 0.8, 0.4).unwrap();
        let est = run_bounded_sum(
            &[0.5, 1.0],
            &params,
            &AggregatorKind::Relagg(rel),
            &Attack::none(),
            &Rng::new(13, 0),
        )
        .unwrap();
        let bound = 2.0 * params.tau as f64 / params.g as f64
            + (2.0f64 / params.q).ln().sqrt() / params.eps
            + 1.0; // q_hat slack: relagg may miscount outright
        assert!((est - 1.5).abs() <= bound + params.m as f64 / params.g as f64, "est {est}");

        // mismatched modulus is rejected
        let wrong = RelAggParams::select(params.m + 1, params.n, 0.8, 0.4).unwrap();
        assert!(matches!(
            run_bounded_sum(
                &[0.5, 1.0],
                &params,
                &AggregatorKind::Relagg(wrong),
                &Attack::none(),
                &Rng::new(0, 0)
            ),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn dropout_attack_shrinks_expected_sum() {
        let params = SumParams::select(0.9, 0.2, 4).unwrap();
        let inputs = [1.0, 1.0, 1.0, 1.0];
        let attack = Attack::dropouts([0, 1]);
        let est = run_bounded_sum(&inputs, &params, &AggregatorKind::Ideal, &attack, &Rng::new(9, 0))
            .unwrap();
        let bound = 2.0 * params.tau as f64 / params.g as f64
            + (2.0f64 / params.q).ln().sqrt() / params.eps;
        // honest half contributes ~2
        assert!((est - 2.0).abs() <= bound, "est {est}");
    }

    #[test]
    fn noise_magnitude_tail_bound() {
        // |sum of all Polya differences| > 2*tau with probability <= 2q:
        // read the exact mass off the aggregate-noise pmf.
        let params = SumParams::select(1.0, 0.05, 4).unwrap();
        let noise = aggregate_noise_pmf(params.n, params.lam, 1e-12).unwrap();
        let bound = 2 * params.tau as i64;
        let outside: f64 = noise
            .entries()
            .iter()
            .filter(|&&(v, _)| v.abs() > bound)
            .map(|&(_, p)| p)
            .sum();
        assert!(outside <= 2.0 * params.q, "outside {outside}");
    }

    #[test]
    fn llr_of_shifted_noise_matches_mechanism_scale() {
        // One DLap(lam) draw alone gives ratio exactly eps/g per unit shift;
        // the doubled noise can only help.
        let params = SumParams::select(1.0, 0.05, 4).unwrap();
        let noise = aggregate_noise_pmf(params.n, params.lam, 1e-12).unwrap();
        let shifted = noise.shift(1);
        let central_noise = noise.restrict(-40, 40).unwrap();
        let central_shifted = shifted.restrict(-40 + 1, 40 + 1).unwrap();
        let llr = llr_distance(
            &central_noise.restrict(-39, 40).unwrap(),
            &central_shifted.restrict(-39, 40).unwrap(),
        );
        assert!(llr <= params.eps + 0.01, "llr {llr}");
    }
}
