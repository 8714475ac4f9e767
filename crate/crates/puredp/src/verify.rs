//! Numeric verification of the pointwise inequalities behind the security
//! arguments, computed from exact convolutions.
//!
//! Each check scans every relevant input pair and every point of the exact
//! supports, records the worst slack (the minimum of bound-minus-value over
//! all checked points), and passes exactly when that slack is at least
//! `-1e-9`. Summation order inside convolutions is fixed, so reports are
//! bit-for-bit reproducible. Support-size guards reject oversized instances
//! outright; nothing is ever subsampled.

use serde::Serialize;
use serde_json::json;

use crate::dist::{dlap, dlap_truncated, dlap_window, llr_distance, polya, sd_distance, Pmf};
use crate::relagg::{smallest_odd_at_least, RelAggParams};
use crate::{Error, Result};

/// Slack below which a checked inequality counts as violated.
pub const SLACK_TOL: f64 = 1e-9;

/// Supports larger than this are rejected by the exhaustive scans.
pub const SCAN_GUARD: u64 = 100_000;

/// Outcome of one exhaustive inequality check.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    /// Which claim was checked.
    pub claim: String,
    /// The parameter tuple the check ran at.
    pub params: serde_json::Value,
    /// Whether the claim's hypothesis held for these parameters. The check
    /// runs either way, so deliberately violated hypotheses can be observed
    /// to fail; compliant suites assert this flag together with `pass`.
    pub hypothesis_met: bool,
    /// Minimum of (bound - value) over every checked point.
    pub worst_slack: f64,
    /// Where the minimum occurred.
    pub worst_point: serde_json::Value,
    /// `worst_slack >= -1e-9`.
    pub pass: bool,
}

impl InequalityReport {
    fn new(
        claim: impl Into<String>,
        params: serde_json::Value,
        hypothesis_met: bool,
        worst_slack: f64,
        worst_point: serde_json::Value,
    ) -> Self {
        InequalityReport {
            claim: claim.into(),
            params,
            hypothesis_met,
            worst_slack,
            worst_point,
            pass: worst_slack >= -SLACK_TOL,
        }
    }
}

/// Tracks the minimum slack and the point where it occurred.
struct SlackTracker {
    worst: f64,
    at: serde_json::Value,
}

impl SlackTracker {
    fn new() -> Self {
        SlackTracker { worst: f64::INFINITY, at: json!(null) }
    }

    fn observe(&mut self, slack: f64, at: impl FnOnce() -> serde_json::Value) {
        if slack < self.worst {
            self.worst = slack;
            self.at = at();
        }
    }
}

fn check_scan_guard(m: u64, t: u64) -> Result<()> {
    if m * t > SCAN_GUARD {
        return Err(Error::resource(format!(
            "support size m*t = {} exceeds scan guard {SCAN_GUARD}",
            m * t
        )));
    }
    Ok(())
}

fn check_odd(t: u64) -> Result<()> {
    if t.is_multiple_of(2) || t == 0 {
        return Err(Error::parameter(format!("window width t={t} must be odd")));
    }
    Ok(())
}

/// Ascending union of two supports.
fn union_points(a: &Pmf, b: &Pmf) -> Vec<i64> {
    let mut points: Vec<i64> = a.entries().iter().map(|&(v, _)| v).collect();
    points.extend(b.entries().iter().map(|&(v, _)| v));
    points.sort_unstable();
    points.dedup();
    points
}

/// All ordered residue pairs `(x1, x2)` grouped by their modular sum.
fn pairs_by_mod_sum(m: u64) -> Vec<Vec<(u64, u64)>> {
    let mut classes = vec![Vec::new(); m as usize];
    for x1 in 0..m {
        for x2 in 0..m {
            classes[((x1 + x2) % m) as usize].push((x1, x2));
        }
    }
    classes
}

/// Convolutions of the residue windows for every ordered pair, keyed by
/// `(x1, x2)`.
fn window_pair_convs(m: u64, t: u64, lam: f64) -> Result<Vec<Vec<Pmf>>> {
    let singles: Vec<Pmf> =
        (0..m).map(|x| crate::dist::residue_window(x, m, t, lam)).collect::<Result<_>>()?;
    let mut table = Vec::with_capacity(m as usize);
    for x1 in 0..m as usize {
        let mut row = Vec::with_capacity(m as usize);
        for x2 in 0..m as usize {
            row.push(singles[x1].convolve(&singles[x2]));
        }
        table.push(row);
    }
    Ok(table)
}

/// The combined two-user window bound: for every two input pairs with equal
/// modular sums and every point `z`,
/// `alpha_z <= e^{4 lam} alpha'_z + lam p^2 delta_z` and symmetrically,
/// where `alpha` terms are window-pair convolutions and `delta` is the
/// blanket's self-convolution. Pairs with equal *unreduced* sums must agree
/// exactly, and that equality is folded into the same report.
pub fn check_alpha_bounds(m: u64, t: u64, lam: f64, p: f64) -> Result<InequalityReport> {
    check_odd(t)?;
    check_scan_guard(m, t)?;
    if !(lam > 0.0 && lam < 1.0) || !(p > 0.0 && p < 1.0) {
        return Err(Error::parameter(format!("lam={lam} and p={p} must lie in (0,1)")));
    }
    let required = 3.0 + 4.0 / lam + (2.0 / lam) * ((m * m) as f64 / (lam * p * p)).ln();
    let hypothesis_met = t as f64 >= required;

    let convs = window_pair_convs(m, t, lam)?;
    let blanket = crate::dist::residue_blanket(m, t, lam)?;
    let delta = blanket.convolve(&blanket);
    let factor = (4.0 * lam).exp();
    let extra = lam * p * p;

    let mut tracker = SlackTracker::new();
    for class in pairs_by_mod_sum(m) {
        for &(x1, x2) in &class {
            for &(y1, y2) in &class {
                let a = &convs[x1 as usize][x2 as usize];
                let b = &convs[y1 as usize][y2 as usize];
                let equal_sums = x1 + x2 == y1 + y2;
                for z in union_points(a, b) {
                    let alpha = a.prob(z);
                    let alpha_prime = b.prob(z);
                    if equal_sums {
                        // same unreduced sum: the convolutions are the same
                        // sums of the same products, so they must agree
                        // exactly
                        let slack = -(alpha - alpha_prime).abs();
                        tracker.observe(slack, || {
                            json!({"z": z, "pair": [[x1, x2], [y1, y2]], "case": "exact-equality"})
                        });
                        continue;
                    }
                    let d = delta.prob(z);
                    let slack = factor * alpha_prime + extra * d - alpha;
                    tracker.observe(slack, || {
                        json!({"z": z, "pair": [[x1, x2], [y1, y2]], "case": "window-bound"})
                    });
                }
            }
        }
    }
    Ok(InequalityReport::new(
        "two-user window bound (combined, exp(4 lam) + lam p^2 blanket)",
        json!({"m": m, "t": t, "lam": lam, "p": p, "t_required": required}),
        hypothesis_met,
        tracker.worst,
        tracker.at,
    ))
}

/// The per-offset stepping stones behind the combined bound: writing
/// `z = x1 + x2 + v*m` with the second pair's unreduced sum one modulus
/// higher,
///
/// * for `v` in `[0, t]`: `alpha_z <= e^lam alpha'_z + D[v] D[0]` and
///   `alpha'_z <= e^lam alpha_z`;
/// * for `v` in `[t+1, 2t+1]`: the mirror images;
/// * for `v` in `[ceil(1/lam), t]`: `D[v] D[0] <= 3 lam alpha'_z`, and
///   symmetrically for `v` in `[t+1, 2t+1 - 1/lam]`.
pub fn check_step_alpha_claims(m: u64, t: u64, lam: f64) -> Result<InequalityReport> {
    check_odd(t)?;
    check_scan_guard(m, t)?;
    if !(lam > 0.0 && lam < 1.0) {
        return Err(Error::parameter(format!("lam={lam} outside (0,1)")));
    }
    let window = dlap_window(t, lam)?;
    let d_at = |u: i64| window.prob(u);
    let convs = window_pair_convs(m, t, lam)?;
    let factor = lam.exp();
    let inv_lam = 1.0 / lam;

    let mut tracker = SlackTracker::new();
    // unreduced sums s and s+m must both be reachable: s in [0, m-2]
    for s in 0..=m.saturating_sub(2) {
        let lower: Vec<(u64, u64)> =
            (0..=s).map(|x1| (x1, s - x1)).filter(|&(a, b)| a < m && b < m).collect();
        let upper: Vec<(u64, u64)> = (0..m)
            .filter_map(|x1| (s + m).checked_sub(x1).map(|x2| (x1, x2)))
            .filter(|&(_, x2)| x2 < m)
            .collect();
        for &(x1, x2) in &lower {
            for &(y1, y2) in &upper {
                let a = &convs[x1 as usize][x2 as usize];
                let b = &convs[y1 as usize][y2 as usize];
                let base = (x1 + x2) as i64;
                for v in 0..=(2 * t + 1) as i64 {
                    let z = base + v * m as i64;
                    let alpha = a.prob(z);
                    let alpha_prime = b.prob(z);
                    if v <= t as i64 {
                        tracker.observe(factor * alpha_prime + d_at(v) * d_at(0) - alpha, || {
                            json!({"z": z, "v": v, "pair": [[x1, x2], [y1, y2]],
                                   "case": "step-up"})
                        });
                        tracker.observe(factor * alpha - alpha_prime, || {
                            json!({"z": z, "v": v, "pair": [[x1, x2], [y1, y2]],
                                   "case": "step-down"})
                        });
                    } else {
                        let mirror = (2 * t as i64 + 1) - v;
                        tracker.observe(factor * alpha + d_at(mirror) * d_at(0) - alpha_prime, || {
                            json!({"z": z, "v": v, "pair": [[x1, x2], [y1, y2]],
                                   "case": "step-up-mirror"})
                        });
                        tracker.observe(factor * alpha_prime - alpha, || {
                            json!({"z": z, "v": v, "pair": [[x1, x2], [y1, y2]],
                                   "case": "step-down-mirror"})
                        });
                    }
                    // tail-term absorption
                    if (v as f64) >= inv_lam && v <= t as i64 {
                        tracker.observe(3.0 * lam * alpha_prime - d_at(v) * d_at(0), || {
                            json!({"z": z, "v": v, "pair": [[x1, x2], [y1, y2]],
                                   "case": "tail-absorb-low"})
                        });
                    }
                    if v > t as i64 && (v as f64) <= 2.0 * t as f64 + 1.0 - inv_lam {
                        let mirror = (2 * t as i64 + 1) - v;
                        tracker.observe(3.0 * lam * alpha - d_at(mirror) * d_at(0), || {
                            json!({"z": z, "v": v, "pair": [[x1, x2], [y1, y2]],
                                   "case": "tail-absorb-high"})
                        });
                    }
                }
                // every support point must be covered by some offset v
                debug_assert!(union_points(a, b)
                    .iter()
                    .all(|&z| (z - base) % m as i64 == 0
                        && (0..=(2 * t + 1) as i64).contains(&((z - base) / m as i64))));
            }
        }
    }
    Ok(InequalityReport::new(
        "per-offset window stepping stones",
        json!({"m": m, "t": t, "lam": lam}),
        true,
        tracker.worst,
        tracker.at,
    ))
}

/// The window-with-blanket cross terms: for all residues `x, x'` and every
/// point `z`,
/// `(D_x * B)[z] <= e^{4 lam} (D_{x'} * B)[z] + lam p (B * B)[z]`,
/// valid for odd `t >= 3 + 4/lam + (2/lam) ln(m / (lam p))`.
pub fn check_beta_bounds(m: u64, t: u64, lam: f64, p: f64) -> Result<InequalityReport> {
    check_odd(t)?;
    check_scan_guard(m, t)?;
    if !(lam > 0.0 && lam < 1.0) || !(p > 0.0 && p < 1.0) {
        return Err(Error::parameter(format!("lam={lam} and p={p} must lie in (0,1)")));
    }
    let required = 3.0 + 4.0 / lam + (2.0 / lam) * (m as f64 / (lam * p)).ln();
    let hypothesis_met = t as f64 >= required;

    let blanket = crate::dist::residue_blanket(m, t, lam)?;
    let cross: Vec<Pmf> = (0..m)
        .map(|x| Ok(crate::dist::residue_window(x, m, t, lam)?.convolve(&blanket)))
        .collect::<Result<_>>()?;
    let delta = blanket.convolve(&blanket);
    let factor = (4.0 * lam).exp();
    let extra = lam * p;

    let mut tracker = SlackTracker::new();
    for x in 0..m as usize {
        for y in 0..m as usize {
            let a = &cross[x];
            let b = &cross[y];
            for z in union_points(a, b) {
                let slack = factor * b.prob(z) + extra * delta.prob(z) - a.prob(z);
                tracker.observe(slack, || json!({"z": z, "x": x, "x_prime": y}));
            }
        }
    }
    Ok(InequalityReport::new(
        "window-blanket cross bound (exp(4 lam) + lam p blanket)",
        json!({"m": m, "t": t, "lam": lam, "p": p, "t_required": required}),
        hypothesis_met,
        tracker.worst,
        tracker.at,
    ))
}

/// Truncation radius strictly above `ln 10 / ln(1/lam) - 1`, plus `margin`.
pub fn moment_tau(lam: f64, margin: u64) -> u64 {
    let threshold = 10f64.ln() / (1.0 / lam).ln() - 1.0;
    let mut tau = threshold.ceil().max(0.0);
    if tau <= threshold {
        tau += 1.0;
    }
    tau as u64 + margin
}

/// Truncated discrete Laplace moments: first exactly 0, second below
/// `5/(1-lam)^2`, fourth below `60/(1-lam)^4`, whenever the truncation
/// radius clears `ln 10 / ln(1/lam) - 1`.
pub fn check_dlap_trunc_moments(lam_grid: &[f64], margin: u64) -> Result<InequalityReport> {
    if lam_grid.is_empty() {
        return Err(Error::parameter("moment check needs a nonempty grid"));
    }
    let mut tracker = SlackTracker::new();
    for &lam in lam_grid {
        if !(lam > 0.0 && lam < 1.0) {
            return Err(Error::parameter(format!("lam={lam} outside (0,1)")));
        }
        let tau = moment_tau(lam, margin);
        let noise = dlap_truncated(tau, 0, lam)?;
        let one_minus = 1.0 - lam;
        tracker.observe(-noise.moment(1).abs(), || json!({"lam": lam, "tau": tau, "moment": 1}));
        tracker.observe(5.0 / one_minus.powi(2) - noise.moment(2), || {
            json!({"lam": lam, "tau": tau, "moment": 2})
        });
        tracker.observe(60.0 / one_minus.powi(4) - noise.moment(4), || {
            json!({"lam": lam, "tau": tau, "moment": 4})
        });
    }
    Ok(InequalityReport::new(
        "truncated discrete Laplace moment bounds",
        json!({"lam_grid": lam_grid, "margin": margin}),
        true,
        tracker.worst,
        tracker.at,
    ))
}

/// Infinite divisibility: the 2n-fold signed convolution of Polya(1/n, rho)
/// matches the discrete Laplace pmf within total variation `1e-8`.
pub fn check_polya_divisibility(n_list: &[usize], rho_list: &[f64]) -> Result<InequalityReport> {
    if n_list.is_empty() || rho_list.is_empty() {
        return Err(Error::parameter("divisibility check needs nonempty grids"));
    }
    const TV_BOUND: f64 = 1e-8;
    let mut tracker = SlackTracker::new();
    for &n in n_list {
        if n == 0 {
            return Err(Error::parameter("divisibility check needs n >= 1"));
        }
        for &rho in rho_list {
            let part = polya(1.0 / n as f64, rho, 1e-12)?;
            let neg = part.negate();
            let mut acc = part.clone();
            for _ in 1..n {
                acc = acc.convolve(&part);
            }
            for _ in 0..n {
                acc = acc.convolve(&neg);
            }
            let target = dlap(rho, 1e-12)?;
            let tv = sd_distance(&acc, &target);
            tracker.observe(TV_BOUND - tv, || json!({"n": n, "rho": rho, "tv": tv}));
        }
    }
    Ok(InequalityReport::new(
        "Polya divisibility of the discrete Laplace",
        json!({"n_list": n_list, "rho_list": rho_list, "tv_bound": TV_BOUND}),
        true,
        tracker.worst,
        tracker.at,
    ))
}

/// Exhibit that the blanket-free construction admits no finite security
/// bound: with two users holding `(0, 0)` versus `(1, m-1)` — equal modular
/// sums — the all-zero output has positive probability under the first and
/// zero under the second, so the LLR distance is infinite.
#[derive(Debug, Clone, Serialize)]
pub struct NoSecurityDemo {
    pub m: u64,
    /// `Pr[all zeros]` on inputs `(0, 0)`; positive.
    pub all_zero_prob_equal_inputs: f64,
    /// `Pr[all zeros]` on inputs `(1, m-1)`; exactly zero.
    pub all_zero_prob_split_inputs: f64,
    pub llr_infinite: bool,
    pub pass: bool,
}

pub fn demo_no_perfect_security(m: u64) -> Result<NoSecurityDemo> {
    let params = RelAggParams::select(m, 2, 0.4, 0.1)?;
    let equal = crate::relagg::ones_count_pmf_naive(&[0, 0], &params)?;
    let split = crate::relagg::ones_count_pmf_naive(&[1, m - 1], &params)?;
    let p_equal = equal.prob(0);
    let p_split = split.prob(0);
    let llr = llr_distance(&equal, &split);
    Ok(NoSecurityDemo {
        m,
        all_zero_prob_equal_inputs: p_equal,
        all_zero_prob_split_inputs: p_split,
        llr_infinite: llr.is_infinite(),
        pass: p_equal > 0.0 && p_split == 0.0 && llr.is_infinite(),
    })
}

/// The full verification suite the `verify` subcommand runs.
#[derive(Debug, Clone, Serialize)]
pub struct VerifySuite {
    pub reports: Vec<InequalityReport>,
    pub demos: Vec<NoSecurityDemo>,
}

impl VerifySuite {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.pass && r.hypothesis_met)
            && self.demos.iter().all(|d| d.pass)
    }
}

/// Runs every check on the default grid: moduli 2 and 3 with the two-user
/// parameter rule (`lam = p = 0.05`) at the minimal valid window width per
/// claim, the moment grid at margins 0 and 1, and the full divisibility
/// grid.
pub fn default_suite() -> Result<VerifySuite> {
    let mut reports = Vec::new();
    for m in [2u64, 3] {
        let params = RelAggParams::select(m, 2, 0.4, 0.1)?;
        reports.push(check_alpha_bounds(m, params.t, params.lam, params.p)?);
        reports.push(check_step_alpha_claims(m, params.t, params.lam)?);
        let beta_bound =
            3.0 + 4.0 / params.lam + (2.0 / params.lam) * (m as f64 / (params.lam * params.p)).ln();
        let beta_t = smallest_odd_at_least(beta_bound);
        reports.push(check_beta_bounds(m, beta_t, params.lam, params.p)?);
    }
    let lam_grid = [0.5, (-0.5f64).exp(), (-1.0f64).exp(), 0.9, (-2.0f64).exp()];
    for margin in [0, 1] {
        reports.push(check_dlap_trunc_moments(&lam_grid, margin)?);
    }
    reports.push(check_polya_divisibility(&[1, 2, 4, 8, 16], &[0.3, 0.5, 0.9])?);

    let demos = [2u64, 3].iter().map(|&m| demo_no_perfect_security(m)).collect::<Result<_>>()?;
    Ok(VerifySuite { reports, demos })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_tau_reconciles_both_reference_radii() {
        // lam = 0.5 at margin 0 gives tau 3; lam = 0.9 at margin 1 gives 22
        assert_eq!(moment_tau(0.5, 0), 3);
        assert_eq!(moment_tau(0.9, 1), 22);
    }

    #[test]
    fn moments_report_passes_on_grid() {
        let report = check_dlap_trunc_moments(&[0.5, 0.9], 0).unwrap();
        assert!(report.pass, "worst slack {}", report.worst_slack);
        // the second-moment reference value: tau=3, lam=0.5 is ~1.909 < 20
        let noise = dlap_truncated(3, 0, 0.5).unwrap();
        assert!((noise.moment(2) - 5.25 / 2.75).abs() < 1e-12);
        assert!(noise.moment(2) < 20.0);
        // lam=0.9, tau=22: fourth moment under 6e5
        let wide = dlap_truncated(22, 0, 0.9).unwrap();
        assert!(wide.moment(4) < 6e5);
        assert!(check_dlap_trunc_moments(&[], 0).is_err());
        assert!(check_dlap_trunc_moments(&[1.5], 0).is_err());
    }

    #[test]
    fn polya_divisibility_report_small_grid() {
        let report = check_polya_divisibility(&[1, 2], &[0.3, 0.5]).unwrap();
        assert!(report.pass, "worst slack {}", report.worst_slack);
    }

    #[test]
    fn alpha_bounds_small_modulus() {
        let params = RelAggParams::select(2, 2, 0.4, 0.1).unwrap();
        let report = check_alpha_bounds(2, params.t, params.lam, params.p).unwrap();
        assert!(report.hypothesis_met);
        assert!(report.pass, "worst slack {}", report.worst_slack);
        // even t is a parameter error; oversized scans are resource errors
        assert!(check_alpha_bounds(2, 500, params.lam, params.p).is_err());
        assert!(matches!(
            check_alpha_bounds(999, 101, params.lam, params.p),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn alpha_bounds_flags_sub_threshold_width() {
        // two steps below the minimal odd width: hypothesis unmet, and the
        // check still runs to completion
        let params = RelAggParams::select(2, 2, 0.4, 0.1).unwrap();
        let report = check_alpha_bounds(2, params.t - 2, params.lam, params.p).unwrap();
        assert!(!report.hypothesis_met);
    }

    #[test]
    fn step_alpha_claims_small_modulus() {
        let params = RelAggParams::select(2, 2, 0.4, 0.1).unwrap();
        let report = check_step_alpha_claims(2, params.t, params.lam).unwrap();
        assert!(report.pass, "worst slack {}", report.worst_slack);
    }

    #[test]
    fn beta_bounds_small_modulus() {
        let params = RelAggParams::select(2, 2, 0.4, 0.1).unwrap();
        let bound = 3.0 + 4.0 / params.lam
            + (2.0 / params.lam) * (2.0 / (params.lam * params.p)).ln();
        let t = smallest_odd_at_least(bound);
        assert_eq!(t, 351);
        let report = check_beta_bounds(2, t, params.lam, params.p).unwrap();
        assert!(report.hypothesis_met);
        assert!(report.pass, "worst slack {}", report.worst_slack);
    }

    #[test]
    fn demo_reports_infinite_llr() {
        for m in [2u64, 3] {
            let demo = demo_no_perfect_security(m).unwrap();
            assert!(demo.all_zero_prob_equal_inputs > 0.0);
            assert_eq!(demo.all_zero_prob_split_inputs, 0.0);
            assert!(demo.llr_infinite);
            assert!(demo.pass);
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let a = check_dlap_trunc_moments(&[0.5, 0.7], 1).unwrap();
        let b = check_dlap_trunc_moments(&[0.5, 0.7], 1).unwrap();
        assert_eq!(a.worst_slack.to_bits(), b.worst_slack.to_bits());
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn report_pass_iff_slack_above_tolerance() {
        let r = InequalityReport::new("x", json!({}), true, -1e-10, json!(null));
        assert!(r.pass);
        let r2 = InequalityReport::new("x", json!({}), true, -1e-8, json!(null));
        assert!(!r2.pass);
    }
}
