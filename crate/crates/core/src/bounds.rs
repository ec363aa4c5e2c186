//! Sample-size requirements for estimating the mean accuracy over the
//! sequence space, the chance of missing extreme sequences, and the
//! optimality guarantee of the greedy ordering.
//!
//! The without-replacement bounds have the form
//! `L (P - L) / (P - 1) >= rhs`, whose left side is concave in `L` and peaks
//! at `L = P / 2`. The smallest admissible `L` is found by bisection on the
//! increasing half; when even the peak falls short the bound is reported as
//! infeasible rather than as an error.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::cluster::TaskPartition;
use crate::enumerate::{count_sequences, ln_biguint};
use crate::error::{Error, Result};
use crate::seqgen::its_matrix;
use crate::simio::SimilarityMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundQuery {
    omega: BigUint,
    epsilon: f64,
    delta: f64,
    r_sigma: Option<f64>,
}

impl BoundQuery {
    pub fn new(omega: BigUint, epsilon: f64, delta: f64) -> Result<Self> {
        if omega < BigUint::from(2u32) {
            return Err(Error::invalid("sequence space must hold at least two sequences"));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self {
            omega,
            epsilon,
            delta,
            r_sigma: None,
        })
    }

    /// Query over the space of `classes` split into `tasks` equal tasks.
    pub fn for_classes(classes: usize, tasks: usize, epsilon: f64, delta: f64) -> Result<Self> {
        Self::new(count_sequences(classes, tasks)?, epsilon, delta)
    }

    pub fn with_r_sigma(mut self, r_sigma: f64) -> Result<Self> {
        if !(r_sigma > 0.0 && r_sigma.is_finite()) {
            return Err(Error::invalid(format!("extreme range must be positive, got {r_sigma}")));
        }
        self.r_sigma = Some(r_sigma);
        Ok(self)
    }

    pub fn omega(&self) -> &BigUint {
        &self.omega
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn r_sigma(&self) -> Option<f64> {
        self.r_sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Uniform sampling without replacement.
    RandomSampling,
    /// Closed-form approximation of the above for large spaces.
    RandomSamplingApprox,
    /// Sampling anchored by two known extreme sequences.
    ExtremeAssisted,
    Greedy,
    ExtremeMiss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    /// Smallest admissible sample count; `None` when infeasible.
    pub required_l: Option<u64>,
    /// Largest value the left-hand side can reach, when it is bounded.
    pub lhs_max: Option<f64>,
    pub rhs: f64,
    /// Total sequences evaluated, when it differs from `required_l`.
    pub total_cost: Option<u64>,
}

impl BoundReport {
    pub fn feasible(&self) -> bool {
        self.required_l.is_some()
    }
}

/// `L (P - L) / (P - 1)` with `P` given as a float.
pub fn finite_population_lhs(l: f64, population: f64) -> f64 {
    l * (1.0 - (l - 1.0) / (population - 1.0))
}

struct Solution {
    required: Option<u64>,
    lhs_max: f64,
}

fn solve(population: &BigUint, rhs: f64) -> Solution {
    let pop_f = population.to_f64().unwrap_or(f64::INFINITY);
    let half = (population / 2u32).to_u64().unwrap_or(u64::MAX).max(1);
    let f = |l: u64| finite_population_lhs(l as f64, pop_f);
    let lhs_max = f(half);
    if lhs_max < rhs {
        return Solution {
            required: None,
            lhs_max,
        };
    }
    // f(L) >= L / 2 on [1, P/2], so the answer is at most 2 rhs + 1.
    let mut hi = half.min((2.0 * rhs.max(0.0)).ceil() as u64 + 1).max(1);
    if f(hi) < rhs {
        hi = half;
    }
    let mut lo = 1;
    if f(lo) >= rhs {
        return Solution {
            required: Some(1),
            lhs_max,
        };
    }
    // Invariant: f(lo) < rhs <= f(hi).
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if f(mid) >= rhs {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Solution {
        required: Some(hi),
        lhs_max,
    }
}

fn omega_ln(q: &BoundQuery) -> f64 {
    ln_biguint(&q.omega)
}

/// Random-sampling requirement:
/// `L (|Ω| - L) / (|Ω| - 1) >= ln(2 |Ω| / δ) / (2 ε²)`.
pub fn min_samples_rs(q: &BoundQuery) -> BoundReport {
    let rhs = (std::f64::consts::LN_2 + omega_ln(q) - q.delta.ln()) / (2.0 * q.epsilon * q.epsilon);
    let s = solve(&q.omega, rhs);
    BoundReport {
        kind: BoundKind::RandomSampling,
        required_l: s.required,
        lhs_max: Some(s.lhs_max),
        rhs,
        total_cost: None,
    }
}

/// With-replacement scale of the random-sampling bound,
/// `ceil(ln(2 |Ω| / δ) / (2 ε²))`.
pub fn with_replacement_samples(q: &BoundQuery) -> u64 {
    let rhs = (std::f64::consts::LN_2 + omega_ln(q) - q.delta.ln()) / (2.0 * q.epsilon * q.epsilon);
    rhs.ceil() as u64
}

/// Closed-form requirement `(N ln(N / e) + ln(2 / δ)) / (2 ε²)`, rounded up.
pub fn min_samples_rs_approx(classes: usize, epsilon: f64, delta: f64) -> Result<BoundReport> {
    if classes < 3 {
        return Err(Error::invalid("the approximation needs at least three classes"));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let n = classes as f64;
    let rhs = (n * (n.ln() - 1.0) + (2.0 / delta).ln()) / (2.0 * epsilon * epsilon);
    Ok(BoundReport {
        kind: BoundKind::RandomSamplingApprox,
        required_l: Some(rhs.ceil() as u64),
        lhs_max: None,
        rhs,
        total_cost: None,
    })
}

/// Requirement when the two extreme sequences are always evaluated and the
/// remaining `L` are drawn from the other `|Ω| - 2`:
/// `L (|Ω| - 2 - L) / (|Ω| - 3) >= ln(2 (|Ω| - 2) / δ) R² / (2 ε²)`.
/// The total protocol cost is `L + 2`.
pub fn min_samples_edge(q: &BoundQuery) -> Result<BoundReport> {
    let r = q
        .r_sigma
        .ok_or_else(|| Error::invalid("extreme-assisted bound needs an extreme range"))?;
    if q.omega < BigUint::from(4u32) {
        return Err(Error::invalid("extreme-assisted bound needs at least four sequences"));
    }
    let rest = &q.omega - 2u32;
    let rhs = (std::f64::consts::LN_2 + ln_biguint(&rest) - q.delta.ln()) * r * r
        / (2.0 * q.epsilon * q.epsilon);
    let s = solve(&rest, rhs);
    Ok(BoundReport {
        kind: BoundKind::ExtremeAssisted,
        required_l: s.required,
        lhs_max: Some(s.lhs_max),
        rhs,
        total_cost: s.required.map(|l| l + 2),
    })
}

/// Probability that `samples` uniform draws all miss a tail holding
/// `tail_fraction` of the space: `exp(-tail_fraction * samples)`.
pub fn extreme_miss_probability(tail_fraction: f64, samples: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tail_fraction) {
        return Err(Error::invalid(format!("tail fraction {tail_fraction} is outside [0, 1]")));
    }
    if !(samples >= 0.0) {
        return Err(Error::invalid("sample count must be nonnegative"));
    }
    Ok((-tail_fraction * samples).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyBound {
    pub expected_random_score: f64,
    pub delta_gap: f64,
    /// Probability with which the guarantee holds, `1 - e^{-K/2}`.
    pub high_prob_guarantee: f64,
    /// Mean inter-task similarity needed for a positive gap.
    pub threshold: f64,
    pub threshold_ok: bool,
}

/// Closed forms of the greedy-ordering guarantee for nonnegative
/// similarities bounded by `upper`.
pub fn greedy_bound(classes: usize, tasks: usize, s_bar: f64, upper: f64) -> Result<GreedyBound> {
    if tasks < 2 {
        return Err(Error::invalid("greedy bound needs at least two tasks"));
    }
    if s_bar < 0.0 || upper < 0.0 {
        return Err(Error::invalid("similarities must be nonnegative; shift them first"));
    }
    if !(upper > 0.0) {
        return Err(Error::invalid("similarity upper bound must be positive"));
    }
    if s_bar > upper {
        return Err(Error::invalid(format!(
            "mean similarity {s_bar} exceeds its upper bound {upper}"
        )));
    }
    let n = classes as f64;
    let k = tasks as f64;
    let log_term = k.ln() + 1.0;
    let expected = n * n * (k - 1.0) / (2.0 * k * k) * s_bar;
    let delta_gap = expected - 2.0 * n * log_term / (k - 1.0) * upper;
    let threshold = 4.0 * k * k * log_term / (n * (k - 1.0).powi(2)) * upper;
    Ok(GreedyBound {
        expected_random_score: expected,
        delta_gap,
        high_prob_guarantee: 1.0 - (-k / 2.0).exp(),
        threshold,
        threshold_ok: s_bar >= threshold,
    })
}

/// Mean inter-task similarity of `p` and the largest off-diagonal similarity,
/// the inputs of [`greedy_bound`]. Fails on negative similarities.
pub fn greedy_inputs(p: &TaskPartition, sim: &SimilarityMatrix) -> Result<(f64, f64)> {
    let n = sim.len();
    for i in 0..n {
        for j in 0..n {
            if i != j && sim.get(i, j) < 0.0 {
                return Err(Error::invalid(
                    "greedy bound needs nonnegative similarities; shift the matrix first",
                ));
            }
        }
    }
    let its = its_matrix(p, sim)?;
    Ok((its.mean_off_diagonal(), sim.max_off_diagonal()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_min_l(population: u64, rhs: f64) -> Option<u64> {
        (1..=population).find(|&l| finite_population_lhs(l as f64, population as f64) >= rhs)
    }

    #[test]
    fn rs_infeasible_at_ninety() {
        let q = BoundQuery::new(BigUint::from(90u32), 0.1, 0.05).unwrap();
        let r = min_samples_rs(&q);
        assert!(!r.feasible());
        assert!((r.lhs_max.unwrap() - 22.7528).abs() < 1e-3);
        assert!((r.rhs - 409.4345).abs() < 1e-3);
    }

    #[test]
    fn rs_million() {
        let q = BoundQuery::new(BigUint::from(1_000_000u32), 0.5, 0.5).unwrap();
        let r = min_samples_rs(&q);
        assert_eq!(r.required_l, Some(31));
        assert!((r.rhs - 30.4).abs() < 0.05);
    }

    #[test]
    fn solver_matches_linear_scan() {
        for pop in [2u64, 3, 4, 10, 90, 1000] {
            for rhs in [0.0, 0.5, 1.0, 1.5, 3.7, 22.0, 200.0] {
                let s = solve(&BigUint::from(pop), rhs);
                assert_eq!(s.required, brute_min_l(pop, rhs), "pop {pop} rhs {rhs}");
            }
        }
    }

    #[test]
    fn approx_hundred_classes() {
        let r = min_samples_rs_approx(100, 0.1, 0.05).unwrap();
        assert_eq!(r.required_l, Some(18211));
        let double = min_samples_rs_approx(100, 0.2, 0.05).unwrap();
        assert!((r.rhs / double.rhs - 4.0).abs() < 1e-12);
        let three = min_samples_rs_approx(3, 0.1, 0.05).unwrap();
        assert!(three.rhs > 0.0 && three.rhs.is_finite());
        assert!(min_samples_rs_approx(2, 0.1, 0.05).is_err());
    }

    #[test]
    fn edge_at_remark_scale() {
        let omega = num_traits::FromPrimitive::from_f64((100.0 * (100f64.ln() - 1.0)).exp()).unwrap();
        let q = BoundQuery::new(omega, 0.1, 0.05).unwrap().with_r_sigma(0.1).unwrap();
        let r = min_samples_edge(&q).unwrap();
        assert!((r.rhs - 182.1).abs() < 0.05, "{}", r.rhs);
        assert_eq!(r.required_l, Some(183));
        assert_eq!(r.total_cost, Some(185));
    }

    #[test]
    fn edge_small_range_needs_one_sample() {
        let q = BoundQuery::for_classes(8, 4, 0.1, 0.05).unwrap().with_r_sigma(1e-9).unwrap();
        assert_eq!(min_samples_edge(&q).unwrap().required_l, Some(1));
        let no_range = BoundQuery::for_classes(8, 4, 0.1, 0.05).unwrap();
        assert!(min_samples_edge(&no_range).is_err());
    }

    #[test]
    fn query_validation() {
        assert!(BoundQuery::new(BigUint::from(90u32), 0.0, 0.05).is_err());
        assert!(BoundQuery::new(BigUint::from(90u32), 0.1, 1.0).is_err());
        assert!(BoundQuery::new(BigUint::from(1u32), 0.1, 0.5).is_err());
        assert!(BoundQuery::new(BigUint::from(90u32), 0.1, 0.5).unwrap().with_r_sigma(0.0).is_err());
    }

    #[test]
    fn miss_probability() {
        assert!((extreme_miss_probability(0.01, 3.0).unwrap() - 0.9704).abs() < 1e-4);
        assert_eq!(extreme_miss_probability(0.3, 0.0).unwrap(), 1.0);
        let mut prev = 1.0;
        for l in 1..50 {
            let p = extreme_miss_probability(1.0, l as f64).unwrap();
            assert!(p < prev);
            prev = p;
        }
        assert!(prev < 1e-20);
        assert!(extreme_miss_probability(1.5, 1.0).is_err());
    }

    #[test]
    fn greedy_small_case() {
        let g = greedy_bound(4, 2, 1.0, 1.0).unwrap();
        assert_eq!(g.expected_random_score, 2.0);
        assert!((g.delta_gap - (2.0 - 8.0 * (2f64.ln() + 1.0))).abs() < 1e-12);
        assert!((g.delta_gap + 11.545).abs() < 1e-3);
        assert!(!g.threshold_ok);
        assert!((g.high_prob_guarantee - (1.0 - (-1f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn greedy_zero_mean_and_homogeneity() {
        for (n, k) in [(4, 2), (30, 3), (100, 10)] {
            assert!(greedy_bound(n, k, 0.0, 0.5).unwrap().delta_gap < 0.0);
            let a = greedy_bound(n, k, 0.3, 0.5).unwrap();
            let b = greedy_bound(n, k, 0.3 * 2.5, 0.5 * 2.5).unwrap();
            assert!((b.delta_gap - 2.5 * a.delta_gap).abs() < 1e-9 * a.delta_gap.abs().max(1.0));
        }
        assert!(greedy_bound(4, 2, -0.1, 1.0).is_err());
        assert!(greedy_bound(4, 1, 0.1, 1.0).is_err());
        assert!(greedy_bound(4, 2, 0.1, 0.0).is_err());
    }
}
