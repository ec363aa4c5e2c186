//! Exact counting and enumeration of the sequence space for small instances.

use std::collections::HashSet;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqgen::{similarity_score, Provenance, TaskSequence};
use crate::simio::{AccuracyRecordSet, SimilarityMatrix};

/// Default refusal threshold for exhaustive enumeration.
pub const DEFAULT_CAP: u64 = 1_000_000;

fn check_divisible(classes: usize, tasks: usize) -> Result<usize> {
    if tasks == 0 || classes == 0 || classes % tasks != 0 {
        return Err(Error::NotDivisible { classes, tasks });
    }
    Ok(classes / tasks)
}

fn factorial(n: usize) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// Number of ordered partitions of `classes` into `tasks` unordered tasks of
/// equal size: `N! / (M!)^K`.
pub fn count_sequences(classes: usize, tasks: usize) -> Result<BigUint> {
    let m = check_divisible(classes, tasks)?;
    Ok(factorial(classes) / factorial(m).pow(tasks as u32))
}

/// Natural logarithm of a big integer, computed from its leading 64 bits and
/// binary exponent.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 64 {
        return x.to_u64().expect("fits in 64 bits").to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("64 leading bits");
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Streaming iterator over every canonical sequence, in lexicographic order
/// of the task lists.
#[derive(Debug, Clone)]
pub struct SequenceSpace {
    classes: usize,
    tasks: usize,
    size: usize,
    // Per task: the classes still available and the chosen positions.
    available: Vec<Vec<usize>>,
    chosen: Vec<Vec<usize>>,
    done: bool,
}

impl SequenceSpace {
    fn new(classes: usize, tasks: usize) -> Result<Self> {
        let size = check_divisible(classes, tasks)?;
        let mut s = Self {
            classes,
            tasks,
            size,
            available: vec![Vec::new(); tasks],
            chosen: vec![Vec::new(); tasks],
            done: false,
        };
        s.available[0] = (0..classes).collect();
        s.reset_from(0);
        Ok(s)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn tasks(&self) -> usize {
        self.tasks
    }

    pub fn task_size(&self) -> usize {
        self.size
    }

    /// First combination at `level` and every level after it.
    fn reset_from(&mut self, level: usize) {
        for l in level..self.tasks {
            if l > 0 {
                self.available[l] = self.remaining_after(l - 1);
            }
            self.chosen[l] = (0..self.size).collect();
        }
    }

    fn remaining_after(&self, level: usize) -> Vec<usize> {
        let avail = &self.available[level];
        let picked = &self.chosen[level];
        let mut out = Vec::with_capacity(avail.len() - self.size);
        let mut p = 0;
        for (pos, &c) in avail.iter().enumerate() {
            if p < picked.len() && picked[p] == pos {
                p += 1;
            } else {
                out.push(c);
            }
        }
        out
    }

    fn current(&self) -> Vec<Vec<usize>> {
        (0..self.tasks)
            .map(|l| self.chosen[l].iter().map(|&p| self.available[l][p]).collect())
            .collect()
    }

    /// Advances the combination at `level`; false when exhausted.
    fn advance(&mut self, level: usize) -> bool {
        let n = self.available[level].len();
        let k = self.size;
        let c = &mut self.chosen[level];
        let mut i = k;
        while i > 0 {
            i -= 1;
            if c[i] < n - k + i {
                c[i] += 1;
                for j in (i + 1)..k {
                    c[j] = c[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for SequenceSpace {
    type Item = TaskSequence;

    fn next(&mut self) -> Option<TaskSequence> {
        if self.done {
            return None;
        }
        let out = TaskSequence::new(self.current(), Provenance::Enumerated)
            .expect("enumerated sequences are valid");
        // The last task is forced, so only levels before it can advance.
        let mut level = self.tasks - 1;
        loop {
            if level == 0 {
                self.done = true;
                break;
            }
            level -= 1;
            if self.advance(level) {
                self.reset_from(level + 1);
                break;
            }
        }
        Some(out)
    }
}

/// All canonical sequences for `(classes, tasks)`, refusing when the space
/// is larger than `cap`.
pub fn iterate_sequences(classes: usize, tasks: usize, cap: u64) -> Result<SequenceSpace> {
    let omega = count_sequences(classes, tasks)?;
    if omega > BigUint::from(cap) {
        return Err(Error::CapExceeded { omega, cap });
    }
    SequenceSpace::new(classes, tasks)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreExtremes {
    pub min: TaskSequence,
    pub min_score: f64,
    pub max: TaskSequence,
    pub max_score: f64,
    /// Score of every sequence, in enumeration order.
    pub scores: Vec<f64>,
}

/// Exact arg-min and arg-max of the similarity score over the whole space.
/// Ties keep the earliest sequence in enumeration order.
pub fn extremes_by_score(sim: &SimilarityMatrix, tasks: usize, cap: u64) -> Result<ScoreExtremes> {
    let mut min: Option<(TaskSequence, f64)> = None;
    let mut max: Option<(TaskSequence, f64)> = None;
    let mut scores = Vec::new();
    for seq in iterate_sequences(sim.len(), tasks, cap)? {
        let s = similarity_score(&seq, sim)?;
        scores.push(s);
        if min.as_ref().is_none_or(|(_, m)| s < *m) {
            min = Some((seq.clone(), s));
        }
        if max.as_ref().is_none_or(|(_, m)| s > *m) {
            max = Some((seq, s));
        }
    }
    let (min, min_score) = min.expect("space is non-empty");
    let (max, max_score) = max.expect("space is non-empty");
    Ok(ScoreExtremes {
        min,
        min_score,
        max,
        max_score,
        scores,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionSource {
    Truth,
    Rs,
    Edge,
    Surrogate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Population variance.
    pub variance: f64,
}

/// Accuracy samples, each a fraction in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
    source: DistributionSource,
}

impl EmpiricalDistribution {
    pub fn new(samples: Vec<f64>, source: DistributionSource) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("distribution needs at least one sample"));
        }
        if let Some(a) = samples.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::invalid(format!("accuracy {a} is outside [0, 1]")));
        }
        Ok(Self { samples, source })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn source(&self) -> DistributionSource {
        self.source
    }

    pub fn summary(&self) -> Summary {
        let n = self.samples.len() as f64;
        let mean = self.samples.iter().sum::<f64>() / n;
        let variance = self.samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let min = self.samples.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Summary {
            count: self.samples.len(),
            min,
            max,
            mean,
            variance,
        }
    }
}

/// Ground-truth distribution from a record set that covers every sequence
/// exactly once.
pub fn true_distribution(acc: &AccuracyRecordSet, cap: u64) -> Result<EmpiricalDistribution> {
    let (classes, tasks) = acc
        .shape()
        .ok_or_else(|| Error::Coverage("no records".into()))?;
    let omega = count_sequences(classes, tasks)?;
    let mut seen = HashSet::with_capacity(acc.len());
    for r in acc.records() {
        if !seen.insert(r.sequence.tasks()) {
            return Err(Error::Coverage(format!("sequence {} appears twice", r.sequence)));
        }
    }
    if BigUint::from(seen.len()) != omega {
        for seq in iterate_sequences(classes, tasks, cap)? {
            if !seen.contains(seq.tasks()) {
                return Err(Error::Coverage(format!(
                    "{} of {omega} sequences present; missing {seq}",
                    seen.len()
                )));
            }
        }
    }
    EmpiricalDistribution::new(acc.accuracies(), DistributionSource::Truth)
}

/// Fraction of the space covered by `samples` sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct Coverage {
    pub ratio: BigRational,
}

impl Coverage {
    pub fn log10(&self) -> f64 {
        let num = self.ratio.numer().magnitude();
        let den = self.ratio.denom().magnitude();
        if num.is_zero() {
            return f64::NEG_INFINITY;
        }
        (ln_biguint(num) - ln_biguint(den)) / std::f64::consts::LN_10
    }

    /// Decimal scientific notation, e.g. `1.2728e-92`.
    pub fn to_scientific(&self, digits: usize) -> String {
        let l = self.log10();
        if !l.is_finite() {
            return "0".into();
        }
        let mut exp = l.floor();
        let mut mant = 10f64.powf(l - exp);
        let scale = 10f64.powi(digits as i32);
        if (mant * scale).round() / scale >= 10.0 {
            mant /= 10.0;
            exp += 1.0;
        }
        format!("{mant:.digits$}e{}", exp as i64)
    }
}

pub fn coverage_fraction(samples: u64, classes: usize, tasks: usize) -> Result<Coverage> {
    let omega = count_sequences(classes, tasks)?;
    Ok(Coverage {
        ratio: BigRational::new(BigUint::from(samples).into(), omega.into()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    #[test]
    fn table_counts() {
        let expected = [(4, 2, 6u64), (6, 2, 20), (8, 2, 70), (10, 2, 252), (6, 3, 90), (9, 3, 1680), (8, 4, 2520)];
        for (n, k, c) in expected {
            assert_eq!(count_sequences(n, k).unwrap(), BigUint::from(c), "({n},{k})");
        }
        for n in 1..10 {
            assert_eq!(count_sequences(n, 1).unwrap(), BigUint::one());
        }
        assert!(matches!(count_sequences(7, 3), Err(Error::NotDivisible { .. })));
    }

    #[test]
    fn hundred_classes_has_93_digits() {
        let c = count_sequences(100, 10).unwrap();
        assert_eq!(c.to_string().len(), 93);
        assert!(c.to_string().starts_with("2357074589"));
    }

    #[test]
    fn ln_of_big_integers() {
        let c = count_sequences(100, 10).unwrap();
        let reference = statrs::function::gamma::ln_gamma(101.0) - 10.0 * statrs::function::gamma::ln_gamma(11.0);
        assert!((ln_biguint(&c) - reference).abs() < 1e-9);
        let small = BigUint::from_u64(90).unwrap();
        assert_eq!(ln_biguint(&small), 90f64.ln());
    }

    #[test]
    fn small_spaces() {
        let seqs: Vec<_> = iterate_sequences(2, 2, DEFAULT_CAP).unwrap().map(|s| s.tasks().to_vec()).collect();
        assert_eq!(seqs, vec![vec![vec![0], vec![1]], vec![vec![1], vec![0]]]);
        let seqs: Vec<_> = iterate_sequences(4, 2, DEFAULT_CAP).unwrap().collect();
        assert_eq!(seqs.len(), 6);
        assert_eq!(seqs[0].tasks(), [vec![0, 1], vec![2, 3]]);
        assert_eq!(seqs[5].tasks(), [vec![2, 3], vec![0, 1]]);
        let single: Vec<_> = iterate_sequences(3, 1, DEFAULT_CAP).unwrap().collect();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let seqs: Vec<_> = iterate_sequences(6, 3, DEFAULT_CAP).unwrap().map(|s| s.tasks().to_vec()).collect();
        assert!(seqs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn cap_is_enforced() {
        match iterate_sequences(8, 4, 100) {
            Err(Error::CapExceeded { omega, cap }) => {
                assert_eq!(omega, BigUint::from(2520u32));
                assert_eq!(cap, 100);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn coverage_examples() {
        let c = coverage_fraction(90, 6, 3).unwrap();
        assert!(c.ratio.is_one());
        let c = coverage_fraction(3, 6, 3).unwrap();
        assert_eq!(c.ratio, BigRational::new(1.into(), 30.into()));
        assert_eq!(c.to_scientific(4), "3.3333e-2");
        let c = coverage_fraction(3, 100, 10).unwrap();
        assert_eq!(c.to_scientific(4), "1.2728e-92");
    }

    #[test]
    fn distribution_summary() {
        let d = EmpiricalDistribution::new(vec![0.5; 4], DistributionSource::Truth).unwrap();
        let s = d.summary();
        assert_eq!((s.min, s.max, s.mean, s.variance), (0.5, 0.5, 0.5, 0.0));
        assert!(EmpiricalDistribution::new(vec![], DistributionSource::Truth).is_err());
        assert!(EmpiricalDistribution::new(vec![1.5], DistributionSource::Truth).is_err());
    }
}
