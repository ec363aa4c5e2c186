//! Synthetic per-sequence accuracies from the expected generalization error
//! of sequential linear regression, so whole accuracy landscapes can be
//! produced without training any model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::cluster::TaskPartition;
use crate::enumerate::iterate_sequences;
use crate::error::{Error, Result};
use crate::seqgen::TaskSequence;
use crate::simio::{AccuracyRecord, AccuracyRecordSet, EmbeddingSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateParams {
    /// Parameter count.
    pub p: usize,
    /// Samples per task.
    pub n: usize,
    pub sigma: f64,
    /// Scale of the per-task weights; `None` means `1 / M`.
    pub alpha: Option<f64>,
    pub noise_std: f64,
    /// Scale `c` of the error-to-accuracy link `1 - e / (e + c)`.
    pub link_scale: f64,
    pub seed: u64,
}

impl Default for SurrogateParams {
    fn default() -> Self {
        Self {
            p: 10,
            n: 4,
            sigma: 0.5,
            alpha: None,
            noise_std: 0.01,
            link_scale: 1.0,
            seed: 0,
        }
    }
}

impl SurrogateParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p < self.n + 2 {
            return Err(Error::invalid(format!(
                "need n >= 1 and p >= n + 2, got p = {}, n = {}",
                self.p, self.n
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma must be nonnegative"));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::invalid("alpha must be positive"));
            }
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::invalid("noise_std must be nonnegative"));
        }
        if !(self.link_scale > 0.0 && self.link_scale.is_finite()) {
            return Err(Error::invalid("link scale must be positive"));
        }
        Ok(())
    }

    /// Overparameterization ratio `1 - n / p`.
    pub fn ratio(&self) -> f64 {
        1.0 - self.n as f64 / self.p as f64
    }

    fn alpha_for(&self, task_size: usize) -> f64 {
        self.alpha.unwrap_or(1.0 / task_size as f64)
    }
}

/// One optimal weight vector per task, indexed like the partition's tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskWeights {
    weights: Vec<Vec<f64>>,
}

impl TaskWeights {
    pub fn new(weights: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = weights.first() else {
            return Err(Error::invalid("no task weights"));
        };
        let d = first.len();
        if weights.iter().any(|w| w.len() != d) {
            return Err(Error::invalid("task weights differ in dimension"));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `w_i = alpha * sum of the unit class vectors in task i`, in the
/// partition's task order.
pub fn task_weights(p: &TaskPartition, e: &EmbeddingSet, alpha: f64) -> Result<TaskWeights> {
    if p.num_classes() != e.len() {
        return Err(Error::invalid(format!(
            "partition covers {} classes but there are {} embeddings",
            p.num_classes(),
            e.len()
        )));
    }
    let weights = p
        .tasks()
        .iter()
        .map(|task| {
            let mut w = vec![0.0; e.dim()];
            for &c in task {
                for (acc, v) in w.iter_mut().zip(e.unit_vector(c)) {
                    *acc += v;
                }
            }
            w.iter_mut().for_each(|x| *x *= alpha);
            w
        })
        .collect();
    TaskWeights::new(weights)
}

/// Weights of `seq`'s tasks in sequence order.
pub fn sequence_weights(seq: &TaskSequence, e: &EmbeddingSet, params: &SurrogateParams) -> Result<TaskWeights> {
    let p = TaskPartition::new(seq.tasks().to_vec())?;
    let alpha = params.alpha_for(seq.task_size());
    let w = task_weights(&p, e, alpha)?;
    // TaskPartition keeps the task order, so the weights already follow `seq`.
    Ok(w)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Expected generalization error after training on the tasks in the order
/// of `w`, with `T` tasks and ratio `r = 1 - n / p`:
///
/// `(r^T / T) Σ_{i<T} ‖w_i‖² + ((1 - r) / T) Σ_i r^{T-i} Σ_k ‖w_k - w_i‖²
///  + p σ² / (p - n - 1) (1 - r^T)`.
pub fn expected_generalization_error(w: &TaskWeights, params: &SurrogateParams) -> Result<f64> {
    params.validate()?;
    let t = w.len();
    let tf = t as f64;
    let r = params.ratio();
    let rt = r.powi(t as i32);
    let ws = w.weights();

    let first: f64 = ws[..t - 1].iter().map(|wi| wi.iter().map(|x| x * x).sum::<f64>()).sum();
    let mut second = 0.0;
    for (i, wi) in ws.iter().enumerate() {
        let inner: f64 = ws.iter().map(|wk| sq_dist(wk, wi)).sum();
        second += r.powi((t - (i + 1)) as i32) * inner;
    }
    let p = params.p as f64;
    let noise = p * params.sigma * params.sigma / (p - params.n as f64 - 1.0) * (1.0 - rt);
    Ok(rt / tf * first + (1.0 - r) / tf * second + noise)
}

/// Noise-free accuracy for an error value, `1 - e / (e + c)`.
pub fn link(error: f64, c: f64) -> f64 {
    (1.0 - error / (error + c)).clamp(0.0, 1.0)
}

fn noise_seed(seed: u64, seq: &TaskSequence) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(seq.to_string().as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Accuracy of `seq` under the surrogate, with observation noise seeded by
/// the sequence itself so results do not depend on evaluation order.
pub fn synthetic_accuracy(seq: &TaskSequence, e: &EmbeddingSet, params: &SurrogateParams) -> Result<f64> {
    let w = sequence_weights(seq, e, params)?;
    let err = expected_generalization_error(&w, params)?;
    let clean = link(err, params.link_scale);
    if params.noise_std == 0.0 {
        return Ok(clean);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed(params.seed, seq));
    let normal = Normal::new(0.0, params.noise_std).map_err(|e| Error::invalid(e.to_string()))?;
    Ok((clean + normal.sample(&mut rng)).clamp(0.0, 1.0))
}

/// Surrogate accuracy for every sequence of `e`'s classes split into
/// `tasks` tasks, in enumeration order.
pub fn landscape(e: &EmbeddingSet, tasks: usize, params: &SurrogateParams, cap: u64) -> Result<AccuracyRecordSet> {
    params.validate()?;
    let sequences: Vec<TaskSequence> = iterate_sequences(e.len(), tasks, cap)?.collect();
    let records = sequences
        .into_par_iter()
        .map(|sequence| {
            let accuracy = synthetic_accuracy(&sequence, e, params)?;
            Ok(AccuracyRecord { sequence, accuracy })
        })
        .collect::<Result<Vec<_>>>()?;
    AccuracyRecordSet::new(records)
}
