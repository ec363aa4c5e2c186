//! The full estimation run: a hard, an easy and a median sequence on one
//! side, three seeded random sequences on the other, each summarized by a
//! Gaussian and, when the whole space can be evaluated, compared against
//! the true accuracy distribution.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundQuery, BoundReport};
use crate::enumerate::{self, count_sequences, DistributionSource, EmpiricalDistribution, Summary};
use crate::error::{Error, Result};
use crate::seqgen::{self, GenerationConfig, Provenance, TaskSequence};
use crate::simio::{AccuracyRecordSet, EmbeddingSet, SimilarityMatrix};
use crate::stats::{self, Comparison, GaussianEstimate, Histogram};
use crate::surrogate::{self, SurrogateParams};

/// Seeds of the random-sequence baseline.
pub const RS_SEEDS: [u64; 3] = [0, 42, 1993];

/// Seed of the median draw, distinct from the baseline seeds.
pub const DEFAULT_MEDIAN_SEED: u64 = 7;

/// Where sequence accuracies come from.
#[derive(Debug, Clone)]
pub enum AccuracySource {
    /// Measured accuracies; every evaluated sequence must be present.
    Records(AccuracyRecordSet),
    Surrogate {
        embeddings: EmbeddingSet,
        params: SurrogateParams,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub tasks: usize,
    pub generation: GenerationConfig,
    pub rs_seeds: Vec<u64>,
    pub bins: usize,
    pub cap: u64,
    pub epsilon: f64,
    pub delta: f64,
}

impl ProtocolConfig {
    pub fn new(tasks: usize) -> Self {
        Self {
            tasks,
            generation: GenerationConfig::with_seed(DEFAULT_MEDIAN_SEED),
            rs_seeds: RS_SEEDS.to_vec(),
            bins: stats::DEFAULT_BINS,
            cap: enumerate::DEFAULT_CAP,
            epsilon: 0.1,
            delta: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedSequence {
    pub provenance: Provenance,
    pub tasks: Vec<Vec<usize>>,
    pub labels: Vec<Vec<String>>,
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub granularity: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub sequences: Vec<EvaluatedSequence>,
    pub gaussian: GaussianEstimate,
    pub min: f64,
    pub max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
}

impl EstimatorReport {
    pub fn accuracies(&self) -> Vec<f64> {
        self.sequences.iter().map(|s| s.accuracy).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundPanel {
    pub random_sampling: BoundReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_sampling_approx: Option<BoundReport>,
    /// Present when the hard and easy accuracies differ.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extreme_assisted: Option<BoundReport>,
    /// Fraction of the space covered by the three evaluated sequences.
    pub coverage_of_three: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub classes: usize,
    pub tasks: usize,
    /// Size of the sequence space, in decimal.
    pub omega: String,
    pub edge: EstimatorReport,
    pub rs: EstimatorReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<Summary>,
    pub bins: usize,
    pub bounds: BoundPanel,
}

/// Everything a run produces beyond the report itself, for plot files.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutput {
    pub report: ProtocolReport,
    /// `(score, accuracy)` for every sequence, when the space was evaluated.
    pub landscape: Option<Vec<(f64, f64)>>,
    pub truth: Option<EmpiricalDistribution>,
}

fn accuracy_lookup(source: &AccuracySource) -> Option<HashMap<Vec<Vec<usize>>, f64>> {
    match source {
        AccuracySource::Records(r) => Some(r.index()),
        AccuracySource::Surrogate { .. } => None,
    }
}

fn accuracy_of(
    seq: &TaskSequence,
    source: &AccuracySource,
    index: &Option<HashMap<Vec<Vec<usize>>, f64>>,
) -> Result<f64> {
    match (source, index) {
        (AccuracySource::Surrogate { embeddings, params }, _) => {
            surrogate::synthetic_accuracy(seq, embeddings, params)
        }
        (AccuracySource::Records(_), Some(idx)) => idx
            .get(seq.tasks())
            .copied()
            .ok_or_else(|| Error::MissingAccuracy(seq.to_string())),
        (AccuracySource::Records(_), None) => unreachable!("records always have an index"),
    }
}

fn estimator(sequences: Vec<EvaluatedSequence>) -> Result<EstimatorReport> {
    let acc: Vec<f64> = sequences.iter().map(|s| s.accuracy).collect();
    let gaussian = stats::fit_gaussian(&acc)?;
    let min = acc.iter().copied().fold(f64::INFINITY, f64::min);
    let max = acc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(EstimatorReport {
        sequences,
        gaussian,
        min,
        max,
        comparison: None,
    })
}

fn true_landscape(
    sim: &SimilarityMatrix,
    tasks: usize,
    source: &AccuracySource,
    cap: u64,
) -> Result<Option<(EmpiricalDistribution, Vec<(f64, f64)>)>> {
    let records = match source {
        AccuracySource::Records(r) => r.clone(),
        AccuracySource::Surrogate { embeddings, params } => {
            surrogate::landscape(embeddings, tasks, params, cap)?
        }
    };
    let truth = match enumerate::true_distribution(&records, cap) {
        Ok(t) => t,
        // A partial record set is still usable for the estimators.
        Err(Error::Coverage(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let points = records
        .records()
        .iter()
        .map(|r| Ok((seqgen::similarity_score(&r.sequence, sim)?, r.accuracy)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Some((truth, points)))
}

/// Runs both estimators and, when the space is small enough and every
/// sequence has an accuracy, compares each to the truth.
pub fn run_protocol(sim: &SimilarityMatrix, source: &AccuracySource, cfg: &ProtocolConfig) -> Result<ProtocolOutput> {
    let n = sim.len();
    let k = cfg.tasks;
    if let AccuracySource::Surrogate { embeddings, .. } = source {
        if embeddings.len() != n {
            return Err(Error::invalid(format!(
                "{} embeddings for a {n}-class similarity matrix",
                embeddings.len()
            )));
        }
    }
    let omega = count_sequences(n, k)?;
    let labels = sim.labels();
    let index = accuracy_lookup(source);

    let evaluate = |seq: TaskSequence, score: f64, granularity: Option<usize>, seed: Option<u64>| {
        let accuracy = accuracy_of(&seq, source, &index)?;
        Ok::<_, Error>(EvaluatedSequence {
            provenance: seq.provenance(),
            labels: seq.labelled(labels),
            tasks: seq.tasks().to_vec(),
            score,
            granularity,
            seed,
            accuracy,
        })
    };

    let (hard, easy) = seqgen::generate_extremes(sim, k, &cfg.generation)?;
    let median = seqgen::generate_median(n, k, cfg.generation.seed)?;
    let median_score = seqgen::similarity_score(&median, sim)?;
    let edge_seqs = vec![
        evaluate(hard.sequence, hard.score, hard.granularity, None)?,
        evaluate(easy.sequence, easy.score, easy.granularity, None)?,
        evaluate(median, median_score, None, Some(cfg.generation.seed))?,
    ];
    let mut rs_seqs = Vec::with_capacity(cfg.rs_seeds.len());
    for &seed in &cfg.rs_seeds {
        let seq = seqgen::generate_random(n, k, seed)?;
        let score = seqgen::similarity_score(&seq, sim)?;
        rs_seqs.push(evaluate(seq, score, None, Some(seed))?);
    }
    let mut edge = estimator(edge_seqs)?;
    let mut rs = estimator(rs_seqs)?;

    let evaluated = if omega <= num_bigint::BigUint::from(cfg.cap) {
        true_landscape(sim, k, source, cfg.cap)?
    } else {
        None
    };
    let (truth, landscape) = match evaluated {
        Some((t, points)) => {
            edge.comparison = Some(stats::compare_gaussian(t.samples(), &edge.gaussian, cfg.bins)?);
            rs.comparison = Some(stats::compare_gaussian(t.samples(), &rs.gaussian, cfg.bins)?);
            (Some(t), Some(points))
        }
        None => (None, None),
    };

    let query = BoundQuery::new(omega.clone(), cfg.epsilon, cfg.delta)?;
    let gap = (edge.sequences[1].accuracy - edge.sequences[0].accuracy).abs();
    let extreme_assisted = if gap > 0.0 && omega >= num_bigint::BigUint::from(4u32) {
        Some(bounds::min_samples_edge(&query.clone().with_r_sigma(gap)?)?)
    } else {
        None
    };
    let bounds = BoundPanel {
        random_sampling: bounds::min_samples_rs(&query),
        random_sampling_approx: if n >= 3 {
            Some(bounds::min_samples_rs_approx(n, cfg.epsilon, cfg.delta)?)
        } else {
            None
        },
        extreme_assisted,
        coverage_of_three: enumerate::coverage_fraction(3, n, k)?.to_scientific(4),
    };

    let report = ProtocolReport {
        classes: n,
        tasks: k,
        omega: omega.to_string(),
        edge,
        rs,
        truth: truth.as_ref().map(EmpiricalDistribution::summary),
        bins: cfg.bins,
        bounds,
    };
    Ok(ProtocolOutput {
        report,
        landscape,
        truth,
    })
}

/// Truth and fitted-Gaussian masses on the grid used for an estimator's
/// comparison.
pub fn comparison_histograms(
    truth: &[f64],
    g: &GaussianEstimate,
    bins: usize,
) -> Result<(Histogram, Histogram)> {
    let edges = stats::comparison_grid(truth, g, bins)?;
    Ok((
        stats::discretize_samples(truth, &edges)?,
        stats::discretize_gaussian(g, &edges)?,
    ))
}

/// Distribution of an estimator's accuracies, tagged with its source.
pub fn estimator_distribution(report: &EstimatorReport, source: DistributionSource) -> Result<EmpiricalDistribution> {
    EmpiricalDistribution::new(report.accuracies(), source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simio::AccuracyRecord;

    fn six_class() -> (SimilarityMatrix, EmbeddingSet) {
        let vectors = vec![
            vec![1.0, 0.1, 0.0],
            vec![0.9, 0.2, 0.1],
            vec![0.1, 1.0, 0.0],
            vec![0.0, 0.9, 0.3],
            vec![0.1, 0.0, 1.0],
            vec![0.2, 0.1, 0.9],
        ];
        let e = EmbeddingSet::new((0..6).map(|i| format!("k{i}")).collect(), vectors).unwrap();
        (crate::simio::cosine_similarity(&e), e)
    }

    #[test]
    fn surrogate_six_three() {
        let (sim, e) = six_class();
        let src = AccuracySource::Surrogate {
            embeddings: e,
            params: SurrogateParams::default(),
        };
        let out = run_protocol(&sim, &src, &ProtocolConfig::new(3)).unwrap();
        let r = &out.report;
        assert_eq!(r.omega, "90");
        assert_eq!(out.truth.as_ref().unwrap().samples().len(), 90);
        assert_eq!(r.edge.sequences.len(), 3);
        assert_eq!(r.rs.sequences.len(), 3);
        assert!(r.edge.min <= r.edge.max);
        assert!(r.edge.comparison.is_some() && r.rs.comparison.is_some());
        let again = run_protocol(&sim, &src, &ProtocolConfig::new(3)).unwrap();
        assert_eq!(
            serde_json::to_string(&again.report).unwrap(),
            serde_json::to_string(&out.report).unwrap()
        );
    }

    #[test]
    fn flat_truth_gives_zero_distances() {
        let (sim, _) = six_class();
        let records = enumerate::iterate_sequences(6, 3, 1000)
            .unwrap()
            .map(|sequence| AccuracyRecord { sequence, accuracy: 0.6 })
            .collect();
        let src = AccuracySource::Records(AccuracyRecordSet::new(records).unwrap());
        let r = run_protocol(&sim, &src, &ProtocolConfig::new(3)).unwrap().report;
        for est in [&r.edge, &r.rs] {
            let c = est.comparison.unwrap();
            assert_eq!(c.jsd, 0.0);
            assert_eq!(c.wasserstein, 0.0);
        }
    }

    #[test]
    fn missing_record_is_reported() {
        let (sim, _) = six_class();
        let one = TaskSequence::new(vec![vec![0, 1], vec![2, 3], vec![4, 5]], Provenance::External).unwrap();
        let src = AccuracySource::Records(
            AccuracyRecordSet::new(vec![AccuracyRecord { sequence: one, accuracy: 0.5 }]).unwrap(),
        );
        let err = run_protocol(&sim, &src, &ProtocolConfig::new(3)).unwrap_err();
        assert!(matches!(err, Error::MissingAccuracy(_)));
    }
}
