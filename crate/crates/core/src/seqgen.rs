//! Similarity score of a task sequence, inter-task similarity matrices, and
//! generation of hard, easy and median sequences.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{self, DissimilarityMatrix, Linkage, TaskPartition};
use crate::error::{Error, Result};
use crate::simio::SimilarityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Hard,
    Easy,
    Median,
    /// Uniform draw used by the random-seed baseline.
    Random,
    Enumerated,
    External,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::Hard => "hard",
            Provenance::Easy => "easy",
            Provenance::Median => "median",
            Provenance::Random => "random",
            Provenance::Enumerated => "enumerated",
            Provenance::External => "external",
        };
        f.write_str(s)
    }
}

/// Ordered partition of the classes into tasks. Classes inside a task are
/// kept ascending, so two sequences are the same exactly when their task
/// lists are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaskSequence {
    tasks: Vec<Vec<usize>>,
    provenance: Provenance,
}

impl TaskSequence {
    pub fn new(tasks: Vec<Vec<usize>>, provenance: Provenance) -> Result<Self> {
        let p = TaskPartition::new(tasks)?;
        Ok(Self {
            tasks: p.into_tasks(),
            provenance,
        })
    }

    /// Tasks of `p` visited in `order`.
    pub fn from_order(p: &TaskPartition, order: &[usize], provenance: Provenance) -> Self {
        debug_assert_eq!(order.len(), p.num_tasks());
        Self {
            tasks: order.iter().map(|&t| p.tasks()[t].clone()).collect(),
            provenance,
        }
    }

    pub fn tasks(&self) -> &[Vec<usize>] {
        &self.tasks
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn task_size(&self) -> usize {
        self.tasks[0].len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_tasks() * self.task_size()
    }

    pub fn partition(&self) -> TaskPartition {
        TaskPartition::new(self.tasks.clone()).expect("sequence holds a valid partition")
    }

    pub fn reversed(&self) -> Self {
        let mut tasks = self.tasks.clone();
        tasks.reverse();
        Self {
            tasks,
            provenance: self.provenance,
        }
    }

    /// Class labels per task.
    pub fn labelled(&self, labels: &[String]) -> Vec<Vec<String>> {
        self.tasks
            .iter()
            .map(|t| t.iter().map(|&c| labels[c].clone()).collect())
            .collect()
    }
}

impl fmt::Display for TaskSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, t) in self.tasks.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str("[")?;
            for (j, c) in t.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

fn check_shape(classes: usize, sim: &SimilarityMatrix) -> Result<()> {
    if classes != sim.len() {
        return Err(Error::invalid(format!(
            "sequence has {classes} classes but the similarity matrix has {}",
            sim.len()
        )));
    }
    Ok(())
}

/// Sum of cross-task similarities between consecutive tasks, scaled by
/// `K / ((K - 1) N)`. Diagonal entries never contribute.
pub fn similarity_score(seq: &TaskSequence, sim: &SimilarityMatrix) -> Result<f64> {
    let k = seq.num_tasks();
    let n = seq.num_classes();
    check_shape(n, sim)?;
    if k < 2 {
        return Err(Error::invalid("similarity score needs at least two tasks"));
    }
    let total: f64 = seq
        .tasks
        .windows(2)
        .map(|w| cross_sum(&w[0], &w[1], sim))
        .sum();
    Ok(k as f64 / ((k - 1) * n) as f64 * total)
}

fn cross_sum(a: &[usize], b: &[usize], sim: &SimilarityMatrix) -> f64 {
    let mut s = 0.0;
    for &c in a {
        let row = sim.row(c);
        for &d in b {
            s += row[d];
        }
    }
    s
}

/// Mean class-pair similarity between every pair of tasks. The diagonal is
/// zero and unused.
#[derive(Debug, Clone, PartialEq)]
pub struct ItsMatrix {
    k: usize,
    entries: Vec<f64>,
}

impl ItsMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        let mut entries = Vec::with_capacity(k * k);
        for r in &rows {
            if r.len() != k {
                return Err(Error::invalid("ITS matrix must be square"));
            }
            entries.extend_from_slice(r);
        }
        for i in 0..k {
            for j in (i + 1)..k {
                if (entries[i * k + j] - entries[j * k + i]).abs() > 1e-9 {
                    return Err(Error::invalid("ITS matrix must be symmetric"));
                }
            }
        }
        Ok(Self { k, entries })
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.k + j]
    }

    /// Sum of row `i` without its diagonal entry.
    pub fn row_sum(&self, i: usize) -> f64 {
        (0..self.k).filter(|&j| j != i).map(|j| self.get(i, j)).sum()
    }

    /// Mean over the task pairs `i < j`.
    pub fn mean_off_diagonal(&self) -> f64 {
        if self.k < 2 {
            return 0.0;
        }
        let mut s = 0.0;
        for i in 0..self.k {
            for j in (i + 1)..self.k {
                s += self.get(i, j);
            }
        }
        s / (self.k * (self.k - 1) / 2) as f64
    }
}

pub fn its_matrix(p: &TaskPartition, sim: &SimilarityMatrix) -> Result<ItsMatrix> {
    check_shape(p.num_classes(), sim)?;
    let k = p.num_tasks();
    let mut entries = vec![0.0; k * k];
    let tasks = p.tasks();
    for i in 0..k {
        for j in (i + 1)..k {
            let mean = cross_sum(&tasks[i], &tasks[j], sim) / (tasks[i].len() * tasks[j].len()) as f64;
            entries[i * k + j] = mean;
            entries[j * k + i] = mean;
        }
    }
    Ok(ItsMatrix { k, entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Min,
    Max,
}

impl Extremum {
    fn better(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Extremum::Min => candidate < incumbent,
            Extremum::Max => candidate > incumbent,
        }
    }
}

/// Greedy task ordering. The first task extremizes its ITS row sum; each next
/// task extremizes the summed ITS to every task already placed. Ties go to
/// the lowest task id.
pub fn greedy_order(its: &ItsMatrix, mode: Extremum) -> Vec<usize> {
    let k = its.len();
    if k == 0 {
        return Vec::new();
    }
    let mut first = 0;
    let mut first_val = its.row_sum(0);
    for t in 1..k {
        let v = its.row_sum(t);
        if mode.better(v, first_val) {
            first = t;
            first_val = v;
        }
    }
    let mut order = vec![first];
    let mut placed = vec![false; k];
    placed[first] = true;
    // prefix[t] = sum of ITS from t to every placed task
    let mut prefix: Vec<f64> = (0..k).map(|t| its.get(first, t)).collect();
    while order.len() < k {
        let mut pick: Option<(usize, f64)> = None;
        for t in (0..k).filter(|&t| !placed[t]) {
            if pick.is_none_or(|(_, v)| mode.better(prefix[t], v)) {
                pick = Some((t, prefix[t]));
            }
        }
        let (t, _) = pick.expect("a task remains");
        placed[t] = true;
        order.push(t);
        for (u, p) in prefix.iter_mut().enumerate() {
            *p += its.get(t, u);
        }
    }
    order
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenerationConfig {
    /// Candidate clustering granularities. `None` means `K..=min(3K, N)`.
    pub granularities: Option<Vec<usize>>,
    /// Seed for the median draw.
    pub seed: u64,
}

impl GenerationConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            granularities: None,
            seed,
        }
    }

    /// Sorted, de-duplicated granularities, each within `K..=N`.
    pub fn resolve_granularities(&self, classes: usize, tasks: usize) -> Result<Vec<usize>> {
        let mut gs = match &self.granularities {
            Some(g) => g.clone(),
            None => (tasks..=(3 * tasks).min(classes)).collect(),
        };
        gs.sort_unstable();
        gs.dedup();
        if gs.is_empty() {
            return Err(Error::invalid("no clustering granularities given"));
        }
        if let Some(&g) = gs.iter().find(|&&g| g < tasks || g > classes) {
            return Err(Error::invalid(format!(
                "granularity {g} is outside {tasks}..={classes}"
            )));
        }
        Ok(gs)
    }
}

/// A generated sequence with its score and, for hard/easy, the clustering
/// granularity that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSequence {
    pub sequence: TaskSequence,
    pub score: f64,
    pub granularity: Option<usize>,
}

fn check_divisible(classes: usize, tasks: usize) -> Result<()> {
    if tasks == 0 || classes % tasks != 0 {
        return Err(Error::NotDivisible { classes, tasks });
    }
    Ok(())
}

fn generate_extreme(
    sim: &SimilarityMatrix,
    tasks: usize,
    cfg: &GenerationConfig,
    mode: Extremum,
) -> Result<GeneratedSequence> {
    let n = sim.len();
    check_divisible(n, tasks)?;
    if tasks < 2 {
        return Err(Error::invalid("extreme sequences need at least two tasks"));
    }
    let gs = cfg.resolve_granularities(n, tasks)?;
    let graph = sim.with_zero_diagonal();
    let (dis, provenance) = match mode {
        Extremum::Min => (DissimilarityMatrix::one_minus(&graph), Provenance::Hard),
        Extremum::Max => (DissimilarityMatrix::similarity_as_distance(&graph), Provenance::Easy),
    };
    let tree = cluster::agglomerate(&dis, Linkage::Complete)?;

    let candidates: Vec<Result<GeneratedSequence>> = gs
        .par_iter()
        .map(|&g| {
            let assignment = cluster::cut(&tree, g)?;
            let partition = cluster::balance(&assignment, tasks, n)?;
            let its = its_matrix(&partition, &graph)?;
            let order = greedy_order(&its, mode);
            let sequence = TaskSequence::from_order(&partition, &order, provenance);
            let score = similarity_score(&sequence, sim)?;
            Ok(GeneratedSequence {
                sequence,
                score,
                granularity: Some(g),
            })
        })
        .collect();

    let mut best: Option<GeneratedSequence> = None;
    for c in candidates {
        let c = c?;
        if best.as_ref().is_none_or(|b| mode.better(c.score, b.score)) {
            best = Some(c);
        }
    }
    Ok(best.expect("at least one granularity"))
}

/// Sequence with low inter-task similarity: similar classes are clustered
/// into the same task and tasks are ordered to keep neighbours dissimilar.
pub fn generate_hard(sim: &SimilarityMatrix, tasks: usize, cfg: &GenerationConfig) -> Result<GeneratedSequence> {
    generate_extreme(sim, tasks, cfg, Extremum::Min)
}

/// Sequence with high inter-task similarity: similar classes are spread over
/// different tasks and tasks are ordered to keep neighbours similar.
pub fn generate_easy(sim: &SimilarityMatrix, tasks: usize, cfg: &GenerationConfig) -> Result<GeneratedSequence> {
    generate_extreme(sim, tasks, cfg, Extremum::Max)
}

/// Hard and easy sequences from one run. Should the heuristic ever rank them
/// the wrong way round, they are swapped and a warning is logged.
pub fn generate_extremes(
    sim: &SimilarityMatrix,
    tasks: usize,
    cfg: &GenerationConfig,
) -> Result<(GeneratedSequence, GeneratedSequence)> {
    let hard = generate_hard(sim, tasks, cfg)?;
    let easy = generate_easy(sim, tasks, cfg)?;
    if hard.score > easy.score {
        log::warn!(
            "hard sequence scored {} above easy sequence {}; swapping",
            hard.score,
            easy.score
        );
        let swapped_hard = GeneratedSequence {
            sequence: easy.sequence.with_provenance(Provenance::Hard),
            ..easy
        };
        let swapped_easy = GeneratedSequence {
            sequence: hard.sequence.with_provenance(Provenance::Easy),
            ..hard
        };
        return Ok((swapped_hard, swapped_easy));
    }
    Ok((hard, easy))
}

/// Uniform draw from the sequence space: shuffle the classes with a seeded
/// generator and cut the permutation into consecutive tasks.
pub fn generate_median(classes: usize, tasks: usize, seed: u64) -> Result<TaskSequence> {
    random_sequence(classes, tasks, seed, Provenance::Median)
}

/// Same draw as [`generate_median`], tagged as a random-baseline sequence.
pub fn generate_random(classes: usize, tasks: usize, seed: u64) -> Result<TaskSequence> {
    random_sequence(classes, tasks, seed, Provenance::Random)
}

fn random_sequence(
    classes: usize,
    tasks: usize,
    seed: u64,
    provenance: Provenance,
) -> Result<TaskSequence> {
    check_divisible(classes, tasks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..classes).collect();
    perm.shuffle(&mut rng);
    let m = classes / tasks;
    TaskSequence::new(perm.chunks(m).map(<[usize]>::to_vec).collect(), provenance)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block4() -> SimilarityMatrix {
        SimilarityMatrix::from_fn(4, |i, j| {
            if i == j {
                1.0
            } else if i / 2 == j / 2 {
                0.9
            } else {
                0.1
            }
        })
        .unwrap()
    }

    fn seq(tasks: Vec<Vec<usize>>) -> TaskSequence {
        TaskSequence::new(tasks, Provenance::External).unwrap()
    }

    #[test]
    fn score_examples() {
        let ones = SimilarityMatrix::from_fn(6, |_, _| 1.0).unwrap();
        let s = similarity_score(&seq(vec![vec![0, 1], vec![2, 3], vec![4, 5]]), &ones).unwrap();
        assert!((s - 2.0).abs() < 1e-12);

        let b = block4();
        let s = similarity_score(&seq(vec![vec![0, 1], vec![2, 3]]), &b).unwrap();
        assert!((s - 0.2).abs() < 1e-12);
        let s = similarity_score(&seq(vec![vec![0, 2], vec![1, 3]]), &b).unwrap();
        assert!((s - 1.0).abs() < 1e-12);

        assert!(similarity_score(&seq(vec![vec![0, 1, 2, 3]]), &b).is_err());
        assert!(similarity_score(&seq(vec![vec![0], vec![1]]), &b).is_err());
    }

    #[test]
    fn its_examples() {
        let b = block4().with_zero_diagonal();
        let p = TaskPartition::new(vec![vec![0, 1], vec![2, 3]]).unwrap();
        let its = its_matrix(&p, &b).unwrap();
        assert!((its.get(0, 1) - 0.1).abs() < 1e-12);

        let s = SimilarityMatrix::from_fn(2, |i, j| if i == j { 1.0 } else { 0.42 }).unwrap();
        let p = TaskPartition::new(vec![vec![0], vec![1]]).unwrap();
        assert_eq!(its_matrix(&p, &s).unwrap().get(1, 0), 0.42);
    }

    #[test]
    fn greedy_examples() {
        let its = ItsMatrix::from_rows(vec![vec![0.0, 0.3], vec![0.3, 0.0]]).unwrap();
        assert_eq!(greedy_order(&its, Extremum::Min), [0, 1]);
        assert_eq!(greedy_order(&its, Extremum::Max), [0, 1]);

        // Row sums 0.9, 0.5, 0.7.
        let its = ItsMatrix::from_rows(vec![
            vec![0.0, 0.35, 0.55],
            vec![0.35, 0.0, 0.15],
            vec![0.55, 0.15, 0.0],
        ])
        .unwrap();
        assert_eq!(greedy_order(&its, Extremum::Min), [1, 2, 0]);
        assert_eq!(greedy_order(&its, Extremum::Max), [0, 2, 1]);
    }

    #[test]
    fn greedy_uses_prefix_sum() {
        // Row sums 0.6, 1.1, 1.05, 0.55: start at 3, then 0. Closest to the
        // last placed task (0) would be 1, but 2 has the smaller sum to both
        // placed tasks (0.55 vs 0.6).
        let its = ItsMatrix::from_rows(vec![
            vec![0.0, 0.1, 0.5, 0.0],
            vec![0.1, 0.0, 0.5, 0.5],
            vec![0.5, 0.5, 0.0, 0.05],
            vec![0.0, 0.5, 0.05, 0.0],
        ])
        .unwrap();
        assert_eq!(greedy_order(&its, Extremum::Min), [3, 0, 2, 1]);
    }

    #[test]
    fn block_matrix_extremes() {
        let cfg = GenerationConfig::default();
        let hard = generate_hard(&block4(), 2, &cfg).unwrap();
        assert!((hard.score - 0.2).abs() < 1e-12);
        let mut tasks = hard.sequence.tasks().to_vec();
        tasks.sort();
        assert_eq!(tasks, [vec![0, 1], vec![2, 3]]);
        assert_eq!(hard.sequence.provenance(), Provenance::Hard);

        let easy = generate_easy(&block4(), 2, &cfg).unwrap();
        assert!((easy.score - 1.0).abs() < 1e-12);
        let mut tasks = easy.sequence.tasks().to_vec();
        tasks.sort();
        assert!(tasks == [vec![0, 2], vec![1, 3]] || tasks == [vec![0, 3], vec![1, 2]]);
    }

    #[test]
    fn uniform_matrix_extremes() {
        let ones = SimilarityMatrix::from_fn(6, |_, _| 1.0).unwrap();
        let cfg = GenerationConfig::default();
        assert!((generate_hard(&ones, 3, &cfg).unwrap().score - 2.0).abs() < 1e-12);
        assert!((generate_easy(&ones, 3, &cfg).unwrap().score - 2.0).abs() < 1e-12);
    }

    #[test]
    fn granularity_validation() {
        let cfg = GenerationConfig {
            granularities: Some(vec![1]),
            seed: 0,
        };
        assert!(generate_hard(&block4(), 2, &cfg).is_err());
        assert_eq!(
            GenerationConfig::default().resolve_granularities(8, 4).unwrap(),
            [4, 5, 6, 7, 8]
        );
        assert_eq!(
            GenerationConfig::default().resolve_granularities(100, 10).unwrap(),
            (10..=30).collect::<Vec<_>>()
        );
        assert!(matches!(
            generate_hard(&block4(), 3, &GenerationConfig::default()),
            Err(Error::NotDivisible { .. })
        ));
    }

    #[test]
    fn median_is_deterministic() {
        let a = generate_median(12, 4, 7).unwrap();
        let b = generate_median(12, 4, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.provenance(), Provenance::Median);
        let singles = generate_median(5, 5, 3).unwrap();
        let mut flat: Vec<usize> = singles.tasks().iter().flatten().copied().collect();
        flat.sort_unstable();
        assert_eq!(flat, [0, 1, 2, 3, 4]);
    }

    #[test]
    fn display_format() {
        assert_eq!(seq(vec![vec![2, 0], vec![3, 1]]).to_string(), "[[0,2],[1,3]]");
    }
}
