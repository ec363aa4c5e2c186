//! Complete-linkage agglomerative clustering and balancing of clusters into
//! equal-size tasks.

use crate::error::{Error, Result};
use crate::simio::SimilarityMatrix;

const SYMMETRY_TOL: f64 = 1e-9;

/// Square, symmetric pairwise dissimilarities with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DissimilarityMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::invalid(format!(
                "dissimilarity table has {} entries, expected {n}x{n}",
                entries.len()
            )));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::invalid(format!("diagonal entry {i} is not zero")));
            }
            for j in (i + 1)..n {
                let (a, b) = (entries[i * n + j], entries[j * n + i]);
                if !a.is_finite() || (a - b).abs() > SYMMETRY_TOL {
                    return Err(Error::invalid(format!(
                        "dissimilarity is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    entries[i * n + j] = f(i, j);
                }
            }
        }
        Self::new(n, entries)
    }

    /// `1 - sim` off the diagonal.
    pub fn one_minus(sim: &SimilarityMatrix) -> Self {
        Self::map_similarity(sim, |s| 1.0 - s)
    }

    /// The similarity itself used as a distance, so that similar classes end
    /// up in different clusters.
    pub fn similarity_as_distance(sim: &SimilarityMatrix) -> Self {
        Self::map_similarity(sim, |s| s)
    }

    fn map_similarity(sim: &SimilarityMatrix, f: impl Fn(f64) -> f64) -> Self {
        let n = sim.len();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(0.5 * (sim.get(i, j) + sim.get(j, i)));
                entries[i * n + j] = d;
                entries[j * n + i] = d;
            }
        }
        Self { n, entries }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeStep {
    /// Leaves are `0..N`; the cluster created by step `s` has id `N + s`.
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    steps: Vec<MergeStep>,
    leaf_count: usize,
}

impl Dendrogram {
    pub fn steps(&self) -> &[MergeStep] {
        &self.steps
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    /// Leaf sets of every cluster id, leaves first.
    pub fn cluster_members(&self) -> Vec<Vec<usize>> {
        let mut members: Vec<Vec<usize>> = (0..self.leaf_count).map(|i| vec![i]).collect();
        for s in &self.steps {
            let mut m = members[s.left].clone();
            m.extend_from_slice(&members[s.right]);
            m.sort_unstable();
            members.push(m);
        }
        members
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Linkage {
    #[default]
    Complete,
}

/// Agglomerative clustering. With complete linkage the distance between two
/// clusters is the largest pairwise dissimilarity between their members.
///
/// Equal-distance pairs are resolved by merging the pair with the
/// lexicographically smallest `(min id, max id)`.
pub fn agglomerate(d: &DissimilarityMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let n = d.len();
    if n < 2 {
        return Err(Error::invalid("clustering needs at least two classes"));
    }
    let Linkage::Complete = linkage;
    let total = 2 * n - 1;
    // Cluster-to-cluster distances indexed by cluster id.
    let mut dist = vec![f64::NAN; total * total];
    for i in 0..n {
        for j in 0..n {
            dist[i * total + j] = d.get(i, j);
        }
    }
    let mut size = vec![1usize; total];
    let mut active: Vec<usize> = (0..n).collect();
    let mut steps = Vec::with_capacity(n - 1);

    for step in 0..(n - 1) {
        let mut best: Option<(f64, usize, usize)> = None;
        for (ai, &a) in active.iter().enumerate() {
            let row = &dist[a * total..(a + 1) * total];
            for &b in &active[ai + 1..] {
                let v = row[b];
                if best.is_none_or(|(bv, _, _)| v < bv) {
                    best = Some((v, a, b));
                }
            }
        }
        let (height, a, b) = best.expect("at least two active clusters");
        let new_id = n + step;
        active.retain(|&c| c != a && c != b);
        for &c in &active {
            let v = dist[a * total + c].max(dist[b * total + c]);
            dist[new_id * total + c] = v;
            dist[c * total + new_id] = v;
        }
        size[new_id] = size[a] + size[b];
        active.push(new_id);
        steps.push(MergeStep {
            left: a,
            right: b,
            height,
            size: size[new_id],
        });
    }
    Ok(Dendrogram { steps, leaf_count: n })
}

/// Class-to-cluster map with cluster ids `0..g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    cluster_of: Vec<usize>,
    clusters: usize,
}

impl ClusterAssignment {
    pub fn new(cluster_of: Vec<usize>) -> Result<Self> {
        let clusters = cluster_of.iter().max().map_or(0, |m| m + 1);
        let mut used = vec![false; clusters];
        for &c in &cluster_of {
            used[c] = true;
        }
        if used.iter().any(|u| !u) {
            return Err(Error::invalid("cluster ids are not contiguous"));
        }
        Ok(Self { cluster_of, clusters })
    }

    pub fn cluster_of(&self) -> &[usize] {
        &self.cluster_of
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters
    }

    pub fn num_classes(&self) -> usize {
        self.cluster_of.len()
    }

    /// Members of each cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.clusters];
        for (class, &c) in self.cluster_of.iter().enumerate() {
            out[c].push(class);
        }
        out
    }
}

/// Flat clustering with exactly `g` clusters: the state of the merge tree
/// before its last `g - 1` merges. Cluster ids are assigned in order of each
/// cluster's smallest member.
pub fn cut(d: &Dendrogram, g: usize) -> Result<ClusterAssignment> {
    let n = d.leaf_count;
    if g == 0 || g > n {
        return Err(Error::invalid(format!("cannot cut {n} leaves into {g} clusters")));
    }
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    for (s, step) in d.steps.iter().take(n - g).enumerate() {
        parent[step.left] = n + s;
        parent[step.right] = n + s;
    }
    let root = |mut c: usize| {
        while parent[c] != c {
            c = parent[c];
        }
        c
    };
    let mut ids = std::collections::HashMap::new();
    let mut cluster_of = Vec::with_capacity(n);
    for leaf in 0..n {
        let r = root(leaf);
        let next = ids.len();
        cluster_of.push(*ids.entry(r).or_insert(next));
    }
    ClusterAssignment::new(cluster_of)
}

/// Division of `N` classes into `K` disjoint tasks of `N / K` classes each,
/// every task sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaskPartition {
    tasks: Vec<Vec<usize>>,
}

impl TaskPartition {
    pub fn new(mut tasks: Vec<Vec<usize>>) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::invalid("partition has no tasks"));
        }
        let m = tasks[0].len();
        if m == 0 {
            return Err(Error::invalid("tasks must not be empty"));
        }
        let n = m * tasks.len();
        let mut seen = vec![false; n];
        for t in &mut tasks {
            if t.len() != m {
                return Err(Error::invalid(format!(
                    "tasks have unequal sizes ({} vs {m})",
                    t.len()
                )));
            }
            t.sort_unstable();
            for &c in t.iter() {
                if c >= n {
                    return Err(Error::invalid(format!(
                        "class {c} out of range for {n} classes"
                    )));
                }
                if std::mem::replace(&mut seen[c], true) {
                    return Err(Error::invalid(format!("class {c} appears twice")));
                }
            }
        }
        Ok(Self { tasks })
    }

    pub fn tasks(&self) -> &[Vec<usize>] {
        &self.tasks
    }

    pub fn into_tasks(self) -> Vec<Vec<usize>> {
        self.tasks
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
}

fn smallest_task(tasks: &[Vec<usize>]) -> usize {
    let mut best = 0;
    for (i, t) in tasks.iter().enumerate() {
        if t.len() < tasks[best].len() {
            best = i;
        }
    }
    best
}

/// Packs clusters into `tasks` tasks of `classes / tasks` classes each.
///
/// Clusters are visited largest first. A cluster bigger than the task size
/// keeps its first `M` members (ascending) in the currently smallest task and
/// donates the rest one by one, ascending, to whichever task is smallest at
/// that moment. Other clusters go whole to the currently smallest task. A
/// final pass moves the most recently assigned classes out of oversized tasks
/// into the smallest ones. Ties between tasks go to the lowest index.
pub fn balance(a: &ClusterAssignment, tasks: usize, classes: usize) -> Result<TaskPartition> {
    if a.num_classes() == 0 {
        return Err(Error::invalid("empty cluster assignment"));
    }
    if a.num_classes() != classes {
        return Err(Error::invalid(format!(
            "assignment covers {} classes, expected {classes}",
            a.num_classes()
        )));
    }
    if tasks == 0 || classes % tasks != 0 {
        return Err(Error::NotDivisible { classes, tasks });
    }
    let m = classes / tasks;
    let mut clusters = a.members();
    // Stable: equal sizes keep smallest-member order.
    clusters.sort_by_key(|c| std::cmp::Reverse(c.len()));

    let mut out: Vec<Vec<usize>> = vec![Vec::with_capacity(m); tasks];
    for cluster in clusters {
        if cluster.len() > m {
            let t = smallest_task(&out);
            out[t].extend_from_slice(&cluster[..m]);
            for &c in &cluster[m..] {
                let t = smallest_task(&out);
                out[t].push(c);
            }
        } else {
            let t = smallest_task(&out);
            out[t].extend_from_slice(&cluster);
        }
    }
    while let Some(over) = out.iter().position(|t| t.len() > m) {
        let c = out[over].pop().expect("oversized task is non-empty");
        let t = smallest_task(&out);
        out[t].push(c);
    }
    TaskPartition::new(out)
}
