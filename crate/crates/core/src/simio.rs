//! Class embeddings, similarity matrices and per-sequence accuracy records.
//!
//! File formats:
//!
//! * embeddings: JSON lines, one `{"label": "...", "vector": [..]}` object per
//!   class, in class-index order;
//! * similarity: comma-separated square table whose first row and first
//!   column carry the class labels;
//! * accuracies: JSON lines, one `{"sequence": [[..], ..], "accuracy": f}`
//!   object per evaluated sequence, accuracy as a fraction in `[0, 1]`.
//!
//! Blank lines are ignored in the JSON-lines formats. Anything else that does
//! not parse is reported with its line and column.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqgen::{Provenance, TaskSequence};

const SYMMETRY_TOL: f64 = 1e-9;
const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    labels: Vec<String>,
    vectors: Vec<Vec<f64>>,
}

impl EmbeddingSet {
    pub fn new(labels: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != vectors.len() {
            return Err(Error::invalid(format!(
                "{} labels for {} vectors",
                labels.len(),
                vectors.len()
            )));
        }
        if labels.is_empty() {
            return Err(Error::invalid("embedding set is empty"));
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return Err(Error::invalid("embedding vectors must have at least one component"));
        }
        let mut seen = HashSet::new();
        for (label, v) in labels.iter().zip(&vectors) {
            if !seen.insert(label.as_str()) {
                return Err(Error::invalid(format!("duplicate label {label:?}")));
            }
            if v.len() != dim {
                return Err(Error::invalid(format!(
                    "vector for {label:?} has dimension {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("vector for {label:?} is not finite")));
            }
            if norm(v) <= 0.0 {
                return Err(Error::invalid(format!("vector for {label:?} has zero norm")));
            }
        }
        Ok(Self { labels, vectors })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vector(&self, class: usize) -> &[f64] {
        &self.vectors[class]
    }

    /// Vector for `class` scaled to unit length.
    pub fn unit_vector(&self, class: usize) -> Vec<f64> {
        let v = &self.vectors[class];
        let n = norm(v);
        v.iter().map(|x| x / n).collect()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingLine {
    label: String,
    vector: Vec<f64>,
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    parse_embeddings(&read(path)?, &path.display().to_string())
}

pub fn parse_embeddings(text: &str, context: &str) -> Result<EmbeddingSet> {
    let mut labels = Vec::new();
    let mut vectors = Vec::new();
    let mut dim = None;
    let mut seen = HashSet::new();
    for (lineno, line) in numbered_lines(text) {
        let rec: EmbeddingLine = serde_json::from_str(line)
            .map_err(|e| json_error(context, lineno, &e))?;
        let d = *dim.get_or_insert(rec.vector.len());
        let fail = |message: String| Error::Parse {
            context: context.to_string(),
            line: lineno,
            column: 1,
            message,
        };
        if rec.vector.len() != d {
            return Err(fail(format!(
                "dimension mismatch: {} components, expected {d}",
                rec.vector.len()
            )));
        }
        if !seen.insert(rec.label.clone()) {
            return Err(fail(format!("duplicate label {:?}", rec.label)));
        }
        if norm(&rec.vector) <= 0.0 {
            return Err(fail(format!("zero-norm vector for {:?}", rec.label)));
        }
        labels.push(rec.label);
        vectors.push(rec.vector);
    }
    EmbeddingSet::new(labels, vectors)
}

pub fn save_embeddings(e: &EmbeddingSet, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for (label, vector) in e.labels.iter().zip(&e.vectors) {
        let line = EmbeddingLine {
            label: label.clone(),
            vector: vector.clone(),
        };
        out.push_str(&serde_json::to_string(&line).expect("serializable"));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Symmetric class-to-class similarity matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    labels: Vec<String>,
    entries: Vec<f64>,
    n: usize,
    diagonal_zeroed: bool,
}

impl SimilarityMatrix {
    /// Validates symmetry (1e-9) and range ([-1, 1] with 1e-9 slack).
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if labels.len() != n {
            return Err(Error::invalid(format!("{} labels for {n} rows", labels.len())));
        }
        if n < 2 {
            return Err(Error::invalid("similarity matrix needs at least two classes"));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!(
                    "matrix is not square: row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        let m = Self {
            labels,
            entries,
            n,
            diagonal_zeroed: false,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let rows = (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect();
        Self::new(default_labels(n), rows)
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.get(i, j);
                if !v.is_finite() || v.abs() > 1.0 + RANGE_SLACK {
                    return Err(Error::invalid(format!(
                        "entry ({i}, {j}) = {v} is outside [-1, 1]"
                    )));
                }
                if j > i && (v - self.get(j, i)).abs() > SYMMETRY_TOL {
                    return Err(Error::invalid(format!(
                        "matrix is not symmetric at ({i}, {j}): {v} vs {}",
                        self.get(j, i)
                    )));
                }
            }
        }
        let mut seen = HashSet::new();
        for l in &self.labels {
            if !seen.insert(l) {
                return Err(Error::invalid(format!("duplicate label {l:?}")));
            }
        }
        Ok(())
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

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn diagonal_zeroed(&self) -> bool {
        self.diagonal_zeroed
    }

    pub fn with_zero_diagonal(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.entries[i * self.n + i] = 0.0;
        }
        out.diagonal_zeroed = true;
        out
    }

    /// Largest entry off the diagonal.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    best = best.max(self.get(i, j));
                }
            }
        }
        best
    }

    /// Arithmetic mean of the off-diagonal entries.
    pub fn mean_off_diagonal(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    sum += self.get(i, j);
                }
            }
        }
        sum / (self.n * (self.n - 1)) as f64
    }
}

pub(crate) fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i}")).collect()
}

/// Cosine similarity between every pair of class vectors. The diagonal is
/// exactly 1 and the matrix is symmetric by construction.
pub fn cosine_similarity(e: &EmbeddingSet) -> SimilarityMatrix {
    let n = e.len();
    let units: Vec<Vec<f64>> = (0..n).map(|i| e.unit_vector(i)).collect();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        entries[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let c: f64 = units[i].iter().zip(&units[j]).map(|(a, b)| a * b).sum();
            let c = c.clamp(-1.0, 1.0);
            entries[i * n + j] = c;
            entries[j * n + i] = c;
        }
    }
    SimilarityMatrix {
        labels: e.labels.clone(),
        entries,
        n,
        diagonal_zeroed: false,
    }
}

pub fn load_similarity(path: impl AsRef<Path>) -> Result<SimilarityMatrix> {
    let path = path.as_ref();
    parse_similarity(&read(path)?, &path.display().to_string())
}

pub fn parse_similarity(text: &str, context: &str) -> Result<SimilarityMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let perr = |line: usize, column: usize, message: String| Error::Parse {
        context: context.to_string(),
        line,
        column,
        message,
    };
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_error(context, &e))?,
        None => return Err(perr(1, 1, "empty similarity table".into())),
    };
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = labels.len();
    let mut rows = Vec::with_capacity(n);
    for rec in records {
        let rec = rec.map_err(|e| csv_error(context, &e))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != n + 1 {
            return Err(perr(
                line,
                rec.len().min(n + 1) + 1,
                format!("non-square table: row has {} values, expected {n}", rec.len().saturating_sub(1)),
            ));
        }
        let row_label = &rec[0];
        if rows.len() >= n {
            return Err(perr(line, 1, format!("non-square table: more than {n} rows")));
        }
        if row_label != labels[rows.len()] {
            return Err(perr(
                line,
                1,
                format!("row label {row_label:?} does not match column label {:?}", labels[rows.len()]),
            ));
        }
        let mut row = Vec::with_capacity(n);
        for (col, field) in rec.iter().enumerate().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|_| perr(line, col + 1, format!("not a number: {field:?}")))?;
            if !v.is_finite() || v.abs() > 1.0 + RANGE_SLACK {
                return Err(perr(line, col + 1, format!("entry {v} is outside [-1, 1]")));
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(perr(
            rows.len() + 2,
            1,
            format!("non-square table: {} rows for {n} columns", rows.len()),
        ));
    }
    SimilarityMatrix::new(labels, rows)
}

/// Values are written with the shortest representation that parses back to
/// the same `f64`, so save followed by load is bit-identical.
pub fn save_similarity(m: &SimilarityMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, render_similarity(m).as_bytes())
}

pub fn render_similarity(m: &SimilarityMatrix) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header = vec![String::from("class")];
    header.extend(m.labels.iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for i in 0..m.n {
        let mut row = vec![m.labels[i].clone()];
        row.extend(m.row(i).iter().map(|v| format!("{v:?}")));
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRecord {
    pub sequence: TaskSequence,
    pub accuracy: f64,
}

/// Accuracies (fractions) for sequences that share one `(N, K)` shape.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRecordSet {
    records: Vec<AccuracyRecord>,
}

impl AccuracyRecordSet {
    pub fn new(records: Vec<AccuracyRecord>) -> Result<Self> {
        if let Some(first) = records.first() {
            let shape = (first.sequence.num_classes(), first.sequence.num_tasks());
            for r in &records {
                let s = (r.sequence.num_classes(), r.sequence.num_tasks());
                if s != shape {
                    return Err(Error::invalid(format!(
                        "inconsistent shape: (N, K) = {s:?} after {shape:?}"
                    )));
                }
                check_accuracy(r.accuracy)?;
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[AccuracyRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `(N, K)` shared by every record, if any.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.records
            .first()
            .map(|r| (r.sequence.num_classes(), r.sequence.num_tasks()))
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.accuracy).collect()
    }

    /// Accuracy lookup keyed by canonical task lists. Later duplicates win.
    pub fn index(&self) -> HashMap<Vec<Vec<usize>>, f64> {
        self.records
            .iter()
            .map(|r| (r.sequence.tasks().to_vec(), r.accuracy))
            .collect()
    }
}

fn check_accuracy(a: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::invalid(format!("accuracy {a} is outside [0, 1]")));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AccuracyLine {
    sequence: Vec<Vec<usize>>,
    accuracy: f64,
}

pub fn load_accuracies(path: impl AsRef<Path>) -> Result<AccuracyRecordSet> {
    let path = path.as_ref();
    parse_accuracies(&read(path)?, &path.display().to_string())
}

pub fn parse_accuracies(text: &str, context: &str) -> Result<AccuracyRecordSet> {
    let mut records = Vec::new();
    let mut shape = None;
    for (lineno, line) in numbered_lines(text) {
        let rec: AccuracyLine =
            serde_json::from_str(line).map_err(|e| json_error(context, lineno, &e))?;
        let fail = |message: String| Error::Parse {
            context: context.to_string(),
            line: lineno,
            column: 1,
            message,
        };
        let sequence = TaskSequence::new(rec.sequence, Provenance::External)
            .map_err(|e| fail(format!("malformed sequence: {e}")))?;
        check_accuracy(rec.accuracy).map_err(|e| fail(e.to_string()))?;
        let s = (sequence.num_classes(), sequence.num_tasks());
        if *shape.get_or_insert(s) != s {
            return Err(fail(format!(
                "inconsistent shape: (N, K) = {s:?}, earlier rows have {:?}",
                shape.unwrap()
            )));
        }
        records.push(AccuracyRecord {
            sequence,
            accuracy: rec.accuracy,
        });
    }
    AccuracyRecordSet::new(records)
}

pub fn render_accuracies(set: &AccuracyRecordSet) -> String {
    let mut out = String::new();
    for r in &set.records {
        let line = AccuracyLine {
            sequence: r.sequence.tasks().to_vec(),
            accuracy: r.accuracy,
        };
        out.push_str(&serde_json::to_string(&line).expect("serializable"));
        out.push('\n');
    }
    out
}

pub fn save_accuracies(set: &AccuracyRecordSet, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, render_accuracies(set).as_bytes())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn json_error(context: &str, line: usize, e: &serde_json::Error) -> Error {
    Error::Parse {
        context: context.to_string(),
        line,
        column: e.column().max(1),
        message: e.to_string(),
    }
}

fn csv_error(context: &str, e: &csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse {
        context: context.to_string(),
        line,
        column: 1,
        message: e.to_string(),
    }
}

/// Writes through a temporary file in the destination directory and renames
/// it into place.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_embeddings() {
        let e = parse_embeddings(
            "{\"label\":\"a\",\"vector\":[1,0]}\n{\"label\":\"b\",\"vector\":[0,1]}\n",
            "t",
        )
        .unwrap();
        assert_eq!((e.len(), e.dim()), (2, 2));
        assert_eq!(e.labels(), ["a", "b"]);
    }

    #[test]
    fn embedding_errors() {
        let mismatch = parse_embeddings(
            "{\"label\":\"a\",\"vector\":[1,0]}\n{\"label\":\"b\",\"vector\":[0,1,2]}\n",
            "t",
        )
        .unwrap_err();
        assert!(matches!(mismatch, Error::Parse { line: 2, .. }), "{mismatch}");
        assert!(mismatch.to_string().contains("dimension mismatch"));

        let dup = parse_embeddings(
            "{\"label\":\"a\",\"vector\":[1,0]}\n{\"label\":\"a\",\"vector\":[0,1]}\n",
            "t",
        )
        .unwrap_err();
        assert!(dup.to_string().contains("duplicate"));

        let zero = parse_embeddings("{\"label\":\"a\",\"vector\":[0,0]}\n", "t").unwrap_err();
        assert!(zero.to_string().contains("zero-norm"));

        let garbage = parse_embeddings("{\"label\":\"a\",\"vector\":[1,0]} x\n", "t").unwrap_err();
        match garbage {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (1, 30)),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn cosine_examples() {
        let e = EmbeddingSet::new(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
        )
        .unwrap();
        let s = cosine_similarity(&e);
        assert_eq!(s.get(0, 1), 1.0);
        assert_eq!(s.get(0, 2), 0.0);
        assert!((s.get(3, 0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        for i in 0..4 {
            assert_eq!(s.get(i, i), 1.0);
        }
        assert!(!s.diagonal_zeroed());
        assert!(s.with_zero_diagonal().diagonal_zeroed());
    }

    #[test]
    fn negative_cosines_are_kept() {
        let e = EmbeddingSet::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
        )
        .unwrap();
        assert_eq!(cosine_similarity(&e).get(0, 1), -1.0);
    }

    #[test]
    fn similarity_table_errors() {
        let ok = parse_similarity("class,a,b\na,1,0\nb,0,1\n", "t").unwrap();
        assert_eq!(ok.len(), 2);

        let non_square = parse_similarity("class,a,b\na,1,0,0\nb,0,1\n", "t").unwrap_err();
        assert!(non_square.to_string().contains("non-square"), "{non_square}");
        let short = parse_similarity("class,a,b,c\na,1,0,0\nb,0,1,0\n", "t").unwrap_err();
        assert!(short.to_string().contains("non-square"), "{short}");

        let range = parse_similarity("class,a,b\na,1,1.5\nb,1.5,1\n", "t").unwrap_err();
        match range {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (2, 3)),
            other => panic!("{other}"),
        }

        let asym = parse_similarity("class,a,b\na,1,0.5\nb,0.4,1\n", "t").unwrap_err();
        assert!(asym.to_string().contains("symmetric"), "{asym}");

        let garbage = parse_similarity("class,a,b\na,1,0\nb,0,1x\n", "t").unwrap_err();
        match garbage {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (3, 3)),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn accuracy_rows() {
        let set = parse_accuracies("{\"sequence\":[[1,0],[2,3]],\"accuracy\":0.85}\n", "t").unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.records()[0].sequence.tasks(), [vec![0, 1], vec![2, 3]]);

        let range = parse_accuracies("{\"sequence\":[[0,1],[2,3]],\"accuracy\":1.2}\n", "t").unwrap_err();
        assert!(range.to_string().contains("outside [0, 1]"));

        let shape = parse_accuracies(
            "{\"sequence\":[[0,1],[2,3]],\"accuracy\":0.2}\n{\"sequence\":[[0],[1],[2],[3]],\"accuracy\":0.2}\n",
            "t",
        )
        .unwrap_err();
        assert!(matches!(shape, Error::Parse { line: 2, .. }));

        let malformed = parse_accuracies("{\"sequence\":[[0,1],[1,2]],\"accuracy\":0.2}\n", "t").unwrap_err();
        assert!(malformed.to_string().contains("malformed sequence"));
    }
}
