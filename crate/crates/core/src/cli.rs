//! Command-line front end. [`run`] parses arguments, dispatches to the
//! library and maps failures to exit statuses: 0 on success, 1 when a
//! computation is infeasible or refused, 2 for usage and input errors.
//! Every failure also produces one `error[kind]: message` line on stderr.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundQuery, BoundReport, GreedyBound};
use crate::enumerate::{self, DistributionSource, EmpiricalDistribution};
use crate::error::{Error, Result};
use crate::protocol::{self, AccuracySource, EstimatorReport, ProtocolConfig, ProtocolReport};
use crate::seqgen::{self, GenerationConfig, Provenance};
use crate::simio::{self, EmbeddingSet, SimilarityMatrix};
use crate::stats::{self, Comparison, GaussianEstimate, KsResult};
use crate::surrogate::{self, SurrogateParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REFUSED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "edge", version, about = "Estimate accuracy distributions over class orderings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Size of the sequence space.
    Count(CountArgs),
    /// List every sequence, optionally with its similarity score.
    Enumerate(EnumerateArgs),
    /// Produce a hard, easy or median sequence.
    Generate(GenerateArgs),
    /// Surrogate accuracy for every sequence.
    Landscape(LandscapeArgs),
    /// Run both estimators and compare them with the truth.
    Protocol(ProtocolArgs),
    /// Sample-size and guarantee calculations.
    Bounds(BoundsArgs),
    /// Distance between a true distribution and an estimate, directly and via a fitted Gaussian.
    Compare(CompareArgs),
    /// Box-Cox transformation and Kolmogorov-Smirnov normality check.
    Normality(NormalityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Hard,
    Easy,
    Median,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write here instead of stdout (atomically).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Defaults to json when writing a file and table otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl OutputArgs {
    fn format(&self) -> Format {
        self.format
            .unwrap_or(if self.out.is_some() { Format::Json } else { Format::Table })
    }
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Similarity table (CSV).
    #[arg(long)]
    sim: Option<PathBuf>,
    /// Class embeddings (JSON lines).
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CountArgs {
    #[arg(long)]
    classes: usize,
    #[arg(short = 'k', long)]
    tasks: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct EnumerateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Needed when no similarity input is given.
    #[arg(long)]
    classes: Option<usize>,
    #[arg(short = 'k', long)]
    tasks: usize,
    #[arg(long, default_value_t = enumerate::DEFAULT_CAP)]
    cap: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(short = 'k', long)]
    tasks: usize,
    /// Clustering granularities, as `a..b` (inclusive) or `a,b,c`.
    #[arg(long, value_parser = parse_granularities)]
    granularities: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SurrogateArgs {
    /// Parameter count of the surrogate learner.
    #[arg(long, default_value_t = 10)]
    p: usize,
    /// Samples per task.
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    /// Weight scale; defaults to one over the task size.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    noise_std: f64,
}

impl SurrogateArgs {
    fn params(&self, seed: u64) -> Result<SurrogateParams> {
        let p = SurrogateParams {
            p: self.p,
            n: self.n,
            sigma: self.sigma,
            alpha: self.alpha,
            noise_std: self.noise_std,
            seed,
            ..Default::default()
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
struct LandscapeArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(short = 'k', long)]
    tasks: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = enumerate::DEFAULT_CAP)]
    cap: u64,
    #[command(flatten)]
    surrogate: SurrogateArgs,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProtocolArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Measured accuracies (JSON lines); without it the surrogate is used.
    #[arg(long)]
    acc: Option<PathBuf>,
    #[arg(short = 'k', long)]
    tasks: usize,
    #[arg(long, value_parser = parse_granularities)]
    granularities: Option<Vec<usize>>,
    /// Seed of the median draw and of the surrogate noise.
    #[arg(long, default_value_t = protocol::DEFAULT_MEDIAN_SEED)]
    seed: u64,
    #[arg(long, default_value_t = stats::DEFAULT_BINS)]
    bins: usize,
    #[arg(long, default_value_t = enumerate::DEFAULT_CAP)]
    cap: u64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[command(flatten)]
    surrogate: SurrogateArgs,
    /// Directory for scatter, histogram and distribution files.
    #[arg(long)]
    plot_dir: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    /// Size of the sequence space, in decimal.
    #[arg(long, conflicts_with = "classes")]
    omega: Option<String>,
    #[arg(long, requires = "tasks")]
    classes: Option<usize>,
    #[arg(short = 'k', long)]
    tasks: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Accuracy gap between the extreme sequences.
    #[arg(long)]
    r_sigma: Option<f64>,
    /// Fraction of the space in an extreme tail, for the miss probability.
    #[arg(long, requires = "samples")]
    miss_fraction: Option<f64>,
    #[arg(long)]
    samples: Option<f64>,
    /// Mean inter-task similarity, for the greedy guarantee.
    #[arg(long, requires_all = ["upper", "classes"])]
    s_bar: Option<f64>,
    /// Largest pairwise similarity, for the greedy guarantee.
    #[arg(long)]
    upper: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// True distribution: a distribution file or accuracy records.
    #[arg(long)]
    truth: PathBuf,
    /// Estimate samples: a distribution file or accuracy records.
    #[arg(long)]
    estimate: PathBuf,
    #[arg(long, default_value_t = stats::DEFAULT_BINS)]
    bins: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct NormalityArgs {
    /// A distribution file or accuracy records.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_granularities(s: &str) -> std::result::Result<Vec<usize>, String> {
    let bad = |_| format!("invalid granularities `{s}`; expected a..b or a,b,c");
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(bad)?;
        let b: usize = b.trim().parse().map_err(bad)?;
        if a > b {
            return Err(format!("empty granularity range `{s}`"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(bad)).collect()
}

/// Serialized sequence: tasks, labels, how it was made and its score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceFile {
    pub provenance: Provenance,
    pub tasks: Vec<Vec<usize>>,
    pub labels: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub granularity: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Serialized accuracy sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionFile {
    pub source: DistributionSource,
    pub samples: Vec<f64>,
}

impl DistributionFile {
    pub fn from_distribution(d: &EmpiricalDistribution) -> Self {
        Self {
            source: d.source(),
            samples: d.samples().to_vec(),
        }
    }
}

/// Reads a distribution file, or falls back to accuracy records.
pub fn load_distribution(path: &Path) -> Result<EmpiricalDistribution> {
    let text = read(path)?;
    let context = path.display().to_string();
    if let Ok(f) = serde_json::from_str::<DistributionFile>(&text) {
        return EmpiricalDistribution::new(f.samples, f.source);
    }
    let records = simio::parse_accuracies(&text, &context)?;
    EmpiricalDistribution::new(records.accuracies(), DistributionSource::Truth)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_inputs(input: &InputArgs) -> Result<(Option<SimilarityMatrix>, Option<EmbeddingSet>)> {
    let embeddings = input.embeddings.as_ref().map(simio::load_embeddings).transpose()?;
    let sim = match (&input.sim, &embeddings) {
        (Some(p), _) => Some(simio::load_similarity(p)?),
        (None, Some(e)) => Some(simio::cosine_similarity(e)),
        (None, None) => None,
    };
    if let (Some(s), Some(e)) = (&sim, &embeddings) {
        if s.labels() != e.labels() {
            return Err(Error::invalid("similarity and embedding labels differ"));
        }
    }
    Ok((sim, embeddings))
}

fn require_sim(sim: Option<SimilarityMatrix>) -> Result<SimilarityMatrix> {
    sim.ok_or_else(|| Error::invalid("a similarity input is required (--sim or --embeddings)"))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn emit(out: &OutputArgs, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match &out.out {
        Some(path) => simio::write_atomic(path, text.as_bytes()),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

enum Outcome {
    Done,
    /// Output was produced but some requested computation is infeasible.
    Infeasible,
}

/// Runs the command line with `args` (including the program name).
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::Infeasible) => EXIT_REFUSED,
        Err(e) => {
            let _ = writeln!(stderr, "error[{}]: {e}", e.kind());
            exit_status(&e)
        }
    }
}

/// Exit status for a library error.
pub fn exit_status(e: &Error) -> i32 {
    match e {
        Error::CapExceeded { .. } | Error::Coverage(_) | Error::MissingAccuracy(_) | Error::Degenerate(_) => {
            EXIT_REFUSED
        }
        Error::Io { .. } | Error::Parse { .. } | Error::Invalid(_) | Error::NotDivisible { .. } => EXIT_USAGE,
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<Outcome> {
    match cmd {
        Command::Count(a) => cmd_count(&a, stdout),
        Command::Enumerate(a) => cmd_enumerate(&a, stdout),
        Command::Generate(a) => cmd_generate(&a, stdout),
        Command::Landscape(a) => cmd_landscape(&a, stdout),
        Command::Protocol(a) => cmd_protocol(&a, stdout),
        Command::Bounds(a) => cmd_bounds(&a, stdout),
        Command::Compare(a) => cmd_compare(&a, stdout),
        Command::Normality(a) => cmd_normality(&a, stdout),
    }
}

#[derive(Serialize)]
struct CountOutput {
    classes: usize,
    tasks: usize,
    omega: String,
    log10: f64,
}

fn cmd_count(a: &CountArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let omega = enumerate::count_sequences(a.classes, a.tasks)?;
    let text = match a.output.format() {
        Format::Table => format!("{omega}\n"),
        Format::Json => json(&CountOutput {
            classes: a.classes,
            tasks: a.tasks,
            log10: enumerate::ln_biguint(&omega) / std::f64::consts::LN_10,
            omega: omega.to_string(),
        }),
    };
    emit(&a.output, &text, stdout)?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct EnumeratedLine<'a> {
    tasks: &'a [Vec<usize>],
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

fn cmd_enumerate(a: &EnumerateArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let (sim, _) = load_inputs(&a.input)?;
    let classes = match (&sim, a.classes) {
        (Some(s), Some(c)) if s.len() != c => {
            return Err(Error::invalid(format!("--classes {c} but the similarity has {} classes", s.len())))
        }
        (Some(s), _) => s.len(),
        (None, Some(c)) => c,
        (None, None) => return Err(Error::invalid("give --classes or a similarity input")),
    };
    let mut text = String::new();
    for seq in enumerate::iterate_sequences(classes, a.tasks, a.cap)? {
        let score = sim.as_ref().map(|s| seqgen::similarity_score(&seq, s)).transpose()?;
        match a.output.format() {
            Format::Table => {
                let _ = match score {
                    Some(s) => writeln!(text, "{seq}\t{s:.6}"),
                    None => writeln!(text, "{seq}"),
                };
            }
            Format::Json => {
                let line = EnumeratedLine {
                    tasks: seq.tasks(),
                    score,
                };
                text.push_str(&serde_json::to_string(&line).expect("serializable"));
                text.push('\n');
            }
        }
    }
    emit(&a.output, &text, stdout)?;
    Ok(Outcome::Done)
}

fn render_sequence_table(f: &SequenceFile) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "provenance   {}", f.provenance);
    if let Some(s) = f.score {
        let _ = writeln!(t, "score        {s:.6}");
    }
    if let Some(g) = f.granularity {
        let _ = writeln!(t, "granularity  {g}");
    }
    if let Some(s) = f.seed {
        let _ = writeln!(t, "seed         {s}");
    }
    for (i, task) in f.labels.iter().enumerate() {
        let _ = writeln!(t, "task {:<7} {}", i + 1, task.join(", "));
    }
    t
}

fn cmd_generate(a: &GenerateArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let (sim, _) = load_inputs(&a.input)?;
    let sim = require_sim(sim)?;
    let cfg = GenerationConfig {
        granularities: a.granularities.clone(),
        seed: a.seed,
    };
    let file = match a.mode {
        Mode::Median => {
            let seq = seqgen::generate_median(sim.len(), a.tasks, a.seed)?;
            SequenceFile {
                provenance: seq.provenance(),
                labels: seq.labelled(sim.labels()),
                score: Some(seqgen::similarity_score(&seq, &sim)?),
                tasks: seq.tasks().to_vec(),
                granularity: None,
                seed: Some(a.seed),
            }
        }
        Mode::Hard | Mode::Easy => {
            let (hard, easy) = seqgen::generate_extremes(&sim, a.tasks, &cfg)?;
            let g = if a.mode == Mode::Hard { hard } else { easy };
            SequenceFile {
                provenance: g.sequence.provenance(),
                labels: g.sequence.labelled(sim.labels()),
                tasks: g.sequence.tasks().to_vec(),
                score: Some(g.score),
                granularity: g.granularity,
                seed: None,
            }
        }
    };
    let text = match a.output.format() {
        Format::Table => render_sequence_table(&file),
        Format::Json => json(&file),
    };
    emit(&a.output, &text, stdout)?;
    Ok(Outcome::Done)
}

fn cmd_landscape(a: &LandscapeArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let e = simio::load_embeddings(&a.embeddings)?;
    let params = a.surrogate.params(a.seed)?;
    let set = surrogate::landscape(&e, a.tasks, &params, a.cap)?;
    let text = simio::render_accuracies(&set);
    match &a.out {
        Some(path) => simio::write_atomic(path, text.as_bytes())?,
        None => stdout.write_all(text.as_bytes()).map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })?,
    }
    Ok(Outcome::Done)
}

fn estimator_rows(t: &mut String, name: &str, est: &EstimatorReport) {
    let _ = writeln!(t, "{name}");
    for s in &est.sequences {
        let _ = writeln!(
            t,
            "  {:<8} score {:>9.4}  acc {:>6}%  {}",
            s.provenance.to_string(),
            s.score,
            pct(s.accuracy),
            s.labels
                .iter()
                .map(|task| format!("[{}]", task.join(",")))
                .collect::<Vec<_>>()
                .join(" ")
        );
    }
}

fn render_bound(r: &BoundReport) -> String {
    match (r.required_l, r.total_cost) {
        (Some(_), Some(total)) => format!("{total} sequences (rhs {:.4})", r.rhs),
        (Some(l), None) => format!("{l} sequences (rhs {:.4})", r.rhs),
        (None, _) => format!(
            "INFEASIBLE (lhs max {:.4} < rhs {:.4})",
            r.lhs_max.unwrap_or(f64::NAN),
            r.rhs
        ),
    }
}

/// Human-readable protocol report; accuracies in percent with 2 decimals.
pub fn render_protocol_table(r: &ProtocolReport) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "classes {}  tasks {}  sequences {}", r.classes, r.tasks, r.omega);
    let _ = writeln!(t);
    estimator_rows(&mut t, "EDGE", &r.edge);
    estimator_rows(&mut t, "RS", &r.rs);
    let _ = writeln!(t);
    let truth = r.truth.as_ref();
    let cell = |x: Option<f64>| x.map(pct).unwrap_or_else(|| "-".into());
    let _ = writeln!(t, "{:<6}{:>10}{:>10}{:>10}", "", "Truth", "RS", "EDGE");
    let _ = writeln!(
        t,
        "{:<6}{:>10}{:>10}{:>10}",
        "min",
        cell(truth.map(|s| s.min)),
        pct(r.rs.min),
        pct(r.edge.min)
    );
    let _ = writeln!(
        t,
        "{:<6}{:>10}{:>10}{:>10}",
        "max",
        cell(truth.map(|s| s.max)),
        pct(r.rs.max),
        pct(r.edge.max)
    );
    let _ = writeln!(
        t,
        "{:<6}{:>10}{:>10}{:>10}",
        "mean",
        cell(truth.map(|s| s.mean)),
        pct(r.rs.gaussian.mean),
        pct(r.edge.gaussian.mean)
    );
    if let (Some(rs), Some(edge)) = (r.rs.comparison, r.edge.comparison) {
        let _ = writeln!(t, "{:<6}{:>10}{:>10.4}{:>10.4}", "JSD", "", rs.jsd, edge.jsd);
        let _ = writeln!(
            t,
            "{:<6}{:>10}{:>10}{:>10}",
            "W",
            "",
            pct(rs.wasserstein),
            pct(edge.wasserstein)
        );
    }
    let _ = writeln!(t);
    let b = &r.bounds;
    let _ = writeln!(t, "random sampling     {}", render_bound(&b.random_sampling));
    if let Some(x) = &b.random_sampling_approx {
        let _ = writeln!(t, "  approximation     {}", render_bound(x));
    }
    if let Some(x) = &b.extreme_assisted {
        let _ = writeln!(t, "extreme-assisted    {}", render_bound(x));
    }
    let _ = writeln!(t, "coverage of three   {}", b.coverage_of_three);
    t
}

fn write_plot_files(dir: &Path, out: &protocol::ProtocolOutput) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let csv_bytes = |rows: Vec<Vec<String>>| -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in rows {
            w.write_record(&row).map_err(|e| Error::invalid(e.to_string()))?;
        }
        w.into_inner().map_err(|e| Error::invalid(e.to_string()))
    };
    let r = &out.report;
    for (name, est, source) in [
        ("edge", &r.edge, DistributionSource::Edge),
        ("rs", &r.rs, DistributionSource::Rs),
    ] {
        let d = protocol::estimator_distribution(est, source)?;
        simio::write_atomic(
            dir.join(format!("{name}.json")),
            json(&DistributionFile::from_distribution(&d)).as_bytes(),
        )?;
    }
    if let Some(points) = &out.landscape {
        let mut rows = vec![vec!["score".to_string(), "accuracy".to_string()]];
        rows.extend(points.iter().map(|(s, a)| vec![format!("{s:?}"), format!("{a:?}")]));
        simio::write_atomic(dir.join("scatter.csv"), &csv_bytes(rows)?)?;
    }
    if let Some(truth) = &out.truth {
        simio::write_atomic(
            dir.join("truth.json"),
            json(&DistributionFile::from_distribution(truth)).as_bytes(),
        )?;
        for (name, est) in [("edge", &r.edge), ("rs", &r.rs)] {
            let (th, gh) = protocol::comparison_histograms(truth.samples(), &est.gaussian, r.bins)?;
            let mut rows = vec![["bin_lo", "bin_hi", "truth", "estimate"].map(String::from).to_vec()];
            for i in 0..th.bins() {
                rows.push(vec![
                    format!("{:?}", th.edges()[i]),
                    format!("{:?}", th.edges()[i + 1]),
                    format!("{:?}", th.masses()[i]),
                    format!("{:?}", gh.masses()[i]),
                ]);
            }
            simio::write_atomic(dir.join(format!("histogram_{name}.csv")), &csv_bytes(rows)?)?;
        }
    }
    Ok(())
}

fn cmd_protocol(a: &ProtocolArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let (sim, embeddings) = load_inputs(&a.input)?;
    let sim = require_sim(sim)?;
    let source = match (&a.acc, embeddings) {
        (Some(path), _) => AccuracySource::Records(simio::load_accuracies(path)?),
        (None, Some(embeddings)) => AccuracySource::Surrogate {
            embeddings,
            params: a.surrogate.params(a.seed)?,
        },
        (None, None) => {
            return Err(Error::invalid("give --acc, or --embeddings for surrogate accuracies"))
        }
    };
    let cfg = ProtocolConfig {
        generation: GenerationConfig {
            granularities: a.granularities.clone(),
            seed: a.seed,
        },
        bins: a.bins,
        cap: a.cap,
        epsilon: a.eps,
        delta: a.delta,
        ..ProtocolConfig::new(a.tasks)
    };
    let out = protocol::run_protocol(&sim, &source, &cfg)?;
    if let Some(dir) = &a.plot_dir {
        write_plot_files(dir, &out)?;
    }
    let text = match a.output.format() {
        Format::Table => render_protocol_table(&out.report),
        Format::Json => json(&out.report),
    };
    emit(&a.output, &text, stdout)?;
    Ok(Outcome::Done)
}

#[derive(Debug, Serialize)]
struct BoundsOutput {
    omega: String,
    epsilon: f64,
    delta: f64,
    random_sampling: BoundReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    random_sampling_approx: Option<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    extreme_assisted: Option<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    miss_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    greedy: Option<GreedyBound>,
}

fn cmd_bounds(a: &BoundsArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let omega = match (&a.omega, a.classes, a.tasks) {
        (Some(s), _, _) => s
            .trim()
            .parse::<BigUint>()
            .map_err(|_| Error::invalid(format!("--omega `{s}` is not a nonnegative integer")))?,
        (None, Some(n), Some(k)) => enumerate::count_sequences(n, k)?,
        _ => return Err(Error::invalid("give --omega, or --classes with --tasks")),
    };
    let query = BoundQuery::new(omega.clone(), a.eps, a.delta)?;
    let extreme_assisted = a
        .r_sigma
        .map(|r| bounds::min_samples_edge(&query.clone().with_r_sigma(r)?))
        .transpose()?;
    let random_sampling_approx = match a.classes {
        Some(n) => Some(bounds::min_samples_rs_approx(n, a.eps, a.delta)?),
        None => None,
    };
    let miss_probability = match (a.miss_fraction, a.samples) {
        (Some(f), Some(l)) => Some(bounds::extreme_miss_probability(f, l)?),
        _ => None,
    };
    let greedy = match (a.s_bar, a.upper, a.classes, a.tasks) {
        (Some(s), Some(u), Some(n), Some(k)) => Some(bounds::greedy_bound(n, k, s, u)?),
        _ => None,
    };
    let report = BoundsOutput {
        omega: omega.to_string(),
        epsilon: a.eps,
        delta: a.delta,
        random_sampling: bounds::min_samples_rs(&query),
        random_sampling_approx,
        extreme_assisted,
        miss_probability,
        greedy,
    };
    let text = match a.output.format() {
        Format::Json => json(&report),
        Format::Table => {
            let mut t = String::new();
            let _ = writeln!(t, "sequences           {}", report.omega);
            let _ = writeln!(t, "epsilon, delta      {}, {}", a.eps, a.delta);
            let _ = writeln!(t, "random sampling     {}", render_bound(&report.random_sampling));
            if let Some(x) = &report.random_sampling_approx {
                let _ = writeln!(t, "  approximation     {}", render_bound(x));
            }
            if let Some(x) = &report.extreme_assisted {
                let _ = writeln!(t, "extreme-assisted    {}", render_bound(x));
            }
            if let Some(p) = report.miss_probability {
                let _ = writeln!(t, "miss probability    {p:.6}");
            }
            if let Some(g) = &report.greedy {
                let _ = writeln!(t, "greedy expected     {:.6}", g.expected_random_score);
                let _ = writeln!(t, "greedy gap          {:.6}", g.delta_gap);
                let _ = writeln!(t, "greedy probability  {:.6}", g.high_prob_guarantee);
                let _ = writeln!(
                    t,
                    "greedy threshold    {:.6} ({})",
                    g.threshold,
                    if g.threshold_ok { "met" } else { "not met" }
                );
            }
            t
        }
    };
    emit(&a.output, &text, stdout)?;
    let all_feasible = report.random_sampling.feasible()
        && report.extreme_assisted.as_ref().is_none_or(BoundReport::feasible);
    Ok(if all_feasible { Outcome::Done } else { Outcome::Infeasible })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareOutput {
    pub truth_count: usize,
    pub estimate: GaussianEstimate,
    pub bins: usize,
    /// Truth against the Gaussian fitted to the estimate, as in protocol reports.
    pub gaussian: Comparison,
    /// Truth against the estimate samples themselves.
    pub empirical: Comparison,
}

fn cmd_compare(a: &CompareArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let truth = load_distribution(&a.truth)?;
    let estimate = load_distribution(&a.estimate)?;
    let g = stats::fit_gaussian(estimate.samples())?;
    let gaussian = stats::compare_gaussian(truth.samples(), &g, a.bins)?;
    let empirical = stats::compare_samples(truth.samples(), estimate.samples(), a.bins)?;
    let report = CompareOutput {
        truth_count: truth.samples().len(),
        estimate: g,
        bins: a.bins,
        gaussian,
        empirical,
    };
    let text = match a.output.format() {
        Format::Json => json(&report),
        Format::Table => format!(
            "{:<10}{:>10}{:>10}\nJSD       {:>10.6}{:>10.6}\nW         {:>10}{:>10}\n",
            "",
            "gaussian",
            "samples",
            gaussian.jsd,
            empirical.jsd,
            pct(gaussian.wasserstein),
            pct(empirical.wasserstein)
        ),
    };
    emit(&a.output, &text, stdout)?;
    Ok(Outcome::Done)
}

#[derive(Debug, Serialize)]
struct NormalityOutput {
    count: usize,
    lambda: f64,
    raw: KsResult,
    transformed: KsResult,
}

fn cmd_normality(a: &NormalityArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let d = load_distribution(&a.input)?;
    let raw = stats::ks_test(d.samples(), &stats::fit_gaussian(d.samples())?)?;
    let bc = stats::box_cox(d.samples())?;
    let transformed = stats::ks_test(&bc.transformed, &stats::fit_gaussian(&bc.transformed)?)?;
    let report = NormalityOutput {
        count: d.samples().len(),
        lambda: bc.lambda,
        raw,
        transformed,
    };
    let text = match a.output.format() {
        Format::Json => json(&report),
        Format::Table => format!(
            "samples      {}\nlambda       {:.6}\nKS raw       D {:.6}  p {:.6}\nKS box-cox   D {:.6}  p {:.6}\n",
            report.count, report.lambda, raw.statistic, raw.p_value, transformed.statistic, transformed.p_value
        ),
    };
    emit(&a.output, &text, stdout)?;
    Ok(Outcome::Done)
}
