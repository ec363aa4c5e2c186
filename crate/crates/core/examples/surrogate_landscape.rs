//! A synthetic accuracy for every ordering of the six bundled classes, and
//! how it tracks the similarity score.

use edge_eval::enumerate::true_distribution;
use edge_eval::seqgen::similarity_score;
use edge_eval::simio::{cosine_similarity, load_embeddings};
use edge_eval::stats::pearson;
use edge_eval::surrogate::{landscape, SurrogateParams};

fn main() -> edge_eval::Result<()> {
    let e = load_embeddings(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/cifar6.jsonl"))?;
    let sim = cosine_similarity(&e);
    let params = SurrogateParams {
        noise_std: 0.0,
        ..Default::default()
    };
    let set = landscape(&e, 3, &params, 1_000)?;
    let mut points: Vec<(f64, f64, String)> = set
        .records()
        .iter()
        .map(|r| Ok((similarity_score(&r.sequence, &sim)?, r.accuracy, r.sequence.to_string())))
        .collect::<edge_eval::Result<_>>()?;
    points.sort_by(|a, b| a.1.total_cmp(&b.1));

    let summary = true_distribution(&set, 1_000)?.summary();
    println!(
        "{} sequences, accuracy {:.2}% ..= {:.2}%, mean {:.2}%",
        summary.count,
        100.0 * summary.min,
        100.0 * summary.max,
        100.0 * summary.mean
    );
    let (s, a): (Vec<f64>, Vec<f64>) = points.iter().map(|p| (p.0, p.1)).unzip();
    println!("Pearson r(score, accuracy) = {:.3}", pearson(&s, &a)?);
    println!("\nworst three:");
    for p in &points[..3] {
        println!("  {:.2}%  S = {:.4}  {}", 100.0 * p.1, p.0, p.2);
    }
    println!("best three:");
    for p in points.iter().rev().take(3) {
        println!("  {:.2}%  S = {:.4}  {}", 100.0 * p.1, p.0, p.2);
    }
    Ok(())
}
