//! Exhaustive search over a small sequence space: the exact lowest- and
//! highest-scoring orderings, compared with the clustering heuristic.

use edge_eval::enumerate::extremes_by_score;
use edge_eval::seqgen::{generate_extremes, GenerationConfig};
use edge_eval::simio::{cosine_similarity, load_embeddings};

fn main() -> edge_eval::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/cifar6.jsonl").into());
    let e = load_embeddings(&path)?;
    let sim = cosine_similarity(&e);
    let exact = extremes_by_score(&sim, 3, 1_000)?;
    let (hard, easy) = generate_extremes(&sim, 3, &GenerationConfig::default())?;

    let mut scores = exact.scores.clone();
    scores.sort_by(f64::total_cmp);
    let rank = |s: f64| scores.iter().filter(|&&x| x < s).count();

    println!("{} sequences, scores {:.4} ..= {:.4}", scores.len(), exact.min_score, exact.max_score);
    println!("exact min   {:.4}  {:?}", exact.min_score, exact.min.labelled(e.labels()));
    println!("heuristic   {:.4}  rank {}  {:?}", hard.score, rank(hard.score), hard.sequence.labelled(e.labels()));
    println!("exact max   {:.4}  {:?}", exact.max_score, exact.max.labelled(e.labels()));
    println!("heuristic   {:.4}  rank {}  {:?}", easy.score, rank(easy.score), easy.sequence.labelled(e.labels()));
    Ok(())
}
