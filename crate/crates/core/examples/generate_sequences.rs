//! Hard, easy and median sequences for a random 40-class similarity matrix
//! split into 8 tasks, with the granularity that produced each extreme.

use edge_eval::seqgen::{generate_extremes, generate_median, similarity_score, GenerationConfig};
use edge_eval::simio::SimilarityMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> edge_eval::Result<()> {
    let (n, k) = (40, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    // Five latent groups: classes in the same group are more alike.
    let group: Vec<usize> = (0..n).map(|i| i % 5).collect();
    let noise: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(0.0..0.2)).collect()).collect();
    let sim = SimilarityMatrix::from_fn(n, |i, j| {
        if i == j {
            return 1.0;
        }
        let (a, b) = (i.min(j), i.max(j));
        let base = if group[a] == group[b] { 0.7 } else { 0.2 };
        base + noise[a][b]
    })?;

    let cfg = GenerationConfig::with_seed(1);
    let (hard, easy) = generate_extremes(&sim, k, &cfg)?;
    let median = generate_median(n, k, cfg.seed)?;
    println!("hard    S = {:.4} (granularity {:?})", hard.score, hard.granularity);
    println!("        {}", hard.sequence);
    println!("median  S = {:.4}", similarity_score(&median, &sim)?);
    println!("        {median}");
    println!("easy    S = {:.4} (granularity {:?})", easy.score, easy.granularity);
    println!("        {}", easy.sequence);
    Ok(())
}
