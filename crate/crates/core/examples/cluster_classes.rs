//! Complete-linkage clustering of a similarity matrix, cut at several
//! granularities and balanced into equal-sized tasks.

use edge_eval::cluster::{agglomerate, balance, cut, DissimilarityMatrix, Linkage};
use edge_eval::simio::{cosine_similarity, load_embeddings};

fn main() -> edge_eval::Result<()> {
    let e = load_embeddings(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/cifar6.jsonl"))?;
    let sim = cosine_similarity(&e).with_zero_diagonal();
    let tree = agglomerate(&DissimilarityMatrix::one_minus(&sim), Linkage::Complete)?;
    let members = tree.cluster_members();
    let name = |c: &[usize]| c.iter().map(|&i| e.labels()[i].as_str()).collect::<Vec<_>>().join("+");

    println!("merges:");
    for (s, step) in tree.steps().iter().enumerate() {
        println!("  {:.3}  {}", step.height, name(&members[e.len() + s]));
    }
    for g in 3..=5 {
        let a = cut(&tree, g)?;
        let p = balance(&a, 3, e.len())?;
        let clusters: Vec<String> = a.members().iter().map(|c| name(c)).collect();
        let tasks: Vec<String> = p.tasks().iter().map(|t| name(t)).collect();
        println!("g = {g}: clusters {clusters:?} -> tasks {tasks:?}");
    }
    Ok(())
}
