//! The complete estimation run on the bundled six-class embeddings, with
//! surrogate accuracies standing in for trained models.

use edge_eval::cli::render_protocol_table;
use edge_eval::protocol::{run_protocol, AccuracySource, ProtocolConfig};
use edge_eval::simio::{cosine_similarity, load_embeddings};
use edge_eval::surrogate::SurrogateParams;

fn main() -> edge_eval::Result<()> {
    let embeddings = load_embeddings(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/cifar6.jsonl"))?;
    let sim = cosine_similarity(&embeddings);
    let source = AccuracySource::Surrogate {
        embeddings,
        params: SurrogateParams {
            noise_std: 0.02,
            ..Default::default()
        },
    };
    let out = run_protocol(&sim, &source, &ProtocolConfig::new(3))?;
    print!("{}", render_protocol_table(&out.report));
    Ok(())
}
