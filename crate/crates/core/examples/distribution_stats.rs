//! Comparing a three-sample Gaussian estimate with a full accuracy
//! distribution, and checking that distribution for normality.

use edge_eval::stats::{box_cox, compare_gaussian, fit_gaussian, ks_test};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

fn main() -> edge_eval::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let beta = Beta::new(12.0, 8.0).expect("valid shape");
    let truth: Vec<f64> = (0..500).map(|_| beta.sample(&mut rng)).collect();

    for (name, picks) in [("spread", [0.42, 0.60, 0.75]), ("clustered", [0.58, 0.60, 0.61])] {
        let g = fit_gaussian(&picks)?;
        let c = compare_gaussian(&truth, &g, 64)?;
        println!(
            "{name:<10} mean {:.4} sd {:.4}  JSD {:.4}  W1 {:.4}",
            g.mean,
            g.std_dev(),
            c.jsd,
            c.wasserstein
        );
    }

    let ks = ks_test(&truth, &fit_gaussian(&truth)?)?;
    let bc = box_cox(&truth)?;
    let ks_bc = ks_test(&bc.transformed, &fit_gaussian(&bc.transformed)?)?;
    println!("\nKS on raw accuracies:      D = {:.4}, p = {:.3}", ks.statistic, ks.p_value);
    println!("Box-Cox lambda = {:.3}; KS after transform: D = {:.4}, p = {:.3}", bc.lambda, ks_bc.statistic, ks_bc.p_value);
    Ok(())
}
