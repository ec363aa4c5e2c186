//! How many random sequences a reliable mean estimate needs, and how much
//! anchoring on the two extremes saves.

use edge_eval::bounds::{
    extreme_miss_probability, greedy_bound, min_samples_edge, min_samples_rs, min_samples_rs_approx, BoundQuery,
};

fn main() -> edge_eval::Result<()> {
    let (delta, n, k) = (0.05, 100, 10);
    println!("{n} classes in {k} tasks, delta = {delta}");
    println!("{:>6} {:>10} {:>10} {:>24}", "eps", "random", "approx", "anchored (R = 0.1/0.5)");
    for eps in [0.05, 0.1, 0.2, 0.5] {
        let q = BoundQuery::for_classes(n, k, eps, delta)?;
        let rs = min_samples_rs(&q);
        let approx = min_samples_rs_approx(n, eps, delta)?;
        let anchored: Vec<String> = [0.1, 0.5]
            .iter()
            .map(|&r| {
                let b = min_samples_edge(&q.clone().with_r_sigma(r)?)?;
                Ok(b.total_cost.map_or("INFEASIBLE".into(), |t| t.to_string()))
            })
            .collect::<edge_eval::Result<_>>()?;
        println!(
            "{eps:>6} {:>10} {:>10} {:>24}",
            rs.required_l.map_or("INFEASIBLE".into(), |l| l.to_string()),
            approx.required_l.unwrap(),
            anchored.join(" / ")
        );
    }

    let small = min_samples_rs(&BoundQuery::for_classes(6, 3, 0.1, delta)?);
    println!(
        "\n6 classes in 3 tasks: {} (best achievable {:.2} against {:.2})",
        if small.feasible() { "feasible" } else { "INFEASIBLE" },
        small.lhs_max.unwrap(),
        small.rhs
    );

    println!("\nchance that L random draws miss a 1% tail:");
    for l in [3.0, 30.0, 300.0] {
        println!("  L = {l:>5}: {:.4}", extreme_miss_probability(0.01, l)?);
    }

    let g = greedy_bound(24, 4, 0.9, 1.0)?;
    println!(
        "\ngreedy ordering, 24 classes / 4 tasks, mean similarity 0.9: gap {:.3}, holds w.p. {:.3}, threshold {}",
        g.delta_gap,
        g.high_prob_guarantee,
        if g.threshold_ok { "met" } else { "not met" }
    );
    Ok(())
}
