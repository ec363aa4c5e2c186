//! How large the space of class orderings gets, and how little of it a
//! three-sequence evaluation sees.

use edge_eval::enumerate::{count_sequences, coverage_fraction, ln_biguint};

fn main() -> edge_eval::Result<()> {
    println!("{:>8} {:>6} {:>30}", "classes", "tasks", "sequences");
    for (n, k) in [(4, 2), (6, 2), (8, 2), (10, 2), (6, 3), (9, 3), (8, 4), (20, 4), (100, 10)] {
        let omega = count_sequences(n, k)?;
        let shown = if omega.bits() < 90 {
            omega.to_string()
        } else {
            format!("~1e{:.2}", ln_biguint(&omega) / std::f64::consts::LN_10)
        };
        println!("{n:>8} {k:>6} {shown:>30}");
    }
    let c = coverage_fraction(3, 100, 10)?;
    println!("\nthree sequences of 100 classes in 10 tasks cover {} of the space", c.to_scientific(4));
    Ok(())
}
