//! Monte Carlo check of the semimartingale decomposition
//! `X_{k+1} = A(h) X_k + M_{k+1}`: the empirical mean of the increment
//! `M_{k+1}` must vanish for every (state, clock) pair.
//!
//! ```bash
//! cargo run --example martingale_diagnostic
//! ```

use semimarkov::io::load_model;
use semimarkov::simulate::martingale_diagnostic;

fn main() {
    let (model, _) =
        load_model(concat!(env!("CARGO_MANIFEST_DIR"), "/models/mixed3.json")).unwrap();

    let n_samples = 100_000;
    let bound = 3.0 * (0.25f64 / n_samples as f64).sqrt();
    println!("{n_samples} one-step draws per pair, 3σ bound {bound:.5}\n");
    println!("state  clock  exit prob   mean martingale increment");
    let mut worst: f64 = 0.0;
    for state in 0..model.n_states() {
        for clock in 1..=model.sojourn(state).support_len() {
            let diag = martingale_diagnostic(&model, state, clock, n_samples, 2024);
            let max = diag.iter().fold(0.0f64, |acc, &m| acc.max(m.abs()));
            worst = worst.max(max);
            let cells: Vec<String> = diag.iter().map(|m| format!("{m:+.5}")).collect();
            println!(
                "  {}      {}      {:.3}     [{}]",
                state + 1,
                clock,
                model.exit_probability(state, clock),
                cells.join(", ")
            );
        }
    }
    println!("\nworst |mean| {worst:.5} (bound {bound:.5})");
}
