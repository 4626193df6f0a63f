//! Simulate a three-state chain with mixed sojourn laws and inspect the
//! occupation-time bookkeeping.
//!
//! ```bash
//! cargo run --example simulate_path
//! ```

use semimarkov::model::{JumpKernel, SemiMarkovModel, SojournLaw};
use semimarkov::simulate::simulate_path;

fn main() {
    let kernel = JumpKernel::new(vec![
        vec![0.0, 0.4, 0.5],
        vec![0.7, 0.0, 0.5],
        vec![0.3, 0.6, 0.0],
    ])
    .unwrap();
    let model = SemiMarkovModel::new(
        kernel,
        vec![
            // Exactly two steps in state 1, geometric dwell in state 2,
            // a small bell-shaped dwell in state 3.
            SojournLaw::deterministic(2).unwrap(),
            SojournLaw::geometric(0.4, 12).unwrap(),
            SojournLaw::new(vec![0.2, 0.5, 0.3]).unwrap(),
        ],
        vec![1.0, 0.0, 0.0],
    )
    .unwrap();

    let path = simulate_path(&model, 30, 7);
    println!(" k  state  clock");
    for k in 0..path.len() {
        println!(
            "{:2}   {}      {}",
            k,
            path.states[k] + 1,
            path.sojourn_clock[k]
        );
    }
    println!("jumps at: {:?}", path.jump_times);

    // Empirical mean dwell per state over a long run.
    let long = simulate_path(&model, 200_000, 8);
    let mut dwell_sum = [0usize; 3];
    let mut dwell_count = [0usize; 3];
    let mut boundaries = vec![0];
    boundaries.extend(&long.jump_times);
    for w in boundaries.windows(2) {
        let state = long.states[w[0]];
        dwell_sum[state] += w[1] - w[0];
        dwell_count[state] += 1;
    }
    println!("\nmean dwell (empirical vs law):");
    for i in 0..3 {
        let empirical = dwell_sum[i] as f64 / dwell_count[i] as f64;
        println!(
            "  state {}: {:.3} vs {:.3}",
            i + 1,
            empirical,
            model.sojourn(i).mean()
        );
    }
}
