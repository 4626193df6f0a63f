//! Compare filtered and smoothed state estimates on the same data: the
//! backward pass lets early time points borrow strength from later
//! observations.
//!
//! ```bash
//! cargo run --example smooth_states
//! ```

use semimarkov::filter::InitMode;
use semimarkov::io::load_model;
use semimarkov::simulate::{observe_path, simulate_path};
use semimarkov::smoother::smooth_run;

fn main() {
    let (model, obs) =
        load_model(concat!(env!("CARGO_MANIFEST_DIR"), "/models/mixed3.json")).unwrap();
    let obs = obs.unwrap();

    let path = simulate_path(&model, 3000, 11);
    let y = observe_path(&path, &obs, 12);
    let (forward, pass) = smooth_run(&model, &obs, &y, InitMode::Bayes0).unwrap();

    let argmax = |row: &[f64]| {
        row.iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0
    };
    let filtered_hits = forward
        .iter()
        .zip(&path.states)
        .filter(|(s, &truth)| s.map_state == truth)
        .count();
    let smoothed_hits = pass
        .smoothed
        .iter()
        .zip(&path.states)
        .filter(|(row, &truth)| argmax(row) == truth)
        .count();
    let total = path.len() as f64;
    println!(
        "filtered accuracy {:.2}%, smoothed accuracy {:.2}%",
        100.0 * filtered_hits as f64 / total,
        100.0 * smoothed_hits as f64 / total
    );

    // Average posterior mass on the true state, a smoother-friendly score.
    let mass = |rows: &[Vec<f64>]| {
        rows.iter()
            .zip(&path.states)
            .map(|(row, &truth)| row[truth])
            .sum::<f64>()
            / total
    };
    let filtered_rows: Vec<Vec<f64>> = forward.iter().map(|s| s.posterior.clone()).collect();
    println!(
        "mean posterior mass on the truth: filtered {:.4}, smoothed {:.4}",
        mass(&filtered_rows),
        mass(&pass.smoothed)
    );
}
