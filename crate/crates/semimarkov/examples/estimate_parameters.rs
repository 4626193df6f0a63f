//! Recover model parameters from a noisy path: per-step jump
//! probabilities, observation levels, and noise scales.
//!
//! ```bash
//! cargo run --example estimate_parameters
//! ```

use semimarkov::estimate::EstimationRun;
use semimarkov::filter::InitMode;
use semimarkov::io::load_model;
use semimarkov::simulate::{observe_path, simulate_path};

fn main() {
    let (model, obs) = load_model(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/models/geometric2.json"
    ))
    .unwrap();
    let obs = obs.unwrap();

    let horizon = 10_000;
    let path = simulate_path(&model, horizon, 90);
    let y = observe_path(&path, &obs, 91);
    let run = EstimationRun::run(&model, &obs, &y, InitMode::Bayes0).unwrap();
    let est = run.reestimate();

    println!("T = {horizon}");
    println!(
        "expected occupations: [{:.1}, {:.1}] (sum {:.3})",
        est.j_hat[0],
        est.j_hat[1],
        est.j_hat.iter().sum::<f64>()
    );
    println!(
        "expected jump counts: 1→2 {:.1}, 2→1 {:.1}",
        est.n_hat[1][0], est.n_hat[0][1]
    );
    println!(
        "per-step jump probabilities: a_hat[2][1] = {:.4} (truth 0.30), a_hat[1][2] = {:.4} (truth 0.55)",
        est.a_hat[1][0].unwrap(),
        est.a_hat[0][1].unwrap()
    );
    for i in 0..2 {
        println!(
            "state {}: c_hat = {:+.4} (truth {:+.1}), d_hat = {:.4} (truth 0.1)",
            i + 1,
            est.c_hat[i].unwrap(),
            obs.levels()[i],
            est.d_hat[i].unwrap()
        );
    }

    // True empirical frequencies on this particular path, for comparison.
    let jumps_12 = path
        .jump_times
        .iter()
        .filter(|&&k| path.states[k - 1] == 0 && path.states[k] == 1)
        .count();
    let occupation_1 = (0..horizon).filter(|&k| path.states[k] == 0).count();
    println!(
        "path truth: {jumps_12} jumps 1→2 over {occupation_1} steps in state 1 ({:.4} per step)",
        jumps_12 as f64 / occupation_1 as f64
    );
}
