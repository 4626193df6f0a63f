//! Filter a noisy observation sequence and track both the hidden state and
//! its occupation clock.
//!
//! ```bash
//! cargo run --example filter_states
//! ```

use semimarkov::filter::{run_filter, InitMode};
use semimarkov::io::load_model;
use semimarkov::simulate::{observe_path, simulate_path};

fn main() {
    let (model, obs) = load_model(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/models/deterministic3.json"
    ))
    .unwrap();
    let obs = obs.unwrap();

    let path = simulate_path(&model, 2000, 42);
    let y = observe_path(&path, &obs, 43);
    let states = run_filter(&model, &obs, &y, InitMode::Bayes0).unwrap();

    let state_hits = states
        .iter()
        .zip(&path.states)
        .filter(|(s, &truth)| s.map_state == truth)
        .count();
    let clock_hits = states
        .iter()
        .zip(&path.sojourn_clock)
        .filter(|(s, &h)| s.sojourn_estimate == h)
        .count();
    println!(
        "MAP state correct on {:.2}% of steps",
        100.0 * state_hits as f64 / states.len() as f64
    );
    println!(
        "clock estimate correct on {:.2}% of steps",
        100.0 * clock_hits as f64 / states.len() as f64
    );
    println!(
        "log-likelihood ratio vs noise-only model: {:.2}",
        states.last().unwrap().log_likelihood
    );

    println!("\n k  truth  map  hhat  posterior");
    for (k, s) in states.iter().enumerate().take(12) {
        let posts: Vec<String> = s.posterior.iter().map(|p| format!("{p:.3}")).collect();
        println!(
            "{:2}    {}     {}    {}   [{}]",
            k,
            path.states[k] + 1,
            s.map_state + 1,
            s.sojourn_estimate,
            posts.join(", ")
        );
    }
}
