//! Cross-check the clock-estimate filter against the exact filter on the
//! lifted (state, sojourn-level) Markov chain, and against brute-force
//! path enumeration on a short window.
//!
//! ```bash
//! cargo run --example embedded_crosscheck
//! ```

use semimarkov::embedding::{enumerate_posterior, EmbeddedModel};
use semimarkov::filter::{run_filter, InitMode};
use semimarkov::io::load_model;
use semimarkov::simulate::{observe_path, simulate_path};

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn main() {
    let (model, obs) =
        load_model(concat!(env!("CARGO_MANIFEST_DIR"), "/models/mixed3.json")).unwrap();
    let obs = obs.unwrap();

    let path = simulate_path(&model, 500, 99);
    let y = observe_path(&path, &obs, 100);

    let approximate = run_filter(&model, &obs, &y, InitMode::Bayes0).unwrap();
    let em = EmbeddedModel::new(&model);
    println!(
        "lifted chain: {} states × {} levels = {} cells",
        em.n_states(),
        em.depth(),
        em.dim()
    );
    let exact = em.filter(&model, &obs, &y, InitMode::Bayes0).unwrap();
    let marginals = exact.state_marginals();

    let mut worst = (0.0f64, 0usize);
    let mut mean_tv = 0.0;
    for (k, (state, marginal)) in approximate.iter().zip(&marginals).enumerate() {
        let tv = total_variation(&state.posterior, marginal);
        mean_tv += tv;
        if tv > worst.0 {
            worst = (tv, k);
        }
    }
    mean_tv /= y.len() as f64;
    println!(
        "clock-estimate filter vs exact embedded filter over {} steps:",
        y.len()
    );
    println!("  mean total variation {mean_tv:.3e}");
    println!("  max total variation {:.3e} at step {}", worst.0, worst.1);

    // On a short window the enumeration oracle agrees with the embedding
    // to floating-point accuracy.
    let y_short = &y[..7];
    let enumerated = enumerate_posterior(&model, &obs, y_short).unwrap();
    let exact_short = em.filter(&model, &obs, y_short, InitMode::Bayes0).unwrap();
    let short_marginals = exact_short.state_marginals();
    let worst_oracle = enumerated
        .filtered
        .iter()
        .zip(&short_marginals)
        .map(|(a, b)| total_variation(a, b))
        .fold(0.0, f64::max);
    println!("embedding vs enumeration on 7 steps: max TV {worst_oracle:.3e}");
}
