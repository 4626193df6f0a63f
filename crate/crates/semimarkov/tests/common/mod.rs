//! Shared fixtures for the integration suites: an independently written
//! classical HMM forward-backward/E-step oracle, randomized model
//! generation, and small numeric helpers.

#![allow(clippy::needless_range_loop)]
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use semimarkov::model::{JumpKernel, ObservationModel, SemiMarkovModel, SojournLaw};

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!(
        (a - b).abs() <= tol,
        "{what}: {a} vs {b} (tol {tol}, diff {})",
        (a - b).abs()
    );
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn bundled(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("models")
        .join(name)
}

pub fn load_bundled(name: &str) -> (SemiMarkovModel, ObservationModel) {
    let (model, obs) = semimarkov::io::load_model(bundled(name)).expect("bundled model loads");
    (model, obs.expect("bundled models carry observations"))
}

/// Random model with well-spread probabilities: N in 2..=6, sojourn
/// supports up to `max_support`.
pub fn random_model(rng: &mut ChaCha8Rng, max_support: usize) -> SemiMarkovModel {
    let n = rng.gen_range(2..=6);
    let mut rows = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut weights: Vec<f64> = (0..n)
            .map(|row| {
                if row == col {
                    0.0
                } else {
                    rng.gen_range(0.05..1.0)
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        for (row, &w) in weights.iter().enumerate() {
            rows[row][col] = w;
        }
    }
    let kernel = JumpKernel::new(rows).expect("random kernel is valid");

    let sojourns = (0..n)
        .map(|_| {
            let support = rng.gen_range(1..=max_support);
            let mut pmf: Vec<f64> = (0..support).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = pmf.iter().sum();
            for p in &mut pmf {
                *p /= total;
            }
            SojournLaw::new(pmf).expect("random pmf is valid")
        })
        .collect();

    let mut p0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = p0.iter().sum();
    for p in &mut p0 {
        *p /= total;
    }
    SemiMarkovModel::new(kernel, sojourns, p0).expect("random model is valid")
}

/// Classical scaled forward-backward with Gaussian emissions, written in
/// the row-stochastic convention, independent of the library's recursions.
pub struct RefHmm {
    /// `trans[i][j] = P(next = j | current = i)`.
    pub trans: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

/// E-step output of the reference implementation.
pub struct RefEStep {
    /// Filtered posteriors (normalized forward variables).
    pub filtered: Vec<Vec<f64>>,
    /// Smoothed posteriors.
    pub smoothed: Vec<Vec<f64>>,
    /// `expected_jumps[to][from] = E[#transitions from→to | y]`.
    pub expected_jumps: Vec<Vec<f64>>,
    /// `E[#steps departing from i | y]` over steps 1..=T.
    pub expected_occupation: Vec<f64>,
    /// `E[Σ y_t 1{X_{t-1}=i} | y]`.
    pub expected_obs_sum: Vec<f64>,
    /// `E[Σ y_t² 1{X_{t-1}=i} | y]`.
    pub expected_obs_sq_sum: Vec<f64>,
    /// `E[Σ_{t≥1} 1{X_t=i} | y]`.
    pub expected_emission_count: Vec<f64>,
    /// `E[Σ_{t≥1} y_t 1{X_t=i} | y]`.
    pub expected_emission_sum: Vec<f64>,
    /// `E[Σ_{t≥1} y_t² 1{X_t=i} | y]`.
    pub expected_emission_sq_sum: Vec<f64>,
}

impl RefHmm {
    /// The Markov chain induced by constant exit probabilities `rhos` and
    /// jump rows `kernel_rows[j][i] = p_ji`.
    pub fn from_geometric(
        rhos: &[f64],
        kernel_rows: &[Vec<f64>],
        pi: Vec<f64>,
        c: Vec<f64>,
        d: Vec<f64>,
    ) -> Self {
        let n = rhos.len();
        let mut trans = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                trans[i][j] = if i == j {
                    1.0 - rhos[i]
                } else {
                    rhos[i] * kernel_rows[j][i]
                };
            }
        }
        Self { trans, pi, c, d }
    }

    fn emission(&self, state: usize, y: f64) -> f64 {
        let z = (y - self.c[state]) / self.d[state];
        (-0.5 * z * z).exp() / (self.d[state] * (2.0 * std::f64::consts::PI).sqrt())
    }

    /// Normalized forward variables (filtered posteriors).
    pub fn forward(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let n = self.pi.len();
        let mut alphas = Vec::with_capacity(y.len());
        let mut alpha: Vec<f64> = (0..n)
            .map(|j| self.pi[j] * self.emission(j, y[0]))
            .collect();
        normalize(&mut alpha);
        alphas.push(alpha.clone());
        for &yt in &y[1..] {
            let mut next = vec![0.0; n];
            for (j, nx) in next.iter_mut().enumerate() {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += alpha[i] * self.trans[i][j];
                }
                *nx = acc * self.emission(j, yt);
            }
            normalize(&mut next);
            alpha = next;
            alphas.push(alpha.clone());
        }
        alphas
    }

    /// Full E-step: smoothed posteriors plus expected sufficient statistics.
    pub fn e_step(&self, y: &[f64]) -> RefEStep {
        let n = self.pi.len();
        let t_max = y.len() - 1;
        let filtered = self.forward(y);

        // Backward variables, rescaled to unit sum at each step.
        let mut betas = vec![vec![1.0; n]; y.len()];
        for t in (0..t_max).rev() {
            let mut beta = vec![0.0; n];
            for (i, b) in beta.iter_mut().enumerate() {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += self.trans[i][j] * self.emission(j, y[t + 1]) * betas[t + 1][j];
                }
                *b = acc;
            }
            normalize(&mut beta);
            betas[t] = beta;
        }

        let mut smoothed = Vec::with_capacity(y.len());
        for t in 0..y.len() {
            let mut g: Vec<f64> = filtered[t]
                .iter()
                .zip(&betas[t])
                .map(|(a, b)| a * b)
                .collect();
            normalize(&mut g);
            smoothed.push(g);
        }

        let mut expected_jumps = vec![vec![0.0; n]; n];
        let mut expected_occupation = vec![0.0; n];
        let mut expected_obs_sum = vec![0.0; n];
        let mut expected_obs_sq_sum = vec![0.0; n];
        let mut expected_emission_count = vec![0.0; n];
        let mut expected_emission_sum = vec![0.0; n];
        let mut expected_emission_sq_sum = vec![0.0; n];
        for t in 1..=t_max {
            let mut xi = vec![vec![0.0; n]; n];
            let mut total = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let w = filtered[t - 1][i]
                        * self.trans[i][j]
                        * self.emission(j, y[t])
                        * betas[t][j];
                    xi[i][j] = w;
                    total += w;
                }
            }
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        expected_jumps[j][i] += xi[i][j] / total;
                    }
                }
            }
            for i in 0..n {
                expected_occupation[i] += smoothed[t - 1][i];
                expected_obs_sum[i] += y[t] * smoothed[t - 1][i];
                expected_obs_sq_sum[i] += y[t] * y[t] * smoothed[t - 1][i];
                expected_emission_count[i] += smoothed[t][i];
                expected_emission_sum[i] += y[t] * smoothed[t][i];
                expected_emission_sq_sum[i] += y[t] * y[t] * smoothed[t][i];
            }
        }

        RefEStep {
            filtered,
            smoothed,
            expected_jumps,
            expected_occupation,
            expected_obs_sum,
            expected_obs_sq_sum,
            expected_emission_count,
            expected_emission_sum,
            expected_emission_sq_sum,
        }
    }
}

fn normalize(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    assert!(total > 0.0, "normalizing a zero vector");
    for x in v.iter_mut() {
        *x /= total;
    }
}
