//! Sample-path generation and Monte Carlo diagnostics.
//!
//! Paths are driven by a seeded `ChaCha8Rng`. Stream split: the state path
//! uses stream 0 of its seed, observation noise uses stream 1, so a shared
//! seed never correlates the two. Independent parallel paths should use
//! distinct seeds (or distinct streams of one seed).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::{ObservationModel, SemiMarkovModel};

const PATH_STREAM: u64 = 0;
const OBSERVATION_STREAM: u64 = 1;

/// One realized trajectory of the chain.
///
/// `sojourn_clock[k]` is the occupation time `h_k`: 1 when the chain has
/// just arrived, incremented while it stays. `jump_times` are exactly the
/// indices `k ≥ 1` with `states[k] != states[k-1]`.
#[derive(Debug, Clone)]
pub struct PathRecord {
    pub states: Vec<usize>,
    pub sojourn_clock: Vec<usize>,
    pub jump_times: Vec<usize>,
    pub observations: Option<Vec<f64>>,
}

impl PathRecord {
    /// Number of time points `T + 1`.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Attaches observations drawn through `observe_path`.
    pub fn with_observations(mut self, obs: &ObservationModel, seed: u64) -> Self {
        self.observations = Some(observe_path(&self, obs, seed));
        self
    }
}

/// Inverse-CDF draw from a probability vector; ties and rounding resolve to
/// the lowest index with remaining mass.
fn draw_categorical<R: Rng>(rng: &mut R, pmf: &[f64]) -> usize {
    let u: f64 = rng.gen::<f64>();
    let mut cum = 0.0;
    for (i, &p) in pmf.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    // Rounding left u ≥ total mass: take the last index with positive mass.
    pmf.iter()
        .rposition(|&p| p > 0.0)
        .expect("probability vector has positive mass")
}

/// Simulates `X_0..X_T`. `X_0 ~ p0` with clock 1; at each step the chain
/// leaves its state with the clock's exit probability and, given an exit,
/// draws the arrival from the kernel column of the departing state.
pub fn simulate_path(model: &SemiMarkovModel, horizon: usize, seed: u64) -> PathRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(PATH_STREAM);

    let mut states = Vec::with_capacity(horizon + 1);
    let mut sojourn_clock = Vec::with_capacity(horizon + 1);
    let mut jump_times = Vec::new();

    let mut state = draw_categorical(&mut rng, model.p0());
    let mut clock = 1usize;
    states.push(state);
    sojourn_clock.push(clock);

    for k in 1..=horizon {
        let exit = model.exit_probability(state, clock);
        let jumps = if exit >= 1.0 {
            true
        } else if exit <= 0.0 {
            false
        } else {
            rng.gen::<f64>() < exit
        };
        if jumps {
            state = draw_categorical(&mut rng, model.kernel().column(state));
            clock = 1;
            jump_times.push(k);
        } else {
            clock += 1;
        }
        states.push(state);
        sojourn_clock.push(clock);
    }

    PathRecord {
        states,
        sojourn_clock,
        jump_times,
        observations: None,
    }
}

/// Occupation clock of a state sequence: `h_0 = 1`,
/// `h_{k} = 1 + h_{k-1}` if the state repeats, else 1.
pub fn occupation_clock(states: &[usize]) -> Vec<usize> {
    assert!(!states.is_empty(), "state sequence must be non-empty");
    let mut clock = Vec::with_capacity(states.len());
    clock.push(1);
    for k in 1..states.len() {
        let h = if states[k] == states[k - 1] {
            clock[k - 1] + 1
        } else {
            1
        };
        clock.push(h);
    }
    clock
}

/// Per-state occupation clocks: `h^i_k = h_k` when `X_k = i`, else 0.
pub fn per_state_clocks(states: &[usize], n_states: usize) -> Vec<Vec<usize>> {
    let clock = occupation_clock(states);
    let mut out = vec![vec![0; states.len()]; n_states];
    for (k, (&s, &h)) in states.iter().zip(&clock).enumerate() {
        out[s][k] = h;
    }
    out
}

/// Draws `y_k = c(X_k) + d(X_k) w_k` with `w_k` i.i.d. standard normal.
pub fn observe_path(path: &PathRecord, obs: &ObservationModel, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(OBSERVATION_STREAM);
    path.states
        .iter()
        .map(|&s| {
            let w: f64 = rng.sample(StandardNormal);
            obs.levels()[s] + obs.noise_scales()[s] * w
        })
        .collect()
}

/// Monte Carlo check of the semimartingale decomposition
/// `X_{k+1} = A(h) X_k + M_{k+1}`: draws `n_samples` one-step transitions
/// from (state, clock) and returns the componentwise mean of
/// `X_{k+1} − A(clock) e_state`, which has expectation zero.
pub fn martingale_diagnostic(
    model: &SemiMarkovModel,
    state: usize,
    clock: usize,
    n_samples: usize,
    seed: u64,
) -> Vec<f64> {
    let n = model.n_states();
    let a = model.transition_matrix(clock);
    let predicted = a.column(state);
    let exit = model.exit_probability(state, clock);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(PATH_STREAM);

    let mut sums = vec![0.0; n];
    for _ in 0..n_samples {
        let jumps = if exit >= 1.0 {
            true
        } else if exit <= 0.0 {
            false
        } else {
            rng.gen::<f64>() < exit
        };
        let next = if jumps {
            draw_categorical(&mut rng, model.kernel().column(state))
        } else {
            state
        };
        for (j, s) in sums.iter_mut().enumerate() {
            let x = if j == next { 1.0 } else { 0.0 };
            *s += x - predicted[j];
        }
    }
    sums.iter().map(|s| s / n_samples as f64).collect()
}
