//! Exact Markov embedding of the chain on (state, sojourn-level) pairs.
//!
//! Lifting the state to `(i, r)` — state `i` held for `r` consecutive steps
//! so far — makes the semi-Markov chain Markov. With exit probability
//! `Δ^i` at level `r`,
//!
//! ```text
//! (i, r) → (i, r+1)  with probability 1 − Δ^i
//! (i, r) → (j, 1)    with probability p_ji Δ^i      (j ≠ i)
//! ```
//!
//! Levels are truncated at the longest sojourn support `M`; there the exit
//! is certain, so the truncated transition matrix `C` stays column
//! stochastic and represents finite-support models exactly. Block layout is
//! level-major: lifted index `(r−1)·N + i`, jump blocks `Π(r)` across the
//! first block row, continuation blocks `D(r)` on the subdiagonal.
//!
//! The embedded filter `q̄_{k+1} = B̄(y_{k+1}) C q̄_k` is the exact Bayes
//! filter for the lifted chain and serves as a correctness oracle for the
//! approximate clock-estimate filter, alongside an even more direct oracle
//! that enumerates every state path.

use thiserror::Error;

use crate::filter::{InitMode, MASS_UNDERFLOW};
use crate::model::{ObservationModel, SemiMarkovModel};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("sojourn support {required} exceeds the embedding depth {depth}")]
    DepthTooSmall { required: usize, depth: usize },
    #[error("observation sequence is empty")]
    EmptyObservations,
    #[error("model has {model} states but observation model has {obs}")]
    DimensionMismatch { model: usize, obs: usize },
    #[error("distribution has {len} entries but the lifted space has {dim}")]
    LiftedDimension { len: usize, dim: usize },
    #[error("filtered mass underflowed at step {step}")]
    MassUnderflow { step: usize },
    #[error("enumeration over {states}^{points} paths exceeds the 1e7 guard")]
    TooManyPaths { states: usize, points: usize },
}

/// Sparse column storage: each column keeps its nonzero (row, value) pairs.
#[derive(Debug, Clone)]
pub struct SparseColumns {
    dim: usize,
    columns: Vec<Vec<(usize, f64)>>,
}

impl SparseColumns {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            columns: vec![Vec::new(); dim],
        }
    }

    fn push(&mut self, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            self.columns[col].push((row, value));
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column(&self, col: usize) -> &[(usize, f64)] {
        &self.columns[col]
    }

    pub fn column_nonzeros(&self, col: usize) -> usize {
        self.columns[col].len()
    }

    /// `C · v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        let mut out = vec![0.0; self.dim];
        for (col, &w) in v.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for &(row, value) in &self.columns[col] {
                out[row] += value * w;
            }
        }
        out
    }
}

/// The truncated lifted chain: `N·M` states, column-stochastic sparse `C`.
#[derive(Debug, Clone)]
pub struct EmbeddedModel {
    n: usize,
    depth: usize,
    transitions: SparseColumns,
}

impl EmbeddedModel {
    /// Embeds with depth equal to the longest sojourn support.
    pub fn new(model: &SemiMarkovModel) -> Self {
        Self::with_depth(model, model.max_support()).expect("max support fits itself")
    }

    /// Embeds with an explicit depth, which must cover every support.
    pub fn with_depth(model: &SemiMarkovModel, depth: usize) -> Result<Self, EmbeddingError> {
        let required = model.max_support();
        if depth < required {
            return Err(EmbeddingError::DepthTooSmall { required, depth });
        }
        let n = model.n_states();
        let dim = n * depth;
        let mut transitions = SparseColumns::new(dim);
        for level in 1..=depth {
            for state in 0..n {
                let col = Self::index(n, state, level);
                let exit = model.exit_probability(state, level);
                // Jumps land at level 1 of the arrival state.
                for to in 0..n {
                    let p = model.kernel().prob(to, state) * exit;
                    transitions.push(Self::index(n, to, 1), col, p);
                }
                // Continuation climbs one level; at the truncation depth the
                // exit probability is 1, so no mass is lost.
                if level < depth {
                    transitions.push(Self::index(n, state, level + 1), col, 1.0 - exit);
                }
            }
        }
        Ok(Self {
            n,
            depth,
            transitions,
        })
    }

    fn index(n: usize, state: usize, level: usize) -> usize {
        debug_assert!(level >= 1);
        (level - 1) * n + state
    }

    /// Lifted index of (state, level), level-major with levels from 1.
    pub fn lifted_index(&self, state: usize, level: usize) -> usize {
        Self::index(self.n, state, level)
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn dim(&self) -> usize {
        self.n * self.depth
    }

    pub fn transitions(&self) -> &SparseColumns {
        &self.transitions
    }

    /// Lifts `p0` onto sojourn level 1.
    pub fn initial_distribution(&self, p0: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        out[..self.n].copy_from_slice(p0);
        out
    }

    /// Sums a lifted vector over levels, yielding the state marginal.
    pub fn state_marginal(&self, lifted: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (idx, &value) in lifted.iter().enumerate() {
            out[idx % self.n] += value;
        }
        out
    }

    /// Observation vectors replicated across sojourn levels: the lifted
    /// cell (i, r) keeps state i's level and noise scale.
    pub fn lifted_observation(&self, obs: &ObservationModel) -> (Vec<f64>, Vec<f64>) {
        let mut c = Vec::with_capacity(self.dim());
        let mut d = Vec::with_capacity(self.dim());
        for _ in 0..self.depth {
            c.extend_from_slice(obs.levels());
            d.extend_from_slice(obs.noise_scales());
        }
        (c, d)
    }

    /// `C^steps · dist`.
    pub fn predict(&self, dist: &[f64], steps: usize) -> Result<Vec<f64>, EmbeddingError> {
        if dist.len() != self.dim() {
            return Err(EmbeddingError::LiftedDimension {
                len: dist.len(),
                dim: self.dim(),
            });
        }
        let mut v = dist.to_vec();
        for _ in 0..steps {
            v = self.transitions.apply(&v);
        }
        Ok(v)
    }

    /// Exact filter on the lifted chain, `q̄_{k+1} = B̄(y_{k+1}) C q̄_k`,
    /// rescaled to unit sum each step with the log mass accumulated.
    pub fn filter(
        &self,
        model: &SemiMarkovModel,
        obs: &ObservationModel,
        y: &[f64],
        init: InitMode,
    ) -> Result<EmbeddedFilterOutput, EmbeddingError> {
        if y.is_empty() {
            return Err(EmbeddingError::EmptyObservations);
        }
        if obs.n() != self.n {
            return Err(EmbeddingError::DimensionMismatch {
                model: self.n,
                obs: obs.n(),
            });
        }
        let mut lifted = Vec::with_capacity(y.len());
        let mut log_likelihood = Vec::with_capacity(y.len());

        let mut q = self.initial_distribution(model.p0());
        let mut log_mass = 0.0;
        match init {
            InitMode::Bayes0 => {
                self.reweigh(&mut q, obs, y[0]);
                log_mass += self.rescale(&mut q, 0)?;
            }
            InitMode::Prior => {
                log_mass += self.rescale(&mut q, 0)?;
            }
        }
        lifted.push(q.clone());
        log_likelihood.push(log_mass);

        for (k, &yk) in y.iter().enumerate().skip(1) {
            q = self.transitions.apply(&q);
            self.reweigh(&mut q, obs, yk);
            log_mass += self.rescale(&mut q, k)?;
            lifted.push(q.clone());
            log_likelihood.push(log_mass);
        }
        Ok(EmbeddedFilterOutput {
            n: self.n,
            lifted,
            log_likelihood,
        })
    }

    /// Applies `B̄(y)`: the lifted weight at (i, r) is `γ_i(y)` for every r.
    fn reweigh(&self, q: &mut [f64], obs: &ObservationModel, y: f64) {
        let weights = obs.weight_vector(y);
        for (idx, x) in q.iter_mut().enumerate() {
            *x *= weights[idx % self.n];
        }
    }

    fn rescale(&self, q: &mut [f64], step: usize) -> Result<f64, EmbeddingError> {
        let mass: f64 = q.iter().sum();
        if mass.is_nan() || mass <= MASS_UNDERFLOW {
            return Err(EmbeddingError::MassUnderflow { step });
        }
        for x in q.iter_mut() {
            *x /= mass;
        }
        Ok(mass.ln())
    }
}

/// Output of the embedded filter: unit-sum lifted vectors per time point and
/// the cumulative log normalizer.
#[derive(Debug, Clone)]
pub struct EmbeddedFilterOutput {
    n: usize,
    pub lifted: Vec<Vec<f64>>,
    pub log_likelihood: Vec<f64>,
}

impl EmbeddedFilterOutput {
    /// Filtered state marginals (summed over sojourn levels) per time point.
    pub fn state_marginals(&self) -> Vec<Vec<f64>> {
        self.lifted
            .iter()
            .map(|q| {
                let mut out = vec![0.0; self.n];
                for (idx, &value) in q.iter().enumerate() {
                    out[idx % self.n] += value;
                }
                out
            })
            .collect()
    }
}

/// Exact posteriors by brute-force enumeration of every state path.
#[derive(Debug, Clone)]
pub struct EnumeratedPosterior {
    /// `filtered[k][j] = P(X_k = j | y_0..y_k)`.
    pub filtered: Vec<Vec<f64>>,
    /// `smoothed[k][j] = P(X_k = j | y_0..y_T)`.
    pub smoothed: Vec<Vec<f64>>,
}

/// Enumerates all `N^{T+1}` state paths, weighing each by its semi-Markov
/// path probability (built from the hazards) times the Gaussian likelihood
/// of the observations, and accumulates exact filtered and smoothed state
/// marginals. Guarded to at most 1e7 paths.
pub fn enumerate_posterior(
    model: &SemiMarkovModel,
    obs: &ObservationModel,
    y: &[f64],
) -> Result<EnumeratedPosterior, EmbeddingError> {
    if y.is_empty() {
        return Err(EmbeddingError::EmptyObservations);
    }
    if obs.n() != model.n_states() {
        return Err(EmbeddingError::DimensionMismatch {
            model: model.n_states(),
            obs: obs.n(),
        });
    }
    let n = model.n_states();
    let points = y.len();
    let paths = (n as f64).powi(points as i32);
    if paths > 1e7 {
        return Err(EmbeddingError::TooManyPaths { states: n, points });
    }

    let mut filtered = vec![vec![0.0; n]; points];
    let mut smoothed = vec![vec![0.0; n]; points];

    // Depth-first walk over paths; each prefix contributes its weight to the
    // filtered marginal at its depth, each complete path to every smoothed
    // marginal along it.
    struct Walk<'a> {
        model: &'a SemiMarkovModel,
        obs: &'a ObservationModel,
        y: &'a [f64],
        filtered: &'a mut Vec<Vec<f64>>,
        smoothed: &'a mut Vec<Vec<f64>>,
        path: Vec<usize>,
    }

    impl Walk<'_> {
        fn go(&mut self, state: usize, clock: usize, weight: f64) {
            let k = self.path.len();
            self.path.push(state);
            let weight = weight * self.obs.density(state, self.y[k]);
            self.filtered[k][state] += weight;
            if k + 1 == self.y.len() {
                for (kk, &s) in self.path.iter().enumerate() {
                    self.smoothed[kk][s] += weight;
                }
            } else {
                let exit = self.model.exit_probability(state, clock);
                if exit < 1.0 {
                    self.go(state, clock + 1, weight * (1.0 - exit));
                }
                if exit > 0.0 {
                    for to in 0..self.model.n_states() {
                        let p = self.model.kernel().prob(to, state);
                        if p > 0.0 {
                            self.go(to, 1, weight * p * exit);
                        }
                    }
                }
            }
            self.path.pop();
        }
    }

    let mut walk = Walk {
        model,
        obs,
        y,
        filtered: &mut filtered,
        smoothed: &mut smoothed,
        path: Vec::with_capacity(points),
    };
    for state in 0..n {
        let p = model.p0()[state];
        if p > 0.0 {
            walk.go(state, 1, p);
        }
    }

    for row in filtered.iter_mut().chain(smoothed.iter_mut()) {
        let mass: f64 = row.iter().sum();
        if mass.is_nan() || mass <= 0.0 {
            return Err(EmbeddingError::MassUnderflow { step: 0 });
        }
        for x in row.iter_mut() {
            *x /= mass;
        }
    }

    Ok(EnumeratedPosterior { filtered, smoothed })
}
