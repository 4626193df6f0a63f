//! Reference-probability forward filter with recursive sojourn estimation.
//!
//! Under the reference measure the observations are i.i.d. standard normal
//! and the state enters only through the likelihood-ratio weights
//! `γ_j(y) = φ((y−c_j)/d_j)/(d_j φ(y))`. With `B(y) = diag(γ_j(y))` the
//! unnormalized conditional state vector satisfies
//!
//! ```text
//! q_{k+1} = B(y_{k+1}) A(ĥ_k) q_k
//! ```
//!
//! where `ĥ_k` is an integer estimate of the occupation clock, maintained
//! from the MAP state: if the argmax of `q` is unchanged by a step the
//! estimate increments, otherwise it resets to 1.
//!
//! The state is stored rescaled to unit sum; the accumulated log of the
//! per-step masses is the log normalizer `ln ⟨q̄_k, 1⟩`. Every downstream
//! output (posterior, MAP state, clock estimate, re-estimated parameters)
//! is a ratio, so the representation is invariant under scaling the
//! unnormalized mass.

use thiserror::Error;

use crate::model::{ObservationModel, SemiMarkovModel};

/// Total filtered mass below this signals a rescaling fault.
pub const MASS_UNDERFLOW: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("observation sequence is empty")]
    EmptyObservations,
    #[error("model has {model} states but observation model has {obs}")]
    DimensionMismatch { model: usize, obs: usize },
    #[error("filtered mass underflowed at step {step}")]
    MassUnderflow { step: usize },
    #[error("forward pass covers {forward} steps but {expected} observations were given")]
    LengthMismatch { forward: usize, expected: usize },
}

/// Initialization of the recursion at `k = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    /// `q_0 ∝ B(y_0) p_0`: the first observation is absorbed immediately,
    /// consistent with a likelihood product that starts at `λ_0`.
    #[default]
    Bayes0,
    /// `q_0 = p_0` as in the plain recursion statement; `y_0` is unused.
    Prior,
}

/// Filter state after absorbing `y_0..y_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    /// Normalized state posterior `q_k / ⟨q_k, 1⟩`.
    pub posterior: Vec<f64>,
    /// Accumulated log normalizer `ln ⟨q̄_k, 1⟩`.
    pub log_likelihood: f64,
    /// Integer occupation-clock estimate `ĥ_k ≥ 1`.
    pub sojourn_estimate: usize,
    /// Argmax of the posterior, lowest index on ties.
    pub map_state: usize,
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn normalize(mut v: Vec<f64>, step: usize) -> Result<(Vec<f64>, f64), FilterError> {
    let mass: f64 = v.iter().sum();
    if mass.is_nan() || mass <= MASS_UNDERFLOW {
        return Err(FilterError::MassUnderflow { step });
    }
    for x in &mut v {
        *x /= mass;
    }
    Ok((v, mass))
}

impl FilterState {
    /// State at `k = 0`.
    pub fn initial(
        model: &SemiMarkovModel,
        obs: &ObservationModel,
        y0: f64,
        init: InitMode,
    ) -> Result<Self, FilterError> {
        check_dims(model, obs)?;
        let (posterior, log_likelihood) = match init {
            InitMode::Bayes0 => {
                let weights = obs.weight_vector(y0);
                let raw: Vec<f64> = model
                    .p0()
                    .iter()
                    .zip(&weights)
                    .map(|(p, w)| p * w)
                    .collect();
                let (posterior, mass) = normalize(raw, 0)?;
                (posterior, mass.ln())
            }
            InitMode::Prior => {
                let (posterior, _) = normalize(model.p0().to_vec(), 0)?;
                (posterior, 0.0)
            }
        };
        let map_state = argmax(&posterior);
        Ok(Self {
            posterior,
            log_likelihood,
            sojourn_estimate: 1,
            map_state,
        })
    }

    /// Scales the unnormalized mass this state represents by `factor`.
    ///
    /// The vectors are stored unit-sum with the mass in `log_likelihood`,
    /// so the multiplication lands entirely on the log normalizer and every
    /// ratio-valued output is untouched.
    pub fn scale_mass(&mut self, factor: f64) {
        assert!(factor > 0.0, "mass scale must be positive");
        self.log_likelihood += factor.ln();
    }
}

fn check_dims(model: &SemiMarkovModel, obs: &ObservationModel) -> Result<(), FilterError> {
    if model.n_states() != obs.n() {
        return Err(FilterError::DimensionMismatch {
            model: model.n_states(),
            obs: obs.n(),
        });
    }
    Ok(())
}

/// Advances the filter by one observation.
///
/// Computes `q' ∝ B(y) A(ĥ) q`, rescales to unit sum folding the mass into
/// the log normalizer, and updates the clock estimate: increment while the
/// MAP state is unchanged, reset to 1 on a change, capped at the MAP
/// state's sojourn support (past which the transition column is the forced
/// jump anyway).
pub fn filter_step(
    state: &FilterState,
    model: &SemiMarkovModel,
    obs: &ObservationModel,
    y_next: f64,
) -> Result<FilterState, FilterError> {
    let (next, _) = filter_step_scaled(state, model, obs, y_next)?;
    Ok(next)
}

/// As `filter_step`, additionally returning the per-step mass
/// `⟨B(y) A(ĥ) q, 1⟩` so co-evolved statistics can share the normalizer.
pub fn filter_step_scaled(
    state: &FilterState,
    model: &SemiMarkovModel,
    obs: &ObservationModel,
    y_next: f64,
) -> Result<(FilterState, f64), FilterError> {
    check_dims(model, obs)?;
    let a = model.transition_matrix(state.sojourn_estimate);
    let weights = obs.weight_vector(y_next);
    let mut raw = a.apply(&state.posterior);
    for (x, w) in raw.iter_mut().zip(&weights) {
        *x *= w;
    }
    let (posterior, mass) = normalize(raw, usize::MAX)?;
    let map_state = argmax(&posterior);
    let sojourn_estimate = if map_state == state.map_state {
        (state.sojourn_estimate + 1).min(model.sojourn(map_state).support_len())
    } else {
        1
    };
    Ok((
        FilterState {
            posterior,
            log_likelihood: state.log_likelihood + mass.ln(),
            sojourn_estimate,
            map_state,
        },
        mass,
    ))
}

/// Runs the filter over `y_0..y_T`, returning one state per time point.
pub fn run_filter(
    model: &SemiMarkovModel,
    obs: &ObservationModel,
    y: &[f64],
    init: InitMode,
) -> Result<Vec<FilterState>, FilterError> {
    if y.is_empty() {
        return Err(FilterError::EmptyObservations);
    }
    let mut states = Vec::with_capacity(y.len());
    states.push(FilterState::initial(model, obs, y[0], init)?);
    for (k, &yk) in y.iter().enumerate().skip(1) {
        let next = filter_step(states.last().unwrap(), model, obs, yk).map_err(|e| match e {
            FilterError::MassUnderflow { .. } => FilterError::MassUnderflow { step: k },
            other => other,
        })?;
        states.push(next);
    }
    Ok(states)
}

/// Convenience projections out of a forward pass.
pub fn posteriors(states: &[FilterState]) -> Vec<Vec<f64>> {
    states.iter().map(|s| s.posterior.clone()).collect()
}

pub fn sojourn_estimates(states: &[FilterState]) -> Vec<usize> {
    states.iter().map(|s| s.sojourn_estimate).collect()
}
