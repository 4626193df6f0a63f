//! Fixed-interval smoothing: backward information vectors and smoothed
//! state posteriors.
//!
//! The backward vector `v_{k,T}` aggregates the likelihood of the future
//! observations given the state at `k`:
//!
//! ```text
//! v_{T,T} = (1, …, 1)ᵀ
//! v_{k,T} = Aᵀ(ĥ_k) B(y_{k+1}) v_{k+1,T}
//! ```
//!
//! with the clock estimates `ĥ_k` frozen from the forward pass. The
//! smoothed posterior is the normalized componentwise product
//! `q_k ⊙ v_{k,T}`. Both passes rescale per step; every output is a ratio,
//! so the rescaling cancels.

use crate::filter::{FilterError, FilterState, InitMode, MASS_UNDERFLOW};
use crate::model::{ObservationModel, SemiMarkovModel};

/// Backward vectors and smoothed posteriors for one observation window.
#[derive(Debug, Clone)]
pub struct SmootherPass {
    /// Rescaled backward vectors `v_{k,T}`, indexed by `k = 0..=T`.
    pub backward: Vec<Vec<f64>>,
    /// Normalized smoothed posteriors, indexed by `k = 0..=T`.
    pub smoothed: Vec<Vec<f64>>,
}

/// Runs the backward recursion. `sojourn_estimates` must be the forward
/// filter's clock sequence over the same observations.
pub fn backward_pass(
    model: &SemiMarkovModel,
    obs: &ObservationModel,
    y: &[f64],
    sojourn_estimates: &[usize],
) -> Result<Vec<Vec<f64>>, FilterError> {
    if y.is_empty() {
        return Err(FilterError::EmptyObservations);
    }
    if sojourn_estimates.len() != y.len() {
        return Err(FilterError::LengthMismatch {
            forward: sojourn_estimates.len(),
            expected: y.len(),
        });
    }
    let n = model.n_states();
    let t = y.len() - 1;
    let mut backward = vec![vec![1.0; n]; y.len()];
    for k in (0..t).rev() {
        let weights = obs.weight_vector(y[k + 1]);
        let weighted: Vec<f64> = backward[k + 1]
            .iter()
            .zip(&weights)
            .map(|(v, w)| v * w)
            .collect();
        let a = model.transition_matrix(sojourn_estimates[k]);
        let mut v = a.apply_transpose(&weighted);
        let mass: f64 = v.iter().sum();
        if mass.is_nan() || mass <= MASS_UNDERFLOW {
            return Err(FilterError::MassUnderflow { step: k });
        }
        for x in &mut v {
            *x /= mass;
        }
        backward[k] = v;
    }
    Ok(backward)
}

/// Componentwise product of forward and backward vectors, normalized.
pub fn smooth(forward: &[Vec<f64>], backward: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, FilterError> {
    if forward.len() != backward.len() {
        return Err(FilterError::LengthMismatch {
            forward: forward.len(),
            expected: backward.len(),
        });
    }
    let mut smoothed = Vec::with_capacity(forward.len());
    for (k, (q, v)) in forward.iter().zip(backward).enumerate() {
        let mut row: Vec<f64> = q.iter().zip(v).map(|(a, b)| a * b).collect();
        let mass: f64 = row.iter().sum();
        if mass.is_nan() || mass <= MASS_UNDERFLOW {
            return Err(FilterError::MassUnderflow { step: k });
        }
        for x in &mut row {
            *x /= mass;
        }
        smoothed.push(row);
    }
    Ok(smoothed)
}

/// Forward filter plus backward pass in one call.
pub fn smooth_run(
    model: &SemiMarkovModel,
    obs: &ObservationModel,
    y: &[f64],
    init: InitMode,
) -> Result<(Vec<FilterState>, SmootherPass), FilterError> {
    let forward = crate::filter::run_filter(model, obs, y, init)?;
    let estimates = crate::filter::sojourn_estimates(&forward);
    let backward = backward_pass(model, obs, y, &estimates)?;
    let posteriors = crate::filter::posteriors(&forward);
    let smoothed = smooth(&posteriors, &backward)?;
    Ok((forward, SmootherPass { backward, smoothed }))
}
