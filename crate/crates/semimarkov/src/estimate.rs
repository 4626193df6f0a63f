//! Recursive estimators for jump counts, occupation times, and observation
//! functionals, with parameter re-estimation.
//!
//! For a path functional `H_k` the object carried forward is the vector
//! `σ(H_k X_k)`, the unnormalized conditional expectation of `H_k X_k`.
//! With `A = A(ĥ_k)`, `B = B(y_{k+1})` the recursions are
//!
//! ```text
//! σ(N^{ji}_{k+1} X_{k+1}) = B A σ(N^{ji}_k X_k) + a_ji ⟨q_k, e_i⟩ γ_j e_j
//! σ(G^i_{k+1}  X_{k+1})   = B A σ(G^i_k X_k)   + f(y_{k+1}) ⟨q_k, e_i⟩ B A e_i
//! ```
//!
//! where `N^{ji}` counts jumps `i → j`, and `G^i` sums `f(y_ℓ)` over the
//! steps departing from `i` (`f ≡ 1` gives the occupation time `J^i`).
//! Every σ vector is divided by the same per-step mass as the filter's `q`,
//! so all ratios — and therefore all re-estimates — are invariant under
//! rescaling, and `⟨q_k, 1⟩ = 1` makes `⟨σ(·), 1⟩` directly the normalized
//! estimate.
//!
//! `G^i` weights `f(y_ℓ)` by the state *departed from* at step `ℓ`. The
//! observation `y_ℓ`, however, is emitted by the state *arrived in*, so the
//! observation-parameter re-estimates use emission moments weighted by the
//! current state instead, with the recursion
//!
//! ```text
//! σ(G̃^i_{k+1} X_{k+1}) = B A σ(G̃^i_k X_k) + f(y_{k+1}) ⟨B A q_k, e_i⟩ e_i
//! ```
//!
//! Re-estimates: `â_ji = N̂^{ji}/Ĵ^i` (per-step jump probability),
//! `ĉ_i = G̃^i(y)/G̃^i(1)`, `d̂_i² = G̃^i(y²)/G̃^i(1) − ĉ_i²`. States whose
//! occupation mass is negligible yield an undefined marker instead of a
//! number.

use serde::Serialize;

use crate::filter::{filter_step_scaled, FilterError, FilterState, InitMode};
use crate::model::{ObservationModel, SemiMarkovModel, TransitionMatrix};

/// Occupation mass below this fraction of the total marks a state as never
/// visited for re-estimation purposes.
pub const UNVISITED_FRACTION: f64 = 1e-12;

/// Variance floor for the re-estimated noise scale.
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Observation functional `f` in the `G` recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    One,
    Y,
    YSquared,
}

impl Functional {
    pub fn eval(self, y: f64) -> f64 {
        match self {
            Functional::One => 1.0,
            Functional::Y => y,
            Functional::YSquared => y * y,
        }
    }
}

/// The σ vectors after absorbing `y_0..y_k`, co-rescaled with the filter.
#[derive(Debug, Clone)]
pub struct StatisticState {
    n: usize,
    /// `jump[j * n + i]` holds `σ(N^{ji} X)`; diagonal untouched (zero).
    jump: Vec<Vec<f64>>,
    /// `σ(J^i X)`: the `f ≡ 1` functional.
    occupation: Vec<Vec<f64>>,
    /// `σ(G^i X)` with `f(y) = y`.
    obs_sum: Vec<Vec<f64>>,
    /// `σ(G^i X)` with `f(y) = y²`.
    obs_sq_sum: Vec<Vec<f64>>,
    /// Current-state emission moments `σ(G̃^i X)` for `f ∈ {1, y, y²}`.
    emission: [Vec<Vec<f64>>; 3],
}

impl StatisticState {
    /// All statistics start at zero: no transitions before time 1.
    pub fn new(n: usize) -> Self {
        let zeros = || vec![vec![0.0; n]; n];
        Self {
            n,
            jump: vec![vec![0.0; n]; n * n],
            occupation: zeros(),
            obs_sum: zeros(),
            obs_sq_sum: zeros(),
            emission: [zeros(), zeros(), zeros()],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn jump_vector(&self, to: usize, from: usize) -> &[f64] {
        &self.jump[to * self.n + from]
    }

    pub fn occupation_vector(&self, state: usize) -> &[f64] {
        &self.occupation[state]
    }

    pub fn functional_vector(&self, f: Functional, state: usize) -> &[f64] {
        match f {
            Functional::One => &self.occupation[state],
            Functional::Y => &self.obs_sum[state],
            Functional::YSquared => &self.obs_sq_sum[state],
        }
    }

    /// Current-state emission moment `σ(G̃^i X)`.
    pub fn emission_vector(&self, f: Functional, state: usize) -> &[f64] {
        &self.emission[f as usize][state]
    }

    /// One propagation `v ↦ B A v / m` of a carried vector.
    fn propagate(a: &TransitionMatrix, weights: &[f64], normalizer: f64, v: &[f64]) -> Vec<f64> {
        let mut out = a.apply(v);
        for (x, w) in out.iter_mut().zip(weights) {
            *x = *x * w / normalizer;
        }
        out
    }

    /// Advances the jump-count vectors for every ordered pair.
    ///
    /// `q_prev` and `sojourn_estimate` are the filter state *before* the
    /// step that consumed `y_next`, and `normalizer` is that step's mass
    /// `⟨B(y_next) A(ĥ) q_prev, 1⟩` (from `filter_step_scaled`).
    pub fn step_jump_counts(
        &mut self,
        model: &SemiMarkovModel,
        obs: &ObservationModel,
        q_prev: &[f64],
        sojourn_estimate: usize,
        y_next: f64,
        normalizer: f64,
    ) {
        let a = model.transition_matrix(sojourn_estimate);
        let weights = obs.weight_vector(y_next);
        for to in 0..self.n {
            for (from, &q_from) in q_prev.iter().enumerate() {
                if to == from {
                    continue;
                }
                let mut v = Self::propagate(&a, &weights, normalizer, self.jump_vector(to, from));
                v[to] += a.get(to, from) * q_from * weights[to] / normalizer;
                self.jump[to * self.n + from] = v;
            }
        }
    }

    /// Advances `σ(G^i X)` for one functional (the `f ≡ 1` instance is the
    /// occupation time `J^i`).
    #[allow(clippy::too_many_arguments)]
    pub fn step_functional(
        &mut self,
        model: &SemiMarkovModel,
        obs: &ObservationModel,
        q_prev: &[f64],
        sojourn_estimate: usize,
        y_next: f64,
        normalizer: f64,
        f: Functional,
    ) {
        let a = model.transition_matrix(sojourn_estimate);
        let weights = obs.weight_vector(y_next);
        let fy = f.eval(y_next);
        let target = match f {
            Functional::One => &mut self.occupation,
            Functional::Y => &mut self.obs_sum,
            Functional::YSquared => &mut self.obs_sq_sum,
        };
        for (from, &q_from) in q_prev.iter().enumerate() {
            let mut v = Self::propagate(&a, &weights, normalizer, &target[from]);
            // B A e_from is column `from` of A weighted by γ.
            for (j, x) in v.iter_mut().enumerate() {
                *x += fy * q_from * a.get(j, from) * weights[j] / normalizer;
            }
            target[from] = v;
        }
    }

    /// Advances the emission moments `σ(G̃^i X)` for all three functionals.
    pub fn step_emissions(
        &mut self,
        model: &SemiMarkovModel,
        obs: &ObservationModel,
        q_prev: &[f64],
        sojourn_estimate: usize,
        y_next: f64,
        normalizer: f64,
    ) {
        let a = model.transition_matrix(sojourn_estimate);
        let weights = obs.weight_vector(y_next);
        // ⟨B A q, e_i⟩ / m is exactly the updated filter posterior.
        let q_next = {
            let mut v = a.apply(q_prev);
            for (x, w) in v.iter_mut().zip(&weights) {
                *x = *x * w / normalizer;
            }
            v
        };
        for f in [Functional::One, Functional::Y, Functional::YSquared] {
            let fy = f.eval(y_next);
            let target = &mut self.emission[f as usize];
            for i in 0..self.n {
                let mut v = Self::propagate(&a, &weights, normalizer, &target[i]);
                v[i] += fy * q_next[i];
                target[i] = v;
            }
        }
    }

    /// Advances all statistics in one call.
    pub fn step(
        &mut self,
        model: &SemiMarkovModel,
        obs: &ObservationModel,
        q_prev: &[f64],
        sojourn_estimate: usize,
        y_next: f64,
        normalizer: f64,
    ) {
        self.step_jump_counts(model, obs, q_prev, sojourn_estimate, y_next, normalizer);
        for f in [Functional::One, Functional::Y, Functional::YSquared] {
            self.step_functional(model, obs, q_prev, sojourn_estimate, y_next, normalizer, f);
        }
        self.step_emissions(model, obs, q_prev, sojourn_estimate, y_next, normalizer);
    }
}

/// Filter and statistics advanced together so they share each step's
/// normalizer.
#[derive(Debug, Clone)]
pub struct EstimationRun {
    pub filter: FilterState,
    pub stats: StatisticState,
}

impl EstimationRun {
    pub fn start(
        model: &SemiMarkovModel,
        obs: &ObservationModel,
        y0: f64,
        init: InitMode,
    ) -> Result<Self, FilterError> {
        Ok(Self {
            filter: FilterState::initial(model, obs, y0, init)?,
            stats: StatisticState::new(model.n_states()),
        })
    }

    pub fn step(
        &mut self,
        model: &SemiMarkovModel,
        obs: &ObservationModel,
        y_next: f64,
    ) -> Result<(), FilterError> {
        let (next, mass) = filter_step_scaled(&self.filter, model, obs, y_next)?;
        self.stats.step(
            model,
            obs,
            &self.filter.posterior,
            self.filter.sojourn_estimate,
            y_next,
            mass,
        );
        self.filter = next;
        Ok(())
    }

    /// Runs the joint recursion over `y_0..y_T`.
    pub fn run(
        model: &SemiMarkovModel,
        obs: &ObservationModel,
        y: &[f64],
        init: InitMode,
    ) -> Result<Self, FilterError> {
        if y.is_empty() {
            return Err(FilterError::EmptyObservations);
        }
        let mut run = Self::start(model, obs, y[0], init)?;
        for &yk in &y[1..] {
            run.step(model, obs, yk)?;
        }
        Ok(run)
    }

    /// Scales the joint unnormalized mass by `factor`; see
    /// [`FilterState::scale_mass`]. The σ vectors are carried relative to
    /// the same normalizer, so the factor lives entirely in the log mass.
    pub fn scale_mass(&mut self, factor: f64) {
        self.filter.scale_mass(factor);
    }

    pub fn reestimate(&self) -> Reestimates {
        Reestimates::from_statistics(&self.stats)
    }
}

/// Normalized statistics and parameter re-estimates. Undefined entries mark
/// states whose occupation mass is negligible.
#[derive(Debug, Clone, Serialize)]
pub struct Reestimates {
    /// `a_hat[j][i] ≈ P(X_{k+1} = j | X_k = i, jump or stay)` per-step jump
    /// probability estimate `N̂^{ji}/Ĵ^i`, clamped to [0, 1]; `null` on the
    /// diagonal and for unvisited `i`.
    pub a_hat: Vec<Vec<Option<f64>>>,
    /// Expected jump counts `N̂^{ji}` (row `j`, column `i`).
    pub n_hat: Vec<Vec<f64>>,
    /// Expected occupation times `Ĵ^i`.
    pub j_hat: Vec<f64>,
    /// Re-estimated observation levels.
    pub c_hat: Vec<Option<f64>>,
    /// Re-estimated noise scales.
    pub d_hat: Vec<Option<f64>>,
    /// 1-based indices of states with negligible occupation mass.
    pub undefined_states: Vec<usize>,
}

impl Reestimates {
    pub fn from_statistics(stats: &StatisticState) -> Self {
        let n = stats.n();
        let sum = |v: &[f64]| v.iter().sum::<f64>();
        let j_hat: Vec<f64> = (0..n).map(|i| sum(stats.occupation_vector(i))).collect();
        let total: f64 = j_hat.iter().sum();
        let defined: Vec<bool> = j_hat
            .iter()
            .map(|&j| j > UNVISITED_FRACTION * total)
            .collect();

        let n_hat: Vec<Vec<f64>> = (0..n)
            .map(|to| {
                (0..n)
                    .map(|from| sum(stats.jump_vector(to, from)))
                    .collect()
            })
            .collect();

        let a_hat = (0..n)
            .map(|to| {
                (0..n)
                    .map(|from| {
                        if to == from || !defined[from] {
                            None
                        } else {
                            Some((n_hat[to][from] / j_hat[from]).clamp(0.0, 1.0))
                        }
                    })
                    .collect()
            })
            .collect();

        let mut c_hat = vec![None; n];
        let mut d_hat = vec![None; n];
        for i in 0..n {
            let count = sum(stats.emission_vector(Functional::One, i));
            if !defined[i] || count <= UNVISITED_FRACTION * total {
                continue;
            }
            let mean = sum(stats.emission_vector(Functional::Y, i)) / count;
            let second = sum(stats.emission_vector(Functional::YSquared, i)) / count;
            let variance = (second - mean * mean).max(VARIANCE_FLOOR);
            c_hat[i] = Some(mean);
            d_hat[i] = Some(variance.sqrt());
        }

        let undefined_states = defined
            .iter()
            .enumerate()
            .filter(|(_, &d)| !d)
            .map(|(i, _)| i + 1)
            .collect();

        Self {
            a_hat,
            n_hat,
            j_hat,
            c_hat,
            d_hat,
            undefined_states,
        }
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::model::{JumpKernel, SojournLaw};
    use crate::simulate::{observe_path, simulate_path};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn two_state_geometric(rho1: f64, rho2: f64, support: usize) -> SemiMarkovModel {
        let kernel = JumpKernel::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        SemiMarkovModel::new(
            kernel,
            vec![
                SojournLaw::geometric(rho1, support).unwrap(),
                SojournLaw::geometric(rho2, support).unwrap(),
            ],
            vec![0.5, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn statistics_start_at_zero() {
        let stats = StatisticState::new(3);
        for to in 0..3 {
            for from in 0..3 {
                assert_eq!(stats.jump_vector(to, from), &[0.0; 3]);
            }
            assert_eq!(stats.occupation_vector(to), &[0.0; 3]);
        }
    }

    #[test]
    fn occupations_partition_elapsed_time() {
        // Σ_i σ(J^i X_k) telescopes to k·q_k exactly, so the normalized
        // occupations sum to the number of steps.
        let model = two_state_geometric(0.3, 0.6, 25);
        let obs = ObservationModel::new(vec![0.0, 2.0], vec![0.4, 0.4]).unwrap();
        let path = simulate_path(&model, 400, 2);
        let y = observe_path(&path, &obs, 3);
        let run = EstimationRun::run(&model, &obs, &y, InitMode::Bayes0).unwrap();
        let t = (y.len() - 1) as f64;
        let est = run.reestimate();
        assert_close(est.j_hat.iter().sum::<f64>(), t, 1e-6);
        // Componentwise version of the identity.
        let mut total = [0.0; 2];
        for i in 0..2 {
            for (tj, x) in total.iter_mut().zip(run.stats.occupation_vector(i)) {
                *tj += x;
            }
        }
        for j in 0..2 {
            assert_close(total[j], t * run.filter.posterior[j], 1e-6);
        }
    }

    #[test]
    fn jump_count_recovered_at_high_snr() {
        let model = two_state_geometric(0.35, 0.5, 25);
        let obs = ObservationModel::new(vec![0.0, 3.0], vec![0.05, 0.05]).unwrap();
        let path = simulate_path(&model, 60, 41);
        let y = observe_path(&path, &obs, 42);
        let run = EstimationRun::run(&model, &obs, &y, InitMode::Bayes0).unwrap();
        let est = run.reestimate();
        let true_12 = path
            .jump_times
            .iter()
            .filter(|&&k| path.states[k - 1] == 0 && path.states[k] == 1)
            .count() as f64;
        let true_21 = path
            .jump_times
            .iter()
            .filter(|&&k| path.states[k - 1] == 1 && path.states[k] == 0)
            .count() as f64;
        assert_close(est.n_hat[1][0], true_12, 0.05);
        assert_close(est.n_hat[0][1], true_21, 0.05);
    }

    #[test]
    fn occupation_recovered_at_high_snr() {
        let model = two_state_geometric(0.4, 0.4, 25);
        let obs = ObservationModel::new(vec![0.0, 3.0], vec![0.05, 0.05]).unwrap();
        let path = simulate_path(&model, 10, 7);
        let y = observe_path(&path, &obs, 8);
        let run = EstimationRun::run(&model, &obs, &y, InitMode::Bayes0).unwrap();
        let est = run.reestimate();
        // J counts departures over ℓ = 1..T, i.e. occupation of X_{ℓ-1}.
        let true_j1 = (0..10).filter(|&k| path.states[k] == 0).count() as f64;
        assert_close(est.j_hat[0], true_j1, 0.5);
    }

    #[test]
    fn locked_state_gives_sample_moments() {
        // One state occupied for the whole horizon: the ratio estimates
        // collapse to the sample mean and variance of y_1..y_T.
        let kernel = JumpKernel::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let model = SemiMarkovModel::new(
            kernel,
            vec![
                SojournLaw::deterministic(50).unwrap(),
                SojournLaw::deterministic(50).unwrap(),
            ],
            vec![1.0, 0.0],
        )
        .unwrap();
        let obs = ObservationModel::new(vec![1.5, 8.0], vec![0.3, 0.3]).unwrap();
        let path = simulate_path(&model, 20, 4);
        assert!(path.jump_times.is_empty());
        let y = observe_path(&path, &obs, 5);
        let run = EstimationRun::run(&model, &obs, &y, InitMode::Bayes0).unwrap();
        let est = run.reestimate();
        let mean = y[1..].iter().sum::<f64>() / 20.0;
        assert_close(est.c_hat[0].unwrap(), mean, 1e-10);
        assert!(est.undefined_states.contains(&2));
        assert!(est.c_hat[1].is_none());
        assert!(est.a_hat[0][1].is_none(), "unvisited departure state");
        assert_eq!(
            est.a_hat[1][0],
            Some(0.0),
            "no jumps out of the locked state"
        );
    }

    #[test]
    fn constant_observations_hit_the_variance_floor() {
        let kernel = JumpKernel::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let model = SemiMarkovModel::new(
            kernel,
            vec![
                SojournLaw::deterministic(50).unwrap(),
                SojournLaw::deterministic(50).unwrap(),
            ],
            vec![1.0, 0.0],
        )
        .unwrap();
        let obs = ObservationModel::new(vec![1.5, 8.0], vec![0.3, 0.3]).unwrap();
        let y = vec![1.5; 15];
        let run = EstimationRun::run(&model, &obs, &y, InitMode::Bayes0).unwrap();
        let est = run.reestimate();
        assert_close(est.c_hat[0].unwrap(), 1.5, 1e-12);
        assert_eq!(est.d_hat[0].unwrap(), VARIANCE_FLOOR.sqrt());
    }

    #[test]
    fn jump_probability_estimate_is_consistent() {
        let model = two_state_geometric(0.3, 0.55, 25);
        let obs = ObservationModel::new(vec![0.0, 2.0], vec![0.1, 0.1]).unwrap();
        let path = simulate_path(&model, 4000, 77);
        let y = observe_path(&path, &obs, 78);
        let run = EstimationRun::run(&model, &obs, &y, InitMode::Bayes0).unwrap();
        let est = run.reestimate();
        assert_close(est.a_hat[1][0].unwrap(), 0.3, 0.03);
        assert_close(est.a_hat[0][1].unwrap(), 0.55, 0.03);
    }

    #[test]
    fn scalar_estimate_agrees_with_vector_contraction() {
        // ⟨σ(N X), 1⟩ computed after the vector recursion equals the scalar
        // accumulated step by step in the other order.
        let model = two_state_geometric(0.4, 0.5, 20);
        let obs = ObservationModel::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let path = simulate_path(&model, 120, 13);
        let y = observe_path(&path, &obs, 14);

        let mut run = EstimationRun::start(&model, &obs, y[0], InitMode::Bayes0).unwrap();
        let mut scalar = 0.0f64;
        for &yk in &y[1..] {
            let a = model.transition_matrix(run.filter.sojourn_estimate);
            let weights = obs.weight_vector(yk);
            let raw = {
                let mut v = a.apply(&run.filter.posterior);
                for (x, w) in v.iter_mut().zip(&weights) {
                    *x *= w;
                }
                v
            };
            let mass: f64 = raw.iter().sum();
            let propagated: f64 = {
                let mut v = a.apply(run.stats.jump_vector(1, 0));
                for (x, w) in v.iter_mut().zip(&weights) {
                    *x *= w;
                }
                v.iter().sum::<f64>() / mass
            };
            scalar = propagated + a.get(1, 0) * run.filter.posterior[0] * weights[1] / mass;
            run.step(&model, &obs, yk).unwrap();
        }
        let vector_sum: f64 = run.stats.jump_vector(1, 0).iter().sum();
        assert_close(vector_sum, scalar, 1e-12);
    }

    #[test]
    fn noise_functional_is_centered() {
        // With c = 0 the f(y) = y statistic has mean zero across seeds.
        let model = two_state_geometric(0.45, 0.45, 20);
        let obs = ObservationModel::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let seeds = 100;
        let mut values = Vec::with_capacity(seeds);
        for seed in 0..seeds {
            let path = simulate_path(&model, 50, seed as u64);
            let y = observe_path(&path, &obs, 1000 + seed as u64);
            let run = EstimationRun::run(&model, &obs, &y, InitMode::Bayes0).unwrap();
            let g: f64 = (0..2)
                .map(|i| {
                    run.stats
                        .functional_vector(Functional::Y, i)
                        .iter()
                        .sum::<f64>()
                })
                .sum();
            values.push(g);
        }
        let mean = values.iter().sum::<f64>() / seeds as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (seeds - 1) as f64;
        let se = (var / seeds as f64).sqrt();
        assert!(mean.abs() <= 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn scale_mass_is_exactly_invisible_to_reestimates() {
        let model = two_state_geometric(0.3, 0.6, 20);
        let obs = ObservationModel::new(vec![0.0, 2.0], vec![0.3, 0.3]).unwrap();
        let path = simulate_path(&model, 150, 21);
        let y = observe_path(&path, &obs, 22);

        let plain = EstimationRun::run(&model, &obs, &y, InitMode::Bayes0).unwrap();
        let mut scaled = EstimationRun::start(&model, &obs, y[0], InitMode::Bayes0).unwrap();
        scaled.scale_mass(1e100);
        for (k, &yk) in y.iter().enumerate().skip(1) {
            scaled.step(&model, &obs, yk).unwrap();
            if k == 75 {
                scaled.scale_mass(1e-100);
            }
        }
        let a = serde_json::to_string(&plain.reestimate()).unwrap();
        let b = serde_json::to_string(&scaled.reestimate()).unwrap();
        assert_eq!(a, b);
        assert_eq!(plain.filter.posterior, scaled.filter.posterior);
        assert_eq!(
            plain.filter.sojourn_estimate,
            scaled.filter.sojourn_estimate
        );
    }
}
