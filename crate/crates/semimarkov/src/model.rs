//! Semi-Markov model primitives.
//!
//! A discrete-time semi-Markov chain on states `{1, …, N}` is described by
//!
//! * a jump kernel `p_ji = P(next state = j | jump out of i)` with zero
//!   diagonal and unit column sums,
//! * one sojourn law per state: a pmf `π_i(m)` on `{1, …, L_i}` giving the
//!   distribution of the time spent in state `i` between jumps,
//! * an initial distribution `p0`.
//!
//! The sojourn law carries its survival function `F(k) = P(S > k)` and the
//! discrete hazard
//!
//! ```text
//! Δ(k) = π(k+1) / F(k)   (probability of leaving after k survived steps)
//! ```
//!
//! A chain whose occupation clock reads `h ≥ 1` (it entered the state `h-1`
//! steps ago and is still there) leaves on the next step with probability
//! `Δ(h−1)`; this is `exit_probability(h)`. The one-step transition matrix at
//! clock `h` is column-stochastic:
//!
//! ```text
//! A(h)[i][i] = 1 − Δ^i(h−1),   A(h)[j][i] = p_ji · Δ^i(h−1)  (j ≠ i)
//! ```
//!
//! Observations are scalar: `y_k = c_i + d_i w_k` when the chain sits in
//! state `i`, with `w_k` i.i.d. standard normal and `d_i > 0`. Filtering
//! works with the likelihood ratio against a standard-normal reference,
//! `γ_j(y) = φ((y−c_j)/d_j) / (d_j φ(y))`.

use thiserror::Error;

/// Probability sums are accepted when they differ from 1 by at most this.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Validation failure for model inputs. Each variant names the offending
/// field and constraint.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("sojourn pmf must be non-empty")]
    EmptyPmf,
    #[error("sojourn pmf entry {index} is {value}, must be >= 0")]
    NegativePmfEntry { index: usize, value: f64 },
    #[error("sojourn pmf sums to {sum}, must be 1 within {PROB_SUM_TOL}")]
    PmfSum { sum: f64 },
    #[error("hazard entry {index} is {value}, must lie in [0, 1]")]
    HazardRange { index: usize, value: f64 },
    #[error("hazard sequence must end with a certain exit (last entry 1)")]
    HazardTail,
    #[error("geometric parameter is {rho}, must lie in (0, 1]")]
    GeometricParameter { rho: f64 },
    #[error("jump kernel must be square, row {row} has {len} entries for {n} states")]
    KernelShape { row: usize, len: usize, n: usize },
    #[error("jump kernel diagonal entry for state {state} is {value}, must be 0")]
    KernelDiagonal { state: usize, value: f64 },
    #[error("jump kernel entry ({row}, {col}) is {value}, must lie in [0, 1]")]
    KernelEntryRange { row: usize, col: usize, value: f64 },
    #[error("jump kernel column {col} sums to {sum}, must be 1 within {PROB_SUM_TOL}")]
    KernelColumnSum { col: usize, sum: f64 },
    #[error("initial distribution has {len} entries for {n} states")]
    InitialDistributionLength { len: usize, n: usize },
    #[error("initial distribution entry {index} is {value}, must be >= 0")]
    NegativeInitialEntry { index: usize, value: f64 },
    #[error("initial distribution sums to {sum}, must be 1 within {PROB_SUM_TOL}")]
    InitialDistributionSum { sum: f64 },
    #[error("model needs one sojourn law per state: got {got} for {n} states")]
    SojournCount { got: usize, n: usize },
    #[error("observation vectors have lengths c={c_len}, d={d_len}, must be equal and non-empty")]
    ObservationShape { c_len: usize, d_len: usize },
    #[error("noise scale d[{state}] is {value}, must be > 0")]
    NoiseScale { state: usize, value: f64 },
}

/// Sojourn-time distribution of one state: a pmf on `{1, …, L}` together
/// with its survival function and hazard sequence.
#[derive(Debug, Clone)]
pub struct SojournLaw {
    pmf: Vec<f64>,
    /// `survival[k] = F(k) = P(S > k)` for `k = 0..=L`; `F(L) = 0` exactly.
    survival: Vec<f64>,
    /// `hazard[k] = Δ(k) = π(k+1)/F(k)` for `k = 0..L`.
    hazard: Vec<f64>,
}

impl SojournLaw {
    /// Builds a law from the pmf `(π(1), …, π(L))`.
    pub fn new(pmf: Vec<f64>) -> Result<Self, ModelError> {
        if pmf.is_empty() {
            return Err(ModelError::EmptyPmf);
        }
        for (index, &value) in pmf.iter().enumerate() {
            if value.is_nan() || value < 0.0 {
                return Err(ModelError::NegativePmfEntry { index, value });
            }
        }
        let len = pmf.len();
        // Accumulate the survival function from the tail so that F(L) = 0
        // exactly and F is non-increasing by construction.
        let mut survival = vec![0.0; len + 1];
        for k in (0..len).rev() {
            survival[k] = survival[k + 1] + pmf[k];
        }
        let sum = survival[0];
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(ModelError::PmfSum { sum });
        }
        let hazard = (0..len)
            .map(|k| {
                if survival[k] > 0.0 {
                    pmf[k] / survival[k]
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self {
            pmf,
            survival,
            hazard,
        })
    }

    /// Builds a law from its hazard sequence `(Δ(0), …, Δ(L−1))`.
    ///
    /// The pmf is reconstructed as `π(k) = Δ(k−1) · Π_{m<k−1} (1 − Δ(m))`.
    /// The final hazard must be 1 so the reconstructed pmf carries full mass.
    pub fn from_hazards(hazards: &[f64]) -> Result<Self, ModelError> {
        if hazards.is_empty() {
            return Err(ModelError::EmptyPmf);
        }
        for (index, &value) in hazards.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::HazardRange { index, value });
            }
        }
        if hazards[hazards.len() - 1] != 1.0 {
            return Err(ModelError::HazardTail);
        }
        let len = hazards.len();
        let mut survival = vec![0.0; len + 1];
        let mut pmf = vec![0.0; len];
        survival[0] = 1.0;
        for k in 0..len {
            pmf[k] = survival[k] * hazards[k];
            survival[k + 1] = survival[k] * (1.0 - hazards[k]);
        }
        Ok(Self {
            pmf,
            survival,
            hazard: hazards.to_vec(),
        })
    }

    /// Geometric law with per-step exit probability `rho`, truncated at
    /// `support` with the tail mass folded into the last entry. The stored
    /// hazard is exactly `rho` everywhere before the forced final exit.
    pub fn geometric(rho: f64, support: usize) -> Result<Self, ModelError> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(ModelError::GeometricParameter { rho });
        }
        if support == 0 {
            return Err(ModelError::EmptyPmf);
        }
        let mut hazards = vec![rho; support];
        hazards[support - 1] = 1.0;
        Self::from_hazards(&hazards)
    }

    /// Law concentrated on a single sojourn length.
    pub fn deterministic(length: usize) -> Result<Self, ModelError> {
        if length == 0 {
            return Err(ModelError::EmptyPmf);
        }
        let mut pmf = vec![0.0; length];
        pmf[length - 1] = 1.0;
        Self::new(pmf)
    }

    /// Support length `L`.
    pub fn support_len(&self) -> usize {
        self.pmf.len()
    }

    /// The pmf `(π(1), …, π(L))`.
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Survival `F(k) = P(S > k)`; zero for `k ≥ L`.
    pub fn survival(&self, k: usize) -> f64 {
        if k < self.survival.len() {
            self.survival[k]
        } else {
            0.0
        }
    }

    /// Cumulative distribution `G(k) = P(S ≤ k) = 1 − F(k)`.
    pub fn cdf(&self, k: usize) -> f64 {
        1.0 - self.survival(k)
    }

    /// Hazard `Δ(k) = π(k+1)/F(k)`: the probability of leaving after having
    /// survived `k` post-entry steps. Forced to 1 when `F(k) = 0` or
    /// `k ≥ L` (the chain cannot remain past the support).
    pub fn hazard(&self, k: usize) -> f64 {
        if k < self.hazard.len() {
            self.hazard[k]
        } else {
            1.0
        }
    }

    /// Probability of leaving on the next step when the occupation clock
    /// reads `clock ≥ 1`. Equal to `hazard(clock − 1)`.
    pub fn exit_probability(&self, clock: usize) -> f64 {
        debug_assert!(clock >= 1, "occupation clock starts at 1");
        self.hazard(clock - 1)
    }

    /// Mean sojourn length `E[S] = Σ m π(m)`.
    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(m, &p)| (m + 1) as f64 * p)
            .sum()
    }
}

/// Jump kernel: `prob(j, i) = p_ji` is the probability that a jump out of
/// state `i` lands in state `j`. Columns are probability vectors over the
/// arrival state; the diagonal is zero.
#[derive(Debug, Clone)]
pub struct JumpKernel {
    n: usize,
    /// Column-major: `data[col * n + row]`.
    data: Vec<f64>,
}

impl JumpKernel {
    /// Builds a kernel from rows, `rows[j][i] = p_ji`.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let n = rows.len();
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(ModelError::KernelShape {
                    row,
                    len: r.len(),
                    n,
                });
            }
        }
        let mut data = vec![0.0; n * n];
        for (j, r) in rows.iter().enumerate() {
            for (i, &value) in r.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    return Err(ModelError::KernelEntryRange {
                        row: j,
                        col: i,
                        value,
                    });
                }
                if i == j && value != 0.0 {
                    return Err(ModelError::KernelDiagonal { state: i, value });
                }
                data[i * n + j] = value;
            }
        }
        for col in 0..n {
            let sum: f64 = data[col * n..(col + 1) * n].iter().sum();
            if (sum - 1.0).abs() > PROB_SUM_TOL {
                return Err(ModelError::KernelColumnSum { col, sum });
            }
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `p_ji`: probability a jump out of `from` lands in `to`.
    pub fn prob(&self, to: usize, from: usize) -> f64 {
        self.data[from * self.n + to]
    }

    /// Column `from`: the arrival distribution given a jump out of `from`.
    pub fn column(&self, from: usize) -> &[f64] {
        &self.data[from * self.n..(from + 1) * self.n]
    }
}

/// Dense column-major square matrix; columns of `transition_matrix` are
/// probability vectors over the arrival state.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Self {
        let n = columns.len();
        let mut data = Vec::with_capacity(n * n);
        for col in columns {
            assert_eq!(col.len(), n, "matrix must be square");
            data.extend_from_slice(&col);
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.n + row]
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.data[col * self.n..(col + 1) * self.n]
    }

    /// `A · v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        let mut out = vec![0.0; self.n];
        for (col, &w) in v.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let column = &self.data[col * self.n..(col + 1) * self.n];
            for (acc, &a) in out.iter_mut().zip(column) {
                *acc += a * w;
            }
        }
        out
    }

    /// `Aᵀ · v`.
    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|col| {
                self.data[col * self.n..(col + 1) * self.n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }
}

/// A validated semi-Markov chain model.
#[derive(Debug, Clone)]
pub struct SemiMarkovModel {
    n: usize,
    kernel: JumpKernel,
    sojourns: Vec<SojournLaw>,
    p0: Vec<f64>,
}

impl SemiMarkovModel {
    pub fn new(
        kernel: JumpKernel,
        sojourns: Vec<SojournLaw>,
        p0: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let n = kernel.n();
        if sojourns.len() != n {
            return Err(ModelError::SojournCount {
                got: sojourns.len(),
                n,
            });
        }
        if p0.len() != n {
            return Err(ModelError::InitialDistributionLength { len: p0.len(), n });
        }
        for (index, &value) in p0.iter().enumerate() {
            if value.is_nan() || value < 0.0 {
                return Err(ModelError::NegativeInitialEntry { index, value });
            }
        }
        let sum: f64 = p0.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(ModelError::InitialDistributionSum { sum });
        }
        Ok(Self {
            n,
            kernel,
            sojourns,
            p0,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn kernel(&self) -> &JumpKernel {
        &self.kernel
    }

    pub fn sojourn(&self, state: usize) -> &SojournLaw {
        &self.sojourns[state]
    }

    pub fn sojourns(&self) -> &[SojournLaw] {
        &self.sojourns
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    /// Longest sojourn support over all states.
    pub fn max_support(&self) -> usize {
        self.sojourns
            .iter()
            .map(SojournLaw::support_len)
            .max()
            .unwrap_or(0)
    }

    /// Exit probability of `state` at occupation clock `clock ≥ 1`.
    pub fn exit_probability(&self, state: usize, clock: usize) -> f64 {
        self.sojourns[state].exit_probability(clock)
    }

    /// One-step transition matrix `A(clock)` for a chain whose occupation
    /// clock reads `clock ≥ 1`. Column `i` is the conditional law of the
    /// next state given the chain sits in `i` with that clock:
    /// diagonal `1 − Δ^i`, off-diagonal `p_ji Δ^i` with `Δ^i` the exit
    /// probability. Columns sum to 1.
    pub fn transition_matrix(&self, clock: usize) -> TransitionMatrix {
        assert!(clock >= 1, "occupation clock starts at 1");
        let columns = (0..self.n)
            .map(|i| {
                let exit = self.exit_probability(i, clock);
                let mut col: Vec<f64> = self
                    .kernel
                    .column(i)
                    .iter()
                    .map(|&p_ji| p_ji * exit)
                    .collect();
                col[i] = 1.0 - exit;
                col
            })
            .collect();
        TransitionMatrix::from_columns(columns)
    }
}

/// Scalar Gaussian observation channel: `y = c_i + d_i w` in state `i`.
#[derive(Debug, Clone)]
pub struct ObservationModel {
    c: Vec<f64>,
    d: Vec<f64>,
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

impl ObservationModel {
    pub fn new(c: Vec<f64>, d: Vec<f64>) -> Result<Self, ModelError> {
        if c.is_empty() || c.len() != d.len() {
            return Err(ModelError::ObservationShape {
                c_len: c.len(),
                d_len: d.len(),
            });
        }
        for (state, &value) in d.iter().enumerate() {
            if value.is_nan() || value <= 0.0 {
                return Err(ModelError::NoiseScale { state, value });
            }
        }
        Ok(Self { c, d })
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn levels(&self) -> &[f64] {
        &self.c
    }

    pub fn noise_scales(&self) -> &[f64] {
        &self.d
    }

    /// Emission density `φ((y − c_j)/d_j) / d_j` of `y` in state `j`.
    pub fn density(&self, state: usize, y: f64) -> f64 {
        std_normal_pdf((y - self.c[state]) / self.d[state]) / self.d[state]
    }

    /// Likelihood ratio `γ_j(y) = φ((y − c_j)/d_j) / (d_j φ(y))` against the
    /// standard-normal reference density.
    pub fn likelihood_ratio(&self, state: usize, y: f64) -> f64 {
        self.density(state, y) / std_normal_pdf(y)
    }

    /// `ln γ_j(y)`, evaluated without forming either density.
    pub fn log_likelihood_ratio(&self, state: usize, y: f64) -> f64 {
        let w = (y - self.c[state]) / self.d[state];
        0.5 * (y * y - w * w) - self.d[state].ln()
    }

    /// The diagonal of `B(y)`: `(γ_1(y), …, γ_N(y))`.
    pub fn weight_vector(&self, y: f64) -> Vec<f64> {
        (0..self.n()).map(|j| self.likelihood_ratio(j, y)).collect()
    }
}
