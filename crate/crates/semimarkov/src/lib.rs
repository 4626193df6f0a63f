//! Discrete-time hidden semi-Markov chains.
//!
//! A semi-Markov chain jumps between states like a Markov chain but holds
//! each state for an arbitrarily distributed number of steps instead of a
//! geometric one. This crate provides, for finite-state chains with
//! finite-support sojourn laws and scalar Gaussian observations:
//!
//! * [`model`] — sojourn laws with hazards, jump kernels, the
//!   clock-dependent transition matrix `A(h)`, and the observation channel;
//! * [`simulate`] — seeded path generation with occupation-time bookkeeping
//!   and a Monte Carlo diagnostic of the semimartingale decomposition;
//! * [`filter`] — the reference-probability forward filter with a recursive
//!   MAP estimate of the occupation clock;
//! * [`smoother`] — backward information vectors and fixed-interval
//!   smoothed posteriors;
//! * [`estimate`] — recursive jump/occupation/observation statistics and
//!   parameter re-estimates;
//! * [`embedding`] — the exact Markov lift onto (state, sojourn-level)
//!   pairs, its filter, and a brute-force enumeration oracle, used to
//!   cross-check the approximate filter;
//! * [`io`] — the model JSON schema and the CSV result formats used by the
//!   `semimarkov` command-line tool.
//!
//! ```
//! use semimarkov::model::{JumpKernel, ObservationModel, SemiMarkovModel, SojournLaw};
//! use semimarkov::filter::{run_filter, InitMode};
//! use semimarkov::simulate::{observe_path, simulate_path};
//!
//! let kernel = JumpKernel::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
//! let model = SemiMarkovModel::new(
//!     kernel,
//!     vec![
//!         SojournLaw::new(vec![0.0, 0.3, 0.7]).unwrap(),
//!         SojournLaw::geometric(0.5, 20).unwrap(),
//!     ],
//!     vec![0.5, 0.5],
//! )
//! .unwrap();
//! let obs = ObservationModel::new(vec![0.0, 2.0], vec![0.5, 0.5]).unwrap();
//!
//! let path = simulate_path(&model, 100, 7);
//! let y = observe_path(&path, &obs, 8);
//! let states = run_filter(&model, &obs, &y, InitMode::default()).unwrap();
//! assert_eq!(states.len(), y.len());
//! ```

pub mod embedding;
pub mod estimate;
pub mod filter;
pub mod io;
pub mod model;
pub mod simulate;
pub mod smoother;

pub use embedding::{enumerate_posterior, EmbeddedModel};
pub use estimate::{EstimationRun, Reestimates, StatisticState};
pub use filter::{filter_step, run_filter, FilterState, InitMode};
pub use model::{JumpKernel, ObservationModel, SemiMarkovModel, SojournLaw};
pub use simulate::{observe_path, occupation_clock, simulate_path, PathRecord};
pub use smoother::{backward_pass, smooth, smooth_run, SmootherPass};
