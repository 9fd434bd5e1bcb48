//! Desk-scale simulator for randomized benchmarking of noise-protected
//! single-qubit gates.
//!
//! The crate is organized bottom-up:
//!
//! - [`su2`] — exact 2x2 complex algebra: states, rotations, unitaries.
//! - [`noise`] — correlated dephasing field (Ornstein-Uhlenbeck), static
//!   amplitude errors, energy relaxation, and coherence-time calibration.
//! - [`clifford`] — the 24-element single-qubit Clifford group as signed
//!   axis permutations, P/G gate draws, recovery construction, and the
//!   software rotating-frame tracker.
//! - [`pulse`] — timed pulse schedules: rectangular, BB1, KDD-5, XY-4/8/16
//!   decoupling cycles, and the protected-gate scheme layouts.
//! - [`engine`] — time-domain propagation of a qubit under a schedule plus
//!   noise, and Monte Carlo orchestration of benchmarking and coherence
//!   experiments with deterministic seeding.
//! - [`analysis`] — exponential / stretched / quadratic decay fits and
//!   error-per-gate figures.

pub mod analysis;
pub mod clifford;
pub mod engine;
pub mod error;
pub mod noise;
pub mod pulse;
pub mod su2;

pub use error::Error;
