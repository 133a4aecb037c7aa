//! Quantum trajectories of weakly monitored spin-1/2 chains.
//!
//! States evolve under the homodyne stochastic Schrödinger equation for the
//! generalized Heisenberg chain: a second-order Trotter step for the
//! Hamiltonian followed by an exponentiated measurement layer. Half-chain
//! entanglement entropies are averaged over trajectories and late times, and
//! their system-size scaling is classified (volume law versus logarithmic law)
//! by an F-test.

pub mod checkpoint;
pub mod error;
pub mod io;
pub mod model;
pub mod monitoring;
pub mod report;
pub mod runner;
pub mod state;
pub mod stats;
pub mod trotter;

pub use error::{Error, Result};
pub use model::{classify, monitored_operators, Axis, ModelSpec, MonitorKind, MonitorOp, MonitorSpec, Preset, SetupClass};
pub use monitoring::{NoiseStream, Scheme};
pub use runner::{run_ensemble, run_trajectory, sweep_sizes, RunConfig, ScalingPoint, Simulator, SweepOptions};
pub use state::{InitMode, StateVector};
pub use stats::{f_test, FTestReport, ScalingSeries};
pub use trotter::TrotterPlan;
