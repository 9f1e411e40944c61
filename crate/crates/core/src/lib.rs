//! Steady-state and correlation calculations for a two-level emitter with
//! broken inversion symmetry, driven far off resonance, that emits
//! correlated THz/optical photon pairs.

pub mod algebra;
pub mod cli;
pub mod config;
pub mod correlations;
pub mod dynamics;
pub mod heff;
pub mod model;
pub mod sweep;

pub use algebra::{HsBasis, OperatorMatrix};
pub use correlations::{cauchy_schwarz, g2_tau, g2_zero, Channel, CorrelationReport};
pub use dynamics::{
    build_adjoint_generator, propagate, steady_state, AdjointGenerator, BlochState,
};
pub use model::{preset, EffectiveModel, PhysicalParams};
pub use sweep::{run_sweep, SweepRow, SweepSpec};
