//! Simulation and analysis of cyclic monotone negative-feedback delay systems.

// NaN-rejecting guards are written as negated comparisons on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod genenet;
pub mod integrator;
pub mod lyapunov;
pub mod numeric;
pub mod orbit;
pub mod spectral;
pub mod steady;
pub mod systems;

pub use error::{Error, Result};
pub use integrator::{integrate, model_system, Trajectory};
pub use systems::{CyclicSystem, Nonlinearity, NonlinearityKind, SystemState, UnidirectionalSystem};
