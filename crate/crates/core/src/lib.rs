//! Bistable phosphorylation and nuclear import: model, integrators,
//! phase-plane tools, bifurcation continuation and noise analysis.

pub mod calibrate;
pub mod config;
pub mod continuation;
pub mod error;
pub mod integrate;
pub mod io;
pub mod jet;
pub mod model;
pub mod phase;
pub mod stochastic;

pub use error::{Error, Result};
pub use model::{FullState, ModelParams, Param, PhasePoint, ReducedState};
