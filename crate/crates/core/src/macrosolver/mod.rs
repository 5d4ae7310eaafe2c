//! Independent solvers for the effective PDEs: a radial finite-difference
//! reference for the screened model and whole-space volume-potential solves
//! for all three limits.

pub mod conv;
pub mod radial;
pub mod volume;

pub use conv::{GridConv, GridSpec};
pub use radial::{solve_strange_radial, RadialParams, RadialProfile};
pub use volume::{
    evaluate_effective, grid_over_support, solve_volume_potential, EffectiveField, FieldSample,
    FieldValues, GridParams, IterParams, MacroDiagnostics, MacroModel,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MacroError {
    #[error("radial domain r_max = {r_max} smaller than the supports (need {needed})")]
    DomainTooSmall { r_max: f64, needed: f64 },
    #[error("data is not radially symmetric: {0}")]
    NotRadial(String),
    #[error("iteration stagnated; residual history has {} entries, last {:?}", history.len(), history.last())]
    IterationStagnated { history: Vec<f64> },
    #[error("{0}")]
    Precondition(String),
}
