//! Scenario-driven experiment harness: configuration generation, hypothesis
//! sweeps, micro/macro convergence studies, rate fitting, and kernel-sum
//! benchmarks, all reproducible from a single JSON scenario.

pub mod bench;
pub mod convergence;
pub mod probes;
pub mod ratefit;
pub mod scenario;

pub use bench::{bench_kernel_sum, BenchRow};
pub use convergence::{run_convergence, ConvergenceReport, MacroCache, RunRow};
pub use probes::{admissible_probes, fibonacci_shell};
pub use ratefit::{estimate_rate, RateFit};
pub use scenario::{GeneratorSpec, ProbeSpec, Scenario, SolverSpec, Sweep};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("scenario invalid: {0}")]
    Scenario(String),
    #[error("rate fit needs at least 3 positive samples: {0}")]
    RateFit(String),
    #[error(transparent)]
    Geometry(#[from] effmed_core::geometry::GeometryError),
    #[error(transparent)]
    Hypothesis(#[from] effmed_core::hypotheses::HypothesisError),
    #[error(transparent)]
    Micro(#[from] effmed_core::microsolver::MicroError),
    #[error(transparent)]
    Macro(#[from] effmed_core::macrosolver::MacroError),
    #[error(transparent)]
    Kernel(#[from] effmed_core::kernels::KernelError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
