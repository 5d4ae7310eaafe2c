//! Scenario files: one JSON document describing a full experiment.
//!
//! ```json
//! {
//!   "problem": "dirichlet-laplace",
//!   "generator": { "kind": "periodic" },
//!   "density": { "kind": "uniform-box", "lo": [-0.5,-0.5,-0.5], "hi": [0.5,0.5,0.5] },
//!   "source": { "kind": "scalar", "bumps": [ { "amplitude": 1.0, "center": [0,0,0], "sigma": 0.25 } ] },
//!   "scaling": { "kind": "reflexive" },
//!   "sweep": { "kind": "n", "values": [125, 343, 729] },
//!   "replicates": 1,
//!   "base_seed": 7,
//!   "probes": { "center": [0,0,0], "radius": 1.25, "count": 128, "exclusion_margin": 4.0 },
//!   "solver": { "macro_cells": 64, "macro_margin": 0.15, "hypotheses": true }
//! }
//! ```

use crate::HarnessError;
use effmed_core::geometry::{
    generate_hardcore, generate_iid, generate_periodic, generate_poisson, Configuration, Density,
    Scaling,
};
use effmed_core::macrosolver::MacroModel;
use effmed_core::microsolver::{ProblemKind, SourceField};
use effmed_core::Vec3;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    Periodic,
    Iid,
    Hardcore { c: f64 },
    Poisson { intensity: f64, eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Sweep {
    /// Sweep over cloud sizes.
    N { values: Vec<usize> },
    /// Sweep over volume fractions at fixed n (conductor studies).
    Lambda { values: Vec<f64>, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub center: Vec3,
    pub radius: f64,
    pub count: usize,
    /// Probes closer than `exclusion_margin · r_n` to any ball center are
    /// discarded (must be ≥ 2).
    pub exclusion_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSpec {
    /// Micro solve: dense factorization or reflections with this tolerance.
    pub reflections_tol: Option<f64>,
    pub macro_cells: usize,
    pub macro_margin: f64,
    pub macro_tol: f64,
    /// Evaluate the hypothesis functionals per replicate.
    pub hypotheses: bool,
    /// Treecode opening parameter for the hypothesis sums (None = direct).
    pub tree_theta: Option<f64>,
    /// Also record the probe error against the unscreened background G⋆g.
    pub compare_unscreened: bool,
    /// Write wall-clock timings into the CSV (off for byte-stable output).
    pub timings: bool,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            reflections_tol: None,
            macro_cells: 64,
            macro_margin: 0.15,
            macro_tol: 1e-10,
            hypotheses: true,
            tree_theta: None,
            compare_unscreened: false,
            timings: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub problem: ProblemKind,
    pub generator: GeneratorSpec,
    pub density: Density,
    pub source: SourceField,
    pub scaling: Scaling,
    pub sweep: Sweep,
    pub replicates: usize,
    pub base_seed: u64,
    pub probes: ProbeSpec,
    #[serde(default)]
    pub solver: SolverSpec,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        let scenario: Scenario = serde_json::from_str(&text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.density
            .validate()
            .map_err(|e| HarnessError::Scenario(format!("density: {e}")))?;
        match &self.sweep {
            Sweep::N { values } => {
                if values.is_empty() {
                    return Err(HarnessError::Scenario("sweep is empty".into()));
                }
                if values.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(HarnessError::Scenario(
                        "sweep values must be strictly increasing".into(),
                    ));
                }
                if matches!(self.generator, GeneratorSpec::Periodic) {
                    for &n in values {
                        let m = (n as f64).cbrt().round() as usize;
                        if m * m * m != n {
                            return Err(HarnessError::Scenario(format!(
                                "periodic sweep value {n} is not a cube"
                            )));
                        }
                    }
                }
            }
            Sweep::Lambda { values, n } => {
                if values.is_empty() || *n == 0 {
                    return Err(HarnessError::Scenario("lambda sweep needs values and n".into()));
                }
                if values.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(HarnessError::Scenario(
                        "lambda sweep must be strictly increasing".into(),
                    ));
                }
            }
        }
        if self.probes.exclusion_margin < 2.0 {
            return Err(HarnessError::Scenario(
                "probe exclusion margin must be >= 2".into(),
            ));
        }
        if self.probes.count == 0 {
            return Err(HarnessError::Scenario("probe count must be positive".into()));
        }
        if self.replicates == 0 {
            return Err(HarnessError::Scenario("replicates must be positive".into()));
        }
        if matches!(self.generator, GeneratorSpec::Periodic) && self.replicates != 1 {
            return Err(HarnessError::Scenario(
                "periodic generator is deterministic; use replicates = 1".into(),
            ));
        }
        match (self.problem, &self.source) {
            (ProblemKind::DirichletStokes, SourceField::Scalar { .. }) => {
                return Err(HarnessError::Scenario(
                    "stokes problem needs a stokes source".into(),
                ))
            }
            (ProblemKind::DirichletLaplace | ProblemKind::Conductor, SourceField::Stokes { .. }) => {
                return Err(HarnessError::Scenario(
                    "scalar problem needs a scalar source".into(),
                ))
            }
            _ => {}
        }
        Ok(())
    }

    /// The effective model matched to the micro problem.
    pub fn macro_model(&self, lambda: f64) -> MacroModel {
        match self.problem {
            ProblemKind::DirichletLaplace => MacroModel::Strange,
            ProblemKind::DirichletStokes => MacroModel::Brinkman,
            ProblemKind::Conductor => MacroModel::Permittivity { lambda },
        }
    }

    /// Generate the configuration for one sweep point and replicate.
    pub fn generate(
        &self,
        n: usize,
        scaling: Scaling,
        replicate: usize,
    ) -> Result<Configuration, HarnessError> {
        let seed = effmed_core::geometry::derive_seed(self.base_seed, replicate as u64);
        let cfg = match &self.generator {
            GeneratorSpec::Periodic => {
                let m = (n as f64).cbrt().round() as usize;
                generate_periodic(m, &self.density.support(), scaling)?
            }
            GeneratorSpec::Iid => generate_iid(n, &self.density, scaling, seed)?,
            GeneratorSpec::Hardcore { c } => {
                generate_hardcore(n, &self.density, *c, scaling, seed)?
            }
            GeneratorSpec::Poisson { intensity, eps } => {
                generate_poisson(*intensity, &self.density.support(), *eps, scaling, seed)?
            }
        };
        Ok(cfg)
    }
}
