//! Singularity-collocation solvers for the three perforated-domain
//! problems: grounded spheres (monopoles), no-slip spheres (Stokeslets with
//! the degenerate quadrupole correction), and perfectly conducting spheres
//! (dipoles). Source terms are finite sums of Gaussian bumps so that every
//! background potential is closed form.

mod corrector;
mod solve;
mod source;

pub use corrector::{phi1_conductor, phi1_laplace, phi1_stokes};
pub use solve::{
    solve_conductor, solve_dirichlet_laplace, solve_dirichlet_stokes, MicroOptions, SolveMethod,
};
pub use source::{gaussian_ball_mass, ScalarBump, SourceField, VectorBump};

use crate::geometry::{BallCubature, Configuration};
use crate::kernels;
use crate::mat3;
use crate::vec3::{self, Vec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MicroError {
    #[error("balls {i} and {j} overlap or touch (distance {dist}, 2r = {two_r})")]
    OverlappingPair {
        i: usize,
        j: usize,
        dist: f64,
        two_r: f64,
    },
    #[error("collocation matrix is singular")]
    SingularSystem,
    #[error("stokes mobility matrix is not positive definite (near-contact breakdown, min gap {min_gap})")]
    NearContactBreakdown { min_gap: f64 },
    #[error("reflections did not converge within {sweeps} sweeps (residual {residual})")]
    ReflectionsStalled { sweeps: usize, residual: f64 },
    #[error("reflections diverged after {sweeps} sweeps (residual {residual})")]
    ReflectionsDiverged { sweeps: usize, residual: f64 },
    #[error("source field mode mismatch: expected {expected}")]
    SourceMode { expected: &'static str },
    #[error("{0}")]
    Precondition(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    DirichletLaplace,
    DirichletStokes,
    Conductor,
}

/// Singularity strengths of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "kebab-case")]
pub enum Strengths {
    Charges(Vec<f64>),
    Forces(Vec<Vec3>),
    Dipoles(Vec<Vec3>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub method: String,
    pub iterations: usize,
    /// Max-norm residual of the collocation system, relative to the
    /// right-hand side.
    pub linear_residual: f64,
    pub warnings: Vec<String>,
}

/// A solved perforated-domain problem together with everything needed to
/// evaluate the represented field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroSolution {
    pub kind: ProblemKind,
    pub centers: Vec<Vec3>,
    pub radius: f64,
    pub source: SourceField,
    pub strengths: Strengths,
    /// Scaled quadrupole correction is included in the Stokes field
    /// representation unless the pure-Stokeslet variant was requested.
    pub pure_stokeslet: bool,
    pub diagnostics: SolveDiagnostics,
}

impl MicroSolution {
    /// Scalar field value (Laplace and conductor problems).
    pub fn eval_scalar(&self, x: Vec3) -> f64 {
        match &self.strengths {
            Strengths::Charges(q) => {
                let mut u = self.source.potential(x);
                for (j, &c) in self.centers.iter().enumerate() {
                    u += q[j] * kernels::g(vec3::sub(x, c));
                }
                u
            }
            Strengths::Dipoles(p) => {
                let mut u = self.source.potential(x);
                for (j, &c) in self.centers.iter().enumerate() {
                    u += vec3::dot(p[j], kernels::grad_g(vec3::sub(x, c)));
                }
                u
            }
            Strengths::Forces(_) => panic!("vector solution evaluated as scalar"),
        }
    }

    /// Velocity field value (Stokes problem).
    pub fn eval_velocity(&self, x: Vec3) -> Vec3 {
        match &self.strengths {
            Strengths::Forces(f) => {
                let mut u = self.source.stokes_velocity(x);
                let r2 = self.radius * self.radius;
                for (j, &c) in self.centers.iter().enumerate() {
                    let d = vec3::sub(x, c);
                    let mut m = kernels::g_st(d);
                    if !self.pure_stokeslet {
                        m = mat3::add(m, mat3::scale(kernels::r_st(d), r2));
                    }
                    vec3::axpy(&mut u, 1.0, mat3::matvec(m, f[j]));
                }
                u
            }
            _ => panic!("scalar solution evaluated as velocity"),
        }
    }
}

/// Fixed 26-direction sample on each sphere: the nonzero sign patterns of
/// `{-1,0,1}³`, normalized.
pub fn boundary_sample_directions() -> Vec<Vec3> {
    let mut dirs = Vec::with_capacity(26);
    for i in -1i32..=1 {
        for j in -1i32..=1 {
            for k in -1i32..=1 {
                if i == 0 && j == 0 && k == 0 {
                    continue;
                }
                dirs.push(vec3::normalize([i as f64, j as f64, k as f64]));
            }
        }
    }
    dirs
}

/// Boundary-condition violation report over the fixed 26-point sphere
/// samples, plus the conductor flux defect.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualReport {
    pub per_ball_max: Vec<f64>,
    pub max: f64,
    /// `| flux(u₀) through ∂B_i + ∫_{B_i} g |` per ball (conductor only):
    /// the point-dipole flux is identically zero, so the defect measures
    /// the quadrature/ansatz consistency, reported but not thresholded.
    pub flux_defect: Option<Vec<f64>>,
}

pub fn boundary_residual(solution: &MicroSolution) -> ResidualReport {
    let dirs = boundary_sample_directions();
    let mut per_ball = Vec::with_capacity(solution.centers.len());
    for &c in &solution.centers {
        let mut worst = 0.0f64;
        match solution.kind {
            ProblemKind::DirichletLaplace => {
                for d in &dirs {
                    let x = vec3::add(c, vec3::scale(*d, solution.radius));
                    worst = worst.max(solution.eval_scalar(x).abs());
                }
            }
            ProblemKind::DirichletStokes => {
                for d in &dirs {
                    let x = vec3::add(c, vec3::scale(*d, solution.radius));
                    worst = worst.max(vec3::norm(solution.eval_velocity(x)));
                }
            }
            ProblemKind::Conductor => {
                // the trace should be a constant; measure spread about the mean
                let vals: Vec<f64> = dirs
                    .iter()
                    .map(|d| solution.eval_scalar(vec3::add(c, vec3::scale(*d, solution.radius))))
                    .collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                for v in vals {
                    worst = worst.max((v - mean).abs());
                }
            }
        }
        per_ball.push(worst);
    }
    let flux_defect = if solution.kind == ProblemKind::Conductor {
        let cubature = BallCubature::degree5();
        Some(
            solution
                .centers
                .iter()
                .map(|&c| {
                    let analytic = solution.source.mass_in_ball(c, solution.radius);
                    let quadrature =
                        cubature.integrate(c, solution.radius, |x| solution.source.value(x));
                    (quadrature - analytic).abs()
                })
                .collect(),
        )
    } else {
        None
    };
    ResidualReport {
        max: per_ball.iter().fold(0.0f64, |a, &b| a.max(b)),
        per_ball_max: per_ball,
        flux_defect,
    }
}

/// Check disjointness before assembling a collocation system.
fn require_disjoint(config: &Configuration) -> Result<(), MicroError> {
    if config.n >= 2 {
        let (d, i, j) = crate::geometry::min_distance_pair(&config.centers);
        if d <= 2.0 * config.radius {
            return Err(MicroError::OverlappingPair {
                i,
                j,
                dist: d,
                two_r: 2.0 * config.radius,
            });
        }
    }
    Ok(())
}

/// Near-contact warning threshold: gap below a tenth of the radius.
fn near_contact_warning(config: &Configuration) -> Option<String> {
    if config.n >= 2 {
        let d = config.min_distance();
        let gap = d - 2.0 * config.radius;
        if gap < 0.1 * config.radius {
            return Some(format!(
                "near-contact configuration: min gap {gap:.3e} < 0.1 r = {:.3e}; collocation accuracy not certified",
                0.1 * config.radius
            ));
        }
    }
    None
}
