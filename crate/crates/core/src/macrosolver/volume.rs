//! Volume-potential (Lippmann–Schwinger) solvers for the three effective
//! models, posed on all of space: the compact coefficient ρ turns each PDE
//! into `u = u₀ ∓ coeff · (kernel ⋆ ρu)`, solved iteratively on a grid
//! covering `supp ρ`, with closed-form backgrounds and a representation
//! formula valid at arbitrary exterior points.

use super::conv::{
    point_weight_g, point_weight_g_st, point_weight_v, ConvKernel, GridConv, GridSpec,
};
use super::MacroError;
use crate::geometry::Density;
use crate::microsolver::SourceField;
use crate::vec3::{self, Vec3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MacroModel {
    /// `−Δu + 4πρu = g`
    Strange,
    /// `−Δu + ∇p + 6πρu = g`, `div u = 0`
    Brinkman,
    /// `−div((1 + 3λ|K_ρ|ρ)∇u) = g`, first order in λ
    Permittivity { lambda: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct GridParams {
    /// Cells along the longest axis.
    pub cells: usize,
    /// Absolute padding added around the support of ρ.
    pub margin: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            cells: 48,
            margin: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IterParams {
    pub tol: f64,
    pub max_iter: usize,
    /// Multiplies the reaction coefficient (screening-strength studies).
    pub coeff_scale: f64,
}

impl Default for IterParams {
    fn default() -> Self {
        IterParams {
            tol: 1e-10,
            max_iter: 200,
            coeff_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FieldValues {
    Scalar(Vec<f64>),
    Vector(Vec<Vec3>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MacroDiagnostics {
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub tolerance: f64,
    pub warnings: Vec<String>,
    /// Scale of the neglected `O(λ²)` term (permittivity only).
    pub truncation_estimate: Option<f64>,
}

/// A solved effective field: interior grid values plus everything needed to
/// evaluate the representation anywhere.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectiveField {
    pub model: MacroModel,
    pub spec: GridSpec,
    /// Interior solution values at cell centers.
    pub u: FieldValues,
    /// Representation density: `ρu` (strange/Brinkman), `ρ∇u₀`
    /// (permittivity).
    pub w: FieldValues,
    /// Reaction coefficient actually used (`4π`, `6π`, `3λ|K_ρ|`, times any
    /// scale).
    pub coeff: f64,
    pub source: SourceField,
    pub diagnostics: MacroDiagnostics,
}

/// Scalar or vector sample of an effective field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FieldSample {
    Scalar(f64),
    Vector(Vec3),
}

impl FieldSample {
    pub fn as_scalar(&self) -> f64 {
        match self {
            FieldSample::Scalar(v) => *v,
            _ => panic!("vector sample read as scalar"),
        }
    }
    pub fn as_vector(&self) -> Vec3 {
        match self {
            FieldSample::Vector(v) => *v,
            _ => panic!("scalar sample read as vector"),
        }
    }
    pub fn dist(&self, other: &FieldSample) -> f64 {
        match (self, other) {
            (FieldSample::Scalar(a), FieldSample::Scalar(b)) => (a - b).abs(),
            (FieldSample::Vector(a), FieldSample::Vector(b)) => vec3::dist(*a, *b),
            _ => panic!("mixed sample arities"),
        }
    }
    pub fn norm(&self) -> f64 {
        match self {
            FieldSample::Scalar(v) => v.abs(),
            FieldSample::Vector(v) => vec3::norm(*v),
        }
    }
}

/// Cell-averaged density values: sharp supports would otherwise contribute
/// a staircase error at the support boundary. Box supports use the exact
/// cell overlap (their faces sit at the same intra-cell fraction everywhere,
/// so sampling error would be coherent); curved supports use 4³ subsamples.
fn averaged_density(rho: &Density, spec: &GridSpec, centers: &[Vec3]) -> Vec<f64> {
    let h = spec.h;
    if let Density::UniformBox { lo, hi } = rho {
        let value = 1.0 / rho.support().volume();
        return centers
            .iter()
            .map(|&c| {
                let mut frac = 1.0;
                for d in 0..3 {
                    let a = (c[d] - 0.5 * h).max(lo[d]);
                    let b = (c[d] + 0.5 * h).min(hi[d]);
                    frac *= ((b - a) / h).max(0.0);
                }
                value * frac
            })
            .collect();
    }
    let sub = 4;
    centers
        .iter()
        .map(|&c| {
            let mut acc = 0.0;
            for a in 0..sub {
                for b in 0..sub {
                    for d in 0..sub {
                        let y = [
                            c[0] + ((a as f64 + 0.5) / sub as f64 - 0.5) * h,
                            c[1] + ((b as f64 + 0.5) / sub as f64 - 0.5) * h,
                            c[2] + ((d as f64 + 0.5) / sub as f64 - 0.5) * h,
                        ];
                        acc += rho.value(y);
                    }
                }
            }
            acc / (sub * sub * sub) as f64
        })
        .collect()
}

pub fn grid_over_support(rho: &Density, params: GridParams) -> GridSpec {
    let (lo, hi) = rho.support().bounding_box();
    let lo = [
        lo[0] - params.margin,
        lo[1] - params.margin,
        lo[2] - params.margin,
    ];
    let hi = [
        hi[0] + params.margin,
        hi[1] + params.margin,
        hi[2] + params.margin,
    ];
    let extent = (0..3).map(|d| hi[d] - lo[d]).fold(0.0f64, f64::max);
    let h = extent / params.cells as f64;
    let dims: [usize; 3] = std::array::from_fn(|d| ((hi[d] - lo[d]) / h).round() as usize);
    GridSpec {
        origin: lo,
        h,
        dims,
    }
}

/// Solve the requested effective model.
pub fn solve_volume_potential(
    model: MacroModel,
    rho: &Density,
    g: &SourceField,
    grid: GridParams,
    iter: IterParams,
) -> Result<EffectiveField, MacroError> {
    let spec = grid_over_support(rho, grid);
    let centers = spec.centers();
    let rho_grid = averaged_density(rho, &spec, &centers);
    let mut warnings = Vec::new();

    match model {
        MacroModel::Strange => {
            if !g.is_scalar() {
                return Err(MacroError::Precondition(
                    "strange model needs a scalar source".into(),
                ));
            }
            let coeff = 4.0 * PI * iter.coeff_scale;
            let conv = GridConv::new(spec, ConvKernel::Laplace);
            let b: Vec<f64> = centers.iter().map(|&c| g.potential(c)).collect();
            let apply = |u: &[f64]| -> Vec<f64> {
                let w: Vec<f64> = u.iter().zip(rho_grid.iter()).map(|(a, r)| a * r).collect();
                let gw = conv.apply_laplace(&w);
                u.iter().zip(gw.iter()).map(|(a, c)| a + coeff * c).collect()
            };
            let (u, diag) = bicgstab(&apply, &b, iter)?;
            let w: Vec<f64> = u.iter().zip(rho_grid.iter()).map(|(a, r)| a * r).collect();
            Ok(EffectiveField {
                model,
                spec,
                u: FieldValues::Scalar(u),
                w: FieldValues::Scalar(w),
                coeff,
                source: g.clone(),
                diagnostics: MacroDiagnostics {
                    warnings,
                    ..diag
                },
            })
        }
        MacroModel::Brinkman => {
            if g.is_scalar() {
                return Err(MacroError::Precondition(
                    "brinkman model needs a Stokes source".into(),
                ));
            }
            let coeff = 6.0 * PI * iter.coeff_scale;
            let conv = GridConv::new(spec, ConvKernel::Stokeslet);
            let b_vec: Vec<Vec3> = centers.iter().map(|&c| g.stokes_velocity(c)).collect();
            let b = flatten(&b_vec);
            let n = centers.len();
            let apply = |u_flat: &[f64]| -> Vec<f64> {
                let u = unflatten(u_flat);
                let w: Vec<Vec3> = u
                    .iter()
                    .zip(rho_grid.iter())
                    .map(|(v, r)| vec3::scale(*v, *r))
                    .collect();
                let gw = conv.apply_stokeslet(&w);
                let mut out = Vec::with_capacity(3 * n);
                for i in 0..n {
                    for a in 0..3 {
                        out.push(u[i][a] + coeff * gw[i][a]);
                    }
                }
                out
            };
            let (u_flat, diag) = bicgstab(&apply, &b, iter)?;
            let u = unflatten(&u_flat);
            let w: Vec<Vec3> = u
                .iter()
                .zip(rho_grid.iter())
                .map(|(v, r)| vec3::scale(*v, *r))
                .collect();
            Ok(EffectiveField {
                model,
                spec,
                u: FieldValues::Vector(u),
                w: FieldValues::Vector(w),
                coeff,
                source: g.clone(),
                diagnostics: MacroDiagnostics {
                    warnings,
                    ..diag
                },
            })
        }
        MacroModel::Permittivity { lambda } => {
            if !g.is_scalar() {
                return Err(MacroError::Precondition(
                    "permittivity model needs a scalar source".into(),
                ));
            }
            if lambda > 0.1 {
                warnings.push(format!(
                    "lambda = {lambda} beyond the first-order validity range (0.1)"
                ));
            }
            let kvol = rho.support().volume();
            let coeff = 3.0 * lambda * kvol * iter.coeff_scale;
            let conv = GridConv::new(spec, ConvKernel::GradG);
            let w: Vec<Vec3> = centers
                .iter()
                .zip(rho_grid.iter())
                .map(|(&c, r)| vec3::scale(g.grad_potential(c), *r))
                .collect();
            let correction = conv.apply_grad_g(&w);
            let u: Vec<f64> = centers
                .iter()
                .zip(correction.iter())
                .map(|(&c, corr)| g.potential(c) + coeff * corr)
                .collect();
            let corr_sup = correction
                .iter()
                .fold(0.0f64, |a, &b| a.max((coeff * b).abs()));
            Ok(EffectiveField {
                model,
                spec,
                u: FieldValues::Scalar(u),
                w: FieldValues::Vector(w),
                coeff,
                source: g.clone(),
                diagnostics: MacroDiagnostics {
                    iterations: 1,
                    residual: 0.0,
                    residual_history: vec![],
                    tolerance: iter.tol,
                    warnings,
                    truncation_estimate: Some(lambda * corr_sup),
                },
            })
        }
    }
}

impl EffectiveField {
    /// Evaluate at an arbitrary point: trilinear interpolation inside the
    /// grid, representation integral outside.
    pub fn eval(&self, x: Vec3) -> FieldSample {
        if self.spec.contains(x) {
            match &self.u {
                FieldValues::Scalar(v) => FieldSample::Scalar(self.spec.trilinear(v, x)),
                FieldValues::Vector(v) => {
                    let mut out = [0.0; 3];
                    for a in 0..3 {
                        let comp: Vec<f64> = v.iter().map(|t| t[a]).collect();
                        out[a] = self.spec.trilinear(&comp, x);
                    }
                    FieldSample::Vector(out)
                }
            }
        } else {
            self.eval_representation(x)
        }
    }

    /// The representation `u(x) = u₀(x) ∓ coeff Σ_cells K(x−y_c) w_c`,
    /// valid at any point; at grid centers it reproduces the interior
    /// values to solver precision.
    pub fn eval_representation(&self, x: Vec3) -> FieldSample {
        let h = self.spec.h;
        match (&self.model, &self.w) {
            (MacroModel::Strange, FieldValues::Scalar(w)) => {
                let mut acc = 0.0;
                for (idx, &wc) in w.iter().enumerate() {
                    if wc != 0.0 {
                        acc += point_weight_g(x, self.cell_center(idx), h) * wc;
                    }
                }
                FieldSample::Scalar(self.source.potential(x) - self.coeff * acc)
            }
            (MacroModel::Brinkman, FieldValues::Vector(w)) => {
                let mut acc = [0.0; 3];
                for (idx, wc) in w.iter().enumerate() {
                    if vec3::norm2(*wc) != 0.0 {
                        let m = point_weight_g_st(x, self.cell_center(idx), h);
                        vec3::axpy(&mut acc, 1.0, crate::mat3::matvec(m, *wc));
                    }
                }
                let mut u = self.source.stokes_velocity(x);
                vec3::axpy(&mut u, -self.coeff, acc);
                FieldSample::Vector(u)
            }
            (MacroModel::Permittivity { .. }, FieldValues::Vector(w)) => {
                let mut acc = 0.0;
                for (idx, wc) in w.iter().enumerate() {
                    if vec3::norm2(*wc) != 0.0 {
                        acc += vec3::dot(point_weight_v(x, self.cell_center(idx), h), *wc);
                    }
                }
                FieldSample::Scalar(self.source.potential(x) + self.coeff * acc)
            }
            _ => unreachable!("representation density arity mismatch"),
        }
    }

    fn cell_center(&self, flat: usize) -> Vec3 {
        let nx = self.spec.dims[0];
        let ny = self.spec.dims[1];
        let i = flat % nx;
        let j = (flat / nx) % ny;
        let k = flat / (nx * ny);
        self.spec.center(i, j, k)
    }

    /// The far-field monopole `∫(g − coeff·w)` implied by the
    /// representation (strange model).
    pub fn effective_mass(&self) -> f64 {
        match (&self.model, &self.w) {
            (MacroModel::Strange, FieldValues::Scalar(w)) => {
                let cell = self.spec.h.powi(3);
                self.source.total_mass() - self.coeff * w.iter().sum::<f64>() * cell
            }
            _ => panic!("effective mass defined for the strange model"),
        }
    }
}

/// Evaluate an effective field at many points.
pub fn evaluate_effective(field: &EffectiveField, points: &[Vec3]) -> Vec<FieldSample> {
    points.iter().map(|&x| field.eval(x)).collect()
}

fn flatten(v: &[Vec3]) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * v.len());
    for t in v {
        out.extend_from_slice(t);
    }
    out
}

fn unflatten(v: &[f64]) -> Vec<Vec3> {
    v.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
}

/// Unpreconditioned BiCGStab with deterministic (sequential) reductions.
fn bicgstab<F>(
    apply: &F,
    b: &[f64],
    params: IterParams,
) -> Result<(Vec<f64>, MacroDiagnostics), MacroError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let dot = |a: &[f64], c: &[f64]| -> f64 { a.iter().zip(c).map(|(x, y)| x * y).sum() };
    let norm = |a: &[f64]| -> f64 { dot(a, a).sqrt() };
    let b_norm = norm(b).max(1e-300);

    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = b.to_vec();
    let r_hat = r.clone();
    let mut rho_prev = 1.0f64;
    let mut alpha = 1.0f64;
    let mut omega = 1.0f64;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut history = Vec::new();

    let mut rel = norm(&r) / b_norm;
    history.push(rel);
    if rel <= params.tol {
        return Ok((
            x,
            MacroDiagnostics {
                iterations: 0,
                residual: rel,
                residual_history: history,
                tolerance: params.tol,
                warnings: vec![],
                truncation_estimate: None,
            },
        ));
    }
    for it in 1..=params.max_iter {
        let rho = dot(&r_hat, &r);
        if rho.abs() < 1e-300 {
            return Err(MacroError::IterationStagnated { history });
        }
        let beta = (rho / rho_prev) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        v = apply(&p);
        alpha = rho / dot(&r_hat, &v);
        let s: Vec<f64> = (0..n).map(|i| r[i] - alpha * v[i]).collect();
        if norm(&s) / b_norm <= params.tol {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            rel = norm(&s) / b_norm;
            history.push(rel);
            return Ok((
                x,
                MacroDiagnostics {
                    iterations: it,
                    residual: rel,
                    residual_history: history,
                    tolerance: params.tol,
                    warnings: vec![],
                    truncation_estimate: None,
                },
            ));
        }
        let t = apply(&s);
        omega = dot(&t, &s) / dot(&t, &t).max(1e-300);
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        rho_prev = rho;
        rel = norm(&r) / b_norm;
        history.push(rel);
        if rel <= params.tol {
            return Ok((
                x,
                MacroDiagnostics {
                    iterations: it,
                    residual: rel,
                    residual_history: history,
                    tolerance: params.tol,
                    warnings: vec![],
                    truncation_estimate: None,
                },
            ));
        }
    }
    Err(MacroError::IterationStagnated { history })
}
