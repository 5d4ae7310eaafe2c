//! Dense collocation solves and the method-of-reflections iteration.

use super::{
    near_contact_warning, require_disjoint, MicroError, MicroSolution, ProblemKind,
    SolveDiagnostics, SourceField, Strengths,
};
use crate::geometry::Configuration;
use crate::kernels;
use crate::mat3::{self, Mat3};
use crate::vec3::{self, Vec3};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMethod {
    /// Dense factorization of the collocation system.
    Direct,
    /// Damped Jacobi sweeps (single-sphere corrections), tolerance on the
    /// relative strength update.
    Reflections { tol: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct MicroOptions {
    pub method: SolveMethod,
    /// Drop the scaled `R_St` correction from the Stokes mobility and field
    /// representation (comparison variant; the default representation is
    /// exact for a single sphere).
    pub pure_stokeslet: bool,
}

impl Default for MicroOptions {
    fn default() -> Self {
        MicroOptions {
            method: SolveMethod::Direct,
            pure_stokeslet: false,
        }
    }
}

const REFLECTIONS_DAMPING: f64 = 0.5;
const REFLECTIONS_MAX_SWEEPS: usize = 500;

/// Grounded spheres: solve
/// `q_i/(4π r) + Σ_{j≠i} q_j G(x_i−x_j) = −(G⋆g)(x_i)`.
pub fn solve_dirichlet_laplace(
    config: &Configuration,
    source: &SourceField,
    opts: MicroOptions,
) -> Result<MicroSolution, MicroError> {
    if !source.is_scalar() {
        return Err(MicroError::SourceMode { expected: "scalar" });
    }
    require_disjoint(config)?;
    let n = config.n;
    let r = config.radius;
    let rhs: Vec<f64> = config.centers.iter().map(|&c| -source.potential(c)).collect();
    let mut warnings = Vec::new();
    if let Some(w) = near_contact_warning(config) {
        warnings.push(w);
    }

    let (charges, diagnostics) = match opts.method {
        SolveMethod::Direct => {
            let a = DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    1.0 / (4.0 * PI * r)
                } else {
                    kernels::g(vec3::sub(config.centers[i], config.centers[j]))
                }
            });
            let b = DVector::from_vec(rhs.clone());
            let lu = a.clone().lu();
            let q = lu.solve(&b).ok_or(MicroError::SingularSystem)?;
            let residual = relative_residual(&a, &q, &b);
            (
                q.iter().copied().collect::<Vec<f64>>(),
                SolveDiagnostics {
                    method: "direct".into(),
                    iterations: 1,
                    linear_residual: residual,
                    warnings: warnings.clone(),
                },
            )
        }
        SolveMethod::Reflections { tol } => {
            let apply_offdiag = |q: &[f64], out: &mut Vec<f64>| {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for (j, &qj) in q.iter().enumerate() {
                        if j != i {
                            s += qj * kernels::g(vec3::sub(config.centers[i], config.centers[j]));
                        }
                    }
                    *o = s;
                }
            };
            let mut q = vec![0.0; n];
            let mut inter = vec![0.0; n];
            let mut iterations = 0;
            let mut residual = f64::INFINITY;
            let mut prev_update = f64::INFINITY;
            let mut growth_streak = 0usize;
            for sweep in 0..REFLECTIONS_MAX_SWEEPS {
                iterations = sweep + 1;
                apply_offdiag(&q, &mut inter);
                let mut update = 0.0f64;
                let mut scale = 0.0f64;
                for i in 0..n {
                    let target = 4.0 * PI * r * (rhs[i] - inter[i]);
                    let next = (1.0 - REFLECTIONS_DAMPING) * q[i] + REFLECTIONS_DAMPING * target;
                    update = update.max((next - q[i]).abs());
                    scale = scale.max(next.abs());
                    q[i] = next;
                }
                residual = if scale > 0.0 { update / scale } else { 0.0 };
                if residual <= tol {
                    break;
                }
                if update > prev_update * 1.000001 {
                    growth_streak += 1;
                    if growth_streak >= 10 {
                        return Err(MicroError::ReflectionsDiverged {
                            sweeps: iterations,
                            residual,
                        });
                    }
                } else {
                    growth_streak = 0;
                }
                prev_update = update;
            }
            if residual > tol {
                return Err(MicroError::ReflectionsStalled {
                    sweeps: iterations,
                    residual,
                });
            }
            (
                q,
                SolveDiagnostics {
                    method: format!("reflections(tol={tol})"),
                    iterations,
                    linear_residual: residual,
                    warnings: warnings.clone(),
                },
            )
        }
    };

    Ok(MicroSolution {
        kind: ProblemKind::DirichletLaplace,
        centers: config.centers.clone(),
        radius: r,
        source: source.clone(),
        strengths: Strengths::Charges(charges),
        pure_stokeslet: false,
        diagnostics,
    })
}

/// No-slip spheres: solve `Σ_j M_ij F_j = −(G_St⋆g)(x_i)` with
/// `M_ii = I/(6π r)` and `M_ij = G_St(x_i−x_j) + r² R_St(x_i−x_j)`.
pub fn solve_dirichlet_stokes(
    config: &Configuration,
    source: &SourceField,
    opts: MicroOptions,
) -> Result<MicroSolution, MicroError> {
    if source.is_scalar() {
        return Err(MicroError::SourceMode { expected: "stokes" });
    }
    require_disjoint(config)?;
    let n = config.n;
    let r = config.radius;
    let mut warnings = Vec::new();
    if let Some(w) = near_contact_warning(config) {
        warnings.push(w);
    }
    let rhs_vecs: Vec<Vec3> = config
        .centers
        .iter()
        .map(|&c| vec3::scale(source.stokes_velocity(c), -1.0))
        .collect();
    let block = |i: usize, j: usize| -> Mat3 {
        if i == j {
            mat3::scaled_identity(1.0 / (6.0 * PI * r))
        } else {
            let d = vec3::sub(config.centers[i], config.centers[j]);
            let mut m = kernels::g_st(d);
            if !opts.pure_stokeslet {
                m = mat3::add(m, mat3::scale(kernels::r_st(d), r * r));
            }
            m
        }
    };

    let (forces, diagnostics) = match opts.method {
        SolveMethod::Direct => {
            let dim = 3 * n;
            let a = DMatrix::from_fn(dim, dim, |row, col| {
                let (i, a_) = (row / 3, row % 3);
                let (j, b_) = (col / 3, col % 3);
                block(i, j)[a_][b_]
            });
            let mut b = DVector::zeros(dim);
            for (i, v) in rhs_vecs.iter().enumerate() {
                for k in 0..3 {
                    b[3 * i + k] = v[k];
                }
            }
            // The mobility matrix is symmetric positive definite for
            // disjoint spheres; a Cholesky failure flags near contact.
            let chol = a.clone().cholesky().ok_or_else(|| {
                MicroError::NearContactBreakdown {
                    min_gap: config.min_distance() - 2.0 * r,
                }
            })?;
            let f = chol.solve(&b);
            let residual = relative_residual(&a, &f, &b);
            let forces: Vec<Vec3> = (0..n).map(|i| [f[3 * i], f[3 * i + 1], f[3 * i + 2]]).collect();
            (
                forces,
                SolveDiagnostics {
                    method: "direct".into(),
                    iterations: 1,
                    linear_residual: residual,
                    warnings: warnings.clone(),
                },
            )
        }
        SolveMethod::Reflections { tol } => {
            let mut f = vec![[0.0; 3]; n];
            let mut iterations = 0;
            let mut residual = f64::INFINITY;
            let mut prev_update = f64::INFINITY;
            let mut growth_streak = 0usize;
            for sweep in 0..REFLECTIONS_MAX_SWEEPS {
                iterations = sweep + 1;
                let mut update = 0.0f64;
                let mut scale = 0.0f64;
                let snapshot = f.clone();
                for i in 0..n {
                    let mut inter = [0.0; 3];
                    for (j, fj) in snapshot.iter().enumerate() {
                        if j != i {
                            vec3::axpy(&mut inter, 1.0, mat3::matvec(block(i, j), *fj));
                        }
                    }
                    let target = vec3::scale(vec3::sub(rhs_vecs[i], inter), 6.0 * PI * r);
                    let next = vec3::add(
                        vec3::scale(f[i], 1.0 - REFLECTIONS_DAMPING),
                        vec3::scale(target, REFLECTIONS_DAMPING),
                    );
                    update = update.max(vec3::dist(next, f[i]));
                    scale = scale.max(vec3::norm(next));
                    f[i] = next;
                }
                residual = if scale > 0.0 { update / scale } else { 0.0 };
                if residual <= tol {
                    break;
                }
                if update > prev_update * 1.000001 {
                    growth_streak += 1;
                    if growth_streak >= 10 {
                        return Err(MicroError::ReflectionsDiverged {
                            sweeps: iterations,
                            residual,
                        });
                    }
                } else {
                    growth_streak = 0;
                }
                prev_update = update;
            }
            if residual > tol {
                return Err(MicroError::ReflectionsStalled {
                    sweeps: iterations,
                    residual,
                });
            }
            (
                f,
                SolveDiagnostics {
                    method: format!("reflections(tol={tol})"),
                    iterations,
                    linear_residual: residual,
                    warnings: warnings.clone(),
                },
            )
        }
    };

    Ok(MicroSolution {
        kind: ProblemKind::DirichletStokes,
        centers: config.centers.clone(),
        radius: r,
        source: source.clone(),
        strengths: Strengths::Forces(forces),
        pure_stokeslet: opts.pure_stokeslet,
        diagnostics,
    })
}

/// Perfectly conducting spheres: solve
/// `p_i − 4π r³ Σ_{j≠i} ∇V(x_i−x_j) p_j = 4π r³ ∇(G⋆g)(x_i)`.
pub fn solve_conductor(
    config: &Configuration,
    source: &SourceField,
) -> Result<MicroSolution, MicroError> {
    if !source.is_scalar() {
        return Err(MicroError::SourceMode { expected: "scalar" });
    }
    require_disjoint(config)?;
    let n = config.n;
    let r = config.radius;
    let polarizability = 4.0 * PI * r * r * r;
    let mut warnings = Vec::new();
    if let Some(w) = near_contact_warning(config) {
        warnings.push(w);
    }
    let dim = 3 * n;
    let a = DMatrix::from_fn(dim, dim, |row, col| {
        let (i, a_) = (row / 3, row % 3);
        let (j, b_) = (col / 3, col % 3);
        if i == j {
            if a_ == b_ {
                1.0
            } else {
                0.0
            }
        } else {
            let m = kernels::grad_v(vec3::sub(config.centers[i], config.centers[j]));
            -polarizability * m[a_][b_]
        }
    });
    let mut b = DVector::zeros(dim);
    for (i, &c) in config.centers.iter().enumerate() {
        let e = source.grad_potential(c);
        for k in 0..3 {
            b[3 * i + k] = polarizability * e[k];
        }
    }
    let lu = a.clone().lu();
    let p = lu.solve(&b).ok_or(MicroError::SingularSystem)?;
    let residual = relative_residual(&a, &p, &b);
    let dipoles: Vec<Vec3> = (0..n).map(|i| [p[3 * i], p[3 * i + 1], p[3 * i + 2]]).collect();
    Ok(MicroSolution {
        kind: ProblemKind::Conductor,
        centers: config.centers.clone(),
        radius: r,
        source: source.clone(),
        strengths: Strengths::Dipoles(dipoles),
        pure_stokeslet: false,
        diagnostics: SolveDiagnostics {
            method: "direct".into(),
            iterations: 1,
            linear_residual: residual,
            warnings,
        },
    })
}

fn relative_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    if b.is_empty() {
        return 0.0;
    }
    let r = a * x - b;
    let scale = b.amax().max(1e-300);
    r.amax() / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GeneratorTag, Scaling};
    use crate::microsolver::{boundary_residual, ScalarBump};

    fn config(centers: Vec<Vec3>, radius: f64) -> Configuration {
        Configuration {
            n: centers.len(),
            radius,
            scaling: Scaling::Power {
                coeff: radius,
                exponent: 0.0,
            },
            generator: GeneratorTag::Manual,
            seed: 0,
            centers,
        }
    }

    #[test]
    fn single_sphere_capacity() {
        let r = 0.05;
        let cfg = config(vec![[0.0; 3]], r);
        let g = SourceField::single_scalar(1.0, [2.0, 0.0, 0.0], 0.3);
        let sol = solve_dirichlet_laplace(&cfg, &g, MicroOptions::default()).unwrap();
        let u0 = g.potential([0.0; 3]);
        let q = match &sol.strengths {
            Strengths::Charges(q) => q[0],
            _ => unreachable!(),
        };
        let expect = -4.0 * PI * r * u0;
        assert!((q - expect).abs() <= 1e-12 * expect.abs(), "{q} vs {expect}");
    }

    #[test]
    fn zero_source_gives_zero_strengths() {
        let cfg = config(vec![[0.0; 3], [0.5, 0.0, 0.0]], 0.05);
        let g = SourceField::single_scalar(0.0, [0.0, 0.0, 2.0], 0.25);
        let sol = solve_dirichlet_laplace(&cfg, &g, MicroOptions::default()).unwrap();
        match &sol.strengths {
            Strengths::Charges(q) => assert!(q.iter().all(|&v| v == 0.0)),
            _ => unreachable!(),
        }
        assert_eq!(sol.eval_scalar([0.3, 0.3, 0.3]), 0.0);
    }

    #[test]
    fn symmetric_pair_is_screened() {
        let r = 0.05;
        let cfg = config(vec![[-0.2, 0.0, 0.0], [0.2, 0.0, 0.0]], r);
        let g = SourceField::single_scalar(1.0, [0.0, 0.0, 1.5], 0.2);
        let sol = solve_dirichlet_laplace(&cfg, &g, MicroOptions::default()).unwrap();
        let q = match &sol.strengths {
            Strengths::Charges(q) => q.clone(),
            _ => unreachable!(),
        };
        assert!((q[0] - q[1]).abs() < 1e-14 * q[0].abs());
        let isolated = -4.0 * PI * r * g.potential([-0.2, 0.0, 0.0]);
        assert!(q[0].abs() < isolated.abs(), "screening must reduce |q|");
    }

    #[test]
    fn single_sphere_stokes_drag_and_residual() {
        let r = 0.07;
        let cfg = config(vec![[0.0; 3]], r);
        let g = SourceField::single_stokes([0.0, 0.0, 1.0], [1.0, 1.0, 0.0], 0.3);
        let sol = solve_dirichlet_stokes(&cfg, &g, MicroOptions::default()).unwrap();
        let u0 = g.stokes_velocity([0.0; 3]);
        let f = match &sol.strengths {
            Strengths::Forces(f) => f[0],
            _ => unreachable!(),
        };
        let expect = vec3::scale(u0, -6.0 * PI * r);
        assert!(
            vec3::dist(f, expect) <= 1e-12 * vec3::norm(expect),
            "{f:?} vs {expect:?}"
        );
        // The scattered field exactly cancels the centre value of the
        // background on the sphere: eval(x) − u0(x) = −u0(x₁) there.
        for d in crate::microsolver::boundary_sample_directions() {
            let x = vec3::add([0.0; 3], vec3::scale(d, r));
            let scattered = vec3::sub(sol.eval_velocity(x), g.stokes_velocity(x));
            let expect = vec3::scale(u0, -1.0);
            assert!(
                vec3::dist(scattered, expect) <= 1e-12 * vec3::norm(u0),
                "representation not exact at {x:?}"
            );
        }
        // The full residual is first order in the background variation,
        // reported rather than thresholded; sanity-bound it loosely.
        let res = boundary_residual(&sol);
        assert!(res.max <= 0.1 * vec3::norm(u0), "residual {}", res.max);
    }

    #[test]
    fn pure_stokeslet_variant_drops_the_quadrupole_correction() {
        let r = 0.07;
        let cfg = config(vec![[0.0; 3]], r);
        let g = SourceField::single_stokes([0.0, 0.0, 1.0], [1.0, 1.0, 0.0], 0.3);
        let full = solve_dirichlet_stokes(&cfg, &g, MicroOptions::default()).unwrap();
        let pure = solve_dirichlet_stokes(
            &cfg,
            &g,
            MicroOptions {
                pure_stokeslet: true,
                ..Default::default()
            },
        )
        .unwrap();
        // identical force for one sphere (diagonal mobility is the same)
        let (ff, fp) = match (&full.strengths, &pure.strengths) {
            (Strengths::Forces(a), Strengths::Forces(b)) => (a[0], b[0]),
            _ => unreachable!(),
        };
        assert!(vec3::dist(ff, fp) < 1e-14);
        // but the represented fields differ near the sphere by the scaled
        // R_St term
        let x = [1.5 * r, 0.0, 0.0];
        let diff = vec3::dist(full.eval_velocity(x), pure.eval_velocity(x));
        let expect = vec3::norm(mat3::matvec(
            mat3::scale(kernels::r_st(x), r * r),
            ff,
        ));
        assert!((diff - expect).abs() < 1e-14 * expect.max(1e-300));
        assert!(diff > 0.0);
    }

    #[test]
    fn distant_stokes_pair_nearly_isolated() {
        let r = 0.002;
        let cfg = config(vec![[0.0; 3], [0.4, 0.0, 0.0]], r);
        let g = SourceField::single_stokes([1.0, 0.0, 0.0], [0.0, 0.0, 1.0], 0.3);
        let sol = solve_dirichlet_stokes(&cfg, &g, MicroOptions::default()).unwrap();
        let f = match &sol.strengths {
            Strengths::Forces(f) => f.clone(),
            _ => unreachable!(),
        };
        for (i, &c) in cfg.centers.iter().enumerate() {
            let isolated = vec3::scale(g.stokes_velocity(c), -6.0 * PI * r);
            assert!(
                vec3::dist(f[i], isolated) < 0.05 * vec3::norm(isolated),
                "ball {i}"
            );
        }
    }

    #[test]
    fn single_conductor_polarizability() {
        let r = 0.1;
        let cfg = config(vec![[0.0; 3]], r);
        let g = SourceField::single_scalar(1.0, [1.5, 0.0, 0.0], 0.2);
        let sol = solve_conductor(&cfg, &g).unwrap();
        let e = g.grad_potential([0.0; 3]);
        let p = match &sol.strengths {
            Strengths::Dipoles(p) => p[0],
            _ => unreachable!(),
        };
        let expect = vec3::scale(e, 4.0 * PI * r * r * r);
        assert!(vec3::dist(p, expect) <= 1e-12 * vec3::norm(expect));
    }

    #[test]
    fn conductor_zero_gradient_gives_zero_dipoles() {
        let r = 0.1;
        let cfg = config(vec![[0.0; 3]], r);
        let g = SourceField::single_scalar(0.0, [1.5, 0.0, 0.0], 0.2);
        let sol = solve_conductor(&cfg, &g).unwrap();
        match &sol.strengths {
            Strengths::Dipoles(p) => assert!(p.iter().all(|&v| vec3::norm(v) == 0.0)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn conductor_pair_coupling_signs() {
        // Aligned with the applied gradient the dipoles reinforce;
        // perpendicular they are reduced. Oracle: 2x2 block solve by hand
        // from the ∇V formula.
        let r = 0.05;
        let d = 0.25;
        let sep = [d, 0.0, 0.0];
        let alpha = 4.0 * PI * r * r * r;
        // background with nearly uniform gradient along x at the pair
        let g = SourceField::single_scalar(1.0, [6.0, 0.0, 0.0], 0.5);
        let e_mag = vec3::norm(g.grad_potential([0.0; 3]));

        let cfg_aligned = config(vec![[0.0; 3], sep], r);
        let sol = solve_conductor(&cfg_aligned, &g).unwrap();
        let p = match &sol.strengths {
            Strengths::Dipoles(p) => p.clone(),
            _ => unreachable!(),
        };
        let isolated = alpha * e_mag;
        assert!(
            p[0][0].abs() > isolated * 1.001,
            "aligned coupling must enhance: {} vs {}",
            p[0][0].abs(),
            isolated
        );
        // hand 2x2 solve: along the axis, ∇V(d e₁) e₁ = (2/4πd³) e₁
        let k = alpha * 2.0 / (4.0 * PI * d * d * d);
        let e_here = g.grad_potential([0.0; 3])[0];
        let hand = alpha * e_here / (1.0 - k);
        let rel = ((p[0][0] - hand) / hand).abs();
        assert!(rel < 0.05, "hand solve rel diff {rel}");

        let cfg_perp = config(vec![[0.0; 3], [0.0, d, 0.0]], r);
        let sol = solve_conductor(&cfg_perp, &g).unwrap();
        let p_perp = match &sol.strengths {
            Strengths::Dipoles(p) => p.clone(),
            _ => unreachable!(),
        };
        assert!(
            p_perp[0][0].abs() < isolated,
            "perpendicular coupling must reduce"
        );
    }

    #[test]
    fn strengths_linear_in_source() {
        let cfg = config(vec![[0.0; 3], [0.3, 0.1, 0.0], [-0.1, 0.25, 0.2]], 0.03);
        let g1 = SourceField::single_scalar(1.0, [1.0, 0.0, 0.0], 0.3);
        let g2 = SourceField::single_scalar(-0.5, [0.0, 1.2, 0.0], 0.25);
        let g12 = SourceField::Scalar {
            bumps: vec![
                ScalarBump {
                    amplitude: 1.0,
                    center: [1.0, 0.0, 0.0],
                    sigma: 0.3,
                },
                ScalarBump {
                    amplitude: -0.5,
                    center: [0.0, 1.2, 0.0],
                    sigma: 0.25,
                },
            ],
        };
        let q = |src: &SourceField| -> Vec<f64> {
            match solve_dirichlet_laplace(&cfg, src, MicroOptions::default())
                .unwrap()
                .strengths
            {
                Strengths::Charges(q) => q,
                _ => unreachable!(),
            }
        };
        let (a, b, ab) = (q(&g1), q(&g2), q(&g12));
        for i in 0..3 {
            assert!((a[i] + b[i] - ab[i]).abs() < 1e-10 * ab[i].abs().max(1e-12));
        }
    }

    #[test]
    fn rotation_equivariance_of_forces() {
        let r = 0.05;
        let centers = vec![[0.0; 3], [0.4, 0.1, 0.0], [0.1, -0.3, 0.3]];
        let rot = mat3::rotation(vec3::normalize([0.3, 1.0, 0.2]), 1.1);
        let g = SourceField::single_stokes([1.0, 0.2, -0.1], [0.0, 0.0, 1.0], 0.3);
        let g_rot = SourceField::single_stokes(
            mat3::matvec(rot, [1.0, 0.2, -0.1]),
            mat3::matvec(rot, [0.0, 0.0, 1.0]),
            0.3,
        );
        let cfg = config(centers.clone(), r);
        let cfg_rot = config(centers.iter().map(|&c| mat3::matvec(rot, c)).collect(), r);
        let f = match solve_dirichlet_stokes(&cfg, &g, MicroOptions::default())
            .unwrap()
            .strengths
        {
            Strengths::Forces(f) => f,
            _ => unreachable!(),
        };
        let f_rot = match solve_dirichlet_stokes(&cfg_rot, &g_rot, MicroOptions::default())
            .unwrap()
            .strengths
        {
            Strengths::Forces(f) => f,
            _ => unreachable!(),
        };
        for i in 0..3 {
            let expect = mat3::matvec(rot, f[i]);
            assert!(
                vec3::dist(f_rot[i], expect) < 1e-10 * vec3::norm(expect).max(1e-12),
                "ball {i}"
            );
        }
    }

    #[test]
    fn reflections_matches_direct_solve() {
        let r = 0.01;
        let centers = vec![
            [0.0; 3],
            [0.3, 0.0, 0.0],
            [0.0, 0.35, 0.0],
            [0.0, 0.0, 0.4],
            [0.25, 0.25, 0.25],
        ];
        let cfg = config(centers, r);
        let g = SourceField::single_scalar(1.0, [0.1, 0.1, 1.2], 0.3);
        let direct = solve_dirichlet_laplace(&cfg, &g, MicroOptions::default()).unwrap();
        let refl = solve_dirichlet_laplace(
            &cfg,
            &g,
            MicroOptions {
                method: SolveMethod::Reflections { tol: 1e-8 },
                ..Default::default()
            },
        )
        .unwrap();
        let (qd, qr) = match (&direct.strengths, &refl.strengths) {
            (Strengths::Charges(a), Strengths::Charges(b)) => (a.clone(), b.clone()),
            _ => unreachable!(),
        };
        for i in 0..qd.len() {
            assert!((qd[i] - qr[i]).abs() < 1e-6 * qd[i].abs().max(1e-12), "ball {i}");
        }
    }

    #[test]
    fn overlap_is_rejected_with_pair_named() {
        let cfg = config(vec![[0.0; 3], [0.05, 0.0, 0.0]], 0.05);
        let g = SourceField::single_scalar(1.0, [1.0, 0.0, 0.0], 0.2);
        match solve_dirichlet_laplace(&cfg, &g, MicroOptions::default()) {
            Err(MicroError::OverlappingPair { i, j, .. }) => assert_eq!((i, j), (0, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn laplace_matrix_is_symmetric_and_stokes_mobility_spd() {
        let cfg = config(vec![[0.0; 3], [0.2, 0.0, 0.0], [0.0, 0.22, 0.1]], 0.02);
        // symmetry of the Laplace collocation matrix is structural:
        let n = cfg.n;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let gij = kernels::g(vec3::sub(cfg.centers[i], cfg.centers[j]));
                    let gji = kernels::g(vec3::sub(cfg.centers[j], cfg.centers[i]));
                    assert_eq!(gij.to_bits(), gji.to_bits());
                }
            }
        }
        // SPD: the direct solve path uses Cholesky and must succeed
        let g = SourceField::single_stokes([1.0, 0.0, 0.0], [0.0, 0.0, 1.0], 0.3);
        solve_dirichlet_stokes(&cfg, &g, MicroOptions::default()).unwrap();
    }
}
