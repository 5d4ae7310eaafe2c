//! The explicit correctors built from truncated single-sphere kernels minus
//! the density potential. Their smallness as the cloud grows encodes the
//! negligible sphere interaction behind the effective limits.

use crate::geometry::{Configuration, Density, Scaling};
use crate::hypotheses::TestField;
use crate::kernels;
use crate::mat3::{self, Mat3};
use crate::vec3::{self, Vec3};
use std::f64::consts::PI;

/// Scalar corrector `Φ_n¹(x) = 4π Σ_i 𝒢(n(x−x_i)) − 4π (G⋆ρ)(x)`
/// (reflexive scaling; pass `None` for ρ = 0).
pub fn phi1_laplace(config: &Configuration, rho: Option<&Density>, x: Vec3) -> f64 {
    let n = config.n as f64;
    let mut v = 0.0;
    for &c in &config.centers {
        v += 4.0 * PI * kernels::trunc_g(vec3::scale(vec3::sub(x, c), n));
    }
    if let Some(rho) = rho {
        v -= 4.0 * PI * rho.potential(x);
    }
    v
}

/// Matrix corrector `Φ_n¹(x) = 6π Σ_i 𝒢_St(n(x−x_i)) − 6π (G_St⋆ρ)(x)`.
pub fn phi1_stokes(config: &Configuration, rho: Option<&Density>, x: Vec3) -> Mat3 {
    let n = config.n as f64;
    let mut v = mat3::ZERO;
    for &c in &config.centers {
        v = mat3::add(
            v,
            mat3::scale(kernels::trunc_g_st(vec3::scale(vec3::sub(x, c), n)), 6.0 * PI),
        );
    }
    if let Some(rho) = rho {
        v = mat3::sub(v, mat3::scale(rho.stokes_potential(x), 6.0 * PI));
    }
    v
}

/// Conductor corrector
/// `φ_n¹(x) = 3λ|K_ρ| (V ⋆ ρ∇φ)(x) − 4π r_n Σ_i ∇φ(x_i)·𝒱((x−x_i)/r_n)`.
///
/// The convolution is evaluated by a midpoint grid over the support of ρ
/// (`cells³`), with the exact prism integral of `V` on cells near `x`.
pub fn phi1_conductor(
    config: &Configuration,
    rho: &Density,
    field: &TestField,
    x: Vec3,
    cells: usize,
) -> f64 {
    let lambda = match config.scaling {
        Scaling::Fraction { lambda } => lambda,
        // the corrector is defined at fixed volume fraction; fall back to
        // the configuration's actual fraction otherwise
        _ => config.volume_fraction(rho.support().volume()),
    };
    let kvol = rho.support().volume();
    let conv = v_convolution(rho, field, x, cells);
    let mut sum = 0.0;
    let r = config.radius;
    for &c in &config.centers {
        let arg = vec3::scale(vec3::sub(x, c), 1.0 / r);
        sum += vec3::dot(field.grad(c), kernels::trunc_v(arg));
    }
    3.0 * lambda * kvol * conv - 4.0 * PI * r * sum
}

/// `(V ⋆ ρ∇φ)(x)` by midpoint quadrature with exact near-cell prisms.
fn v_convolution(rho: &Density, field: &TestField, x: Vec3, cells: usize) -> f64 {
    let (lo, hi) = rho.support().bounding_box();
    let m = cells.max(8);
    let h = [
        (hi[0] - lo[0]) / m as f64,
        (hi[1] - lo[1]) / m as f64,
        (hi[2] - lo[2]) / m as f64,
    ];
    let vol = h[0] * h[1] * h[2];
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let y = [
                    lo[0] + (i as f64 + 0.5) * h[0],
                    lo[1] + (j as f64 + 0.5) * h[1],
                    lo[2] + (k as f64 + 0.5) * h[2],
                ];
                let w = rho.value(y);
                if w == 0.0 {
                    continue;
                }
                let gphi = vec3::scale(field.grad(y), w);
                let d = vec3::sub(x, y);
                let near = vec3::norm_inf(d) <= 3.0 * h[0].max(h[1]).max(h[2]);
                let kernel = if near {
                    // exact ∫_cell V(x−y') dy' = (1/4π) ∫_cell z/|z|³ dz
                    let a = [
                        y[0] - 0.5 * h[0] - x[0],
                        y[1] - 0.5 * h[1] - x[1],
                        y[2] - 0.5 * h[2] - x[2],
                    ];
                    let b = [
                        y[0] + 0.5 * h[0] - x[0],
                        y[1] + 0.5 * h[1] - x[1],
                        y[2] + 0.5 * h[2] - x[2],
                    ];
                    vec3::scale(crate::boxint::z_over_r3(a, b), 1.0 / (4.0 * PI))
                } else {
                    vec3::scale(kernels::grad_g(d), vol)
                };
                acc += vec3::dot(kernel, gphi);
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_periodic, Domain, GeneratorTag};

    #[test]
    fn single_sphere_without_density_is_the_capacitor_solution() {
        let cfg = Configuration {
            n: 1,
            radius: 1.0,
            scaling: Scaling::Reflexive,
            generator: GeneratorTag::Manual,
            seed: 0,
            centers: vec![[0.0; 3]],
        };
        // outside: Φ = 4π G(x) = 1/|x| = r_n/|x−x₁| with r_n = 1
        for x in [[2.0, 0.0, 0.0], [0.0, 3.0, 1.0]] {
            let v = phi1_laplace(&cfg, None, x);
            assert!((v - 1.0 / vec3::norm(x)).abs() < 1e-14);
        }
        // inside: capped at 1
        assert!((phi1_laplace(&cfg, None, [0.2, 0.1, 0.0]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn deep_inside_ball_matches_display_identity() {
        let cfg = generate_periodic(3, &Domain::unit_cube(), Scaling::Reflexive).unwrap();
        let rho = Density::unit_cube();
        let i = 13; // middle ball of the 3x3x3 lattice
        let x = cfg.centers[i]; // the center is deep inside B_i
        let n = cfg.n as f64;
        let lhs = phi1_laplace(&cfg, Some(&rho), x);
        let mut sum = 0.0;
        for (j, &c) in cfg.centers.iter().enumerate() {
            if j != i {
                sum += kernels::g(vec3::sub(x, c));
            }
        }
        let rhs = 1.0 + 4.0 * PI / n * sum - 4.0 * PI * rho.potential(x);
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn weighted_average_decays_along_periodic_sweep() {
        // ⟨Φ_n¹, bump⟩ → 0 under (H0)
        let rho = Density::unit_cube();
        let bump = |x: Vec3| {
            let r2 = vec3::norm2(x) / 0.09;
            if r2 < 1.0 {
                (1.0 - r2).powi(2)
            } else {
                0.0
            }
        };
        let mut prev = f64::INFINITY;
        for m in [3usize, 5, 7] {
            let cfg = generate_periodic(m, &Domain::unit_cube(), Scaling::Reflexive).unwrap();
            // midpoint average over a small grid near the origin
            let g = 12;
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for i in 0..g {
                for j in 0..g {
                    for k in 0..g {
                        let x = [
                            -0.3 + 0.6 * (i as f64 + 0.5) / g as f64,
                            -0.3 + 0.6 * (j as f64 + 0.5) / g as f64,
                            -0.3 + 0.6 * (k as f64 + 0.5) / g as f64,
                        ];
                        let w = bump(x);
                        if w > 0.0 {
                            acc += w * phi1_laplace(&cfg, Some(&rho), x);
                            wsum += w;
                        }
                    }
                }
            }
            let avg = (acc / wsum).abs();
            assert!(avg < prev, "m={m}: {avg} !< {prev}");
            prev = avg;
        }
    }

    #[test]
    fn conductor_corrector_matches_the_closed_form_convolution() {
        // For a linear field ∇φ = e, V ⋆ (ρ∇φ) = ∇(G⋆ρ)·e has a closed
        // form; the midpoint quadrature must reproduce it.
        let lambda = 0.01;
        let rho = Density::unit_ball();
        let kvol = rho.support().volume();
        let r = Scaling::Fraction { lambda }.radius_for(2, kvol);
        let cfg = Configuration {
            n: 2,
            radius: r,
            scaling: Scaling::Fraction { lambda },
            generator: GeneratorTag::Manual,
            seed: 0,
            centers: vec![[-0.5, 0.0, 0.0], [0.5, 0.0, 0.0]],
        };
        let field = TestField::Linear {
            grad: [1.0, 0.0, 0.0],
        };
        for x in [[0.2, 0.1, 0.0], [1.4, 0.0, 0.3]] {
            let got = phi1_conductor(&cfg, &rho, &field, x, 48);
            let conv = rho.grad_potential(x)[0];
            let mut sum = 0.0;
            for &c in &cfg.centers {
                let arg = vec3::scale(vec3::sub(x, c), 1.0 / r);
                sum += vec3::dot(field.grad(c), kernels::trunc_v(arg));
            }
            let expect = 3.0 * lambda * kvol * conv - 4.0 * PI * r * sum;
            assert!(
                (got - expect).abs() < 2e-3 * expect.abs().max(1e-4),
                "at {x:?}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn stokes_corrector_single_sphere_is_exact() {
        let cfg = Configuration {
            n: 1,
            radius: 1.0,
            scaling: Scaling::Reflexive,
            generator: GeneratorTag::Manual,
            seed: 0,
            centers: vec![[0.0; 3]],
        };
        let x = [0.3, 0.2, 0.0];
        let m = phi1_stokes(&cfg, None, x);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((m[i][j] - expect).abs() < 1e-14);
            }
        }
    }
}
