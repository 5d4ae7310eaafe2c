//! Cross-solver checks: the radial and volume-potential discretizations as
//! mutual oracles, micro/macro consistency at desk scale, and the
//! dilution behaviour of collocation residuals.

use effmed_core::geometry::{generate_periodic, Density, Domain, Scaling};
use effmed_core::macrosolver::{
    solve_strange_radial, solve_volume_potential, GridParams, IterParams, MacroModel,
    RadialParams,
};
use effmed_core::microsolver::{
    boundary_residual, solve_dirichlet_laplace, MicroOptions, SourceField,
};
use effmed_core::{vec3, Vec3};

fn fibonacci_sphere(count: usize, radius: f64) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    (0..count)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - y * y).sqrt();
            let t = golden * i as f64;
            [radius * r * t.cos(), radius * y, radius * r * t.sin()]
        })
        .collect()
}

#[test]
fn radial_and_volume_solvers_agree() {
    let rho = Density::unit_ball();
    let g = SourceField::single_scalar(1.0, [0.0; 3], 0.3);
    let radial = solve_strange_radial(
        Some(&rho),
        &g,
        RadialParams {
            r_max: 4.0,
            m: 4000,
        },
    )
    .unwrap();
    let volume = solve_volume_potential(
        MacroModel::Strange,
        &rho,
        &g,
        GridParams {
            cells: 80,
            margin: 0.15,
        },
        IterParams::default(),
    )
    .unwrap();
    let probes = fibonacci_sphere(128, 1.5);
    let mut num = 0.0;
    let mut den = 0.0;
    for &p in &probes {
        let a = radial.eval(p);
        let b = volume.eval(p).as_scalar();
        num += (a - b) * (a - b);
        den += a * a;
    }
    let rel_rms = (num / den).sqrt();
    println!("radial-vs-volume relative RMS: {rel_rms:.3e}");
    assert!(rel_rms <= 1e-3, "relative RMS {rel_rms}");
}

#[test]
fn collocation_residual_decreases_with_dilution() {
    // periodic sweep at the critical law r_n = 1/n
    let g = SourceField::single_scalar(1.0, [0.0, 0.0, 0.9], 0.35);
    let mut prev = f64::INFINITY;
    for m in [3usize, 5, 7] {
        let cfg = generate_periodic(m, &Domain::unit_cube(), Scaling::Reflexive).unwrap();
        let sol = solve_dirichlet_laplace(&cfg, &g, MicroOptions::default()).unwrap();
        let res = boundary_residual(&sol);
        assert!(res.max < prev, "m={m}: {} !< {prev}", res.max);
        prev = res.max;
    }
}

#[test]
fn single_ball_laplace_residual_is_first_order_in_the_radius() {
    // residual ~ |∇u₀| r for center collocation, reported not thresholded
    let g = SourceField::single_scalar(1.0, [0.0, 0.0, 1.0], 0.3);
    let grad = vec3::norm(g.grad_potential([0.0; 3]));
    for r in [0.05, 0.025] {
        let cfg = effmed_core::geometry::Configuration {
            n: 1,
            radius: r,
            scaling: Scaling::Power {
                coeff: r,
                exponent: 0.0,
            },
            generator: effmed_core::geometry::GeneratorTag::Manual,
            seed: 0,
            centers: vec![[0.0; 3]],
        };
        let sol = solve_dirichlet_laplace(&cfg, &g, MicroOptions::default()).unwrap();
        let res = boundary_residual(&sol);
        assert!(
            res.max <= 3.0 * grad * r,
            "r={r}: residual {} vs bound {}",
            res.max,
            3.0 * grad * r
        );
    }
}

#[test]
fn conductor_flux_defect_is_reported_small() {
    let g = SourceField::single_scalar(1.0, [0.0, 0.0, 0.6], 0.3);
    let cfg = effmed_core::geometry::Configuration {
        n: 2,
        radius: 0.05,
        scaling: Scaling::Power {
            coeff: 0.05,
            exponent: 0.0,
        },
        generator: effmed_core::geometry::GeneratorTag::Manual,
        seed: 0,
        centers: vec![[0.0; 3], [0.3, 0.0, 0.0]],
    };
    let sol = effmed_core::microsolver::solve_conductor(&cfg, &g).unwrap();
    let res = boundary_residual(&sol);
    let defects = res.flux_defect.expect("conductor reports flux defects");
    // cubature vs closed-form ball mass of a smooth Gaussian: tiny
    for d in &defects {
        assert!(*d < 1e-6, "flux defect {d}");
    }
}

#[test]
fn reflections_diverges_on_a_packed_cluster_and_reports_it() {
    // 27 nearly touching balls: the Jacobi sweep must detect divergence
    let r = 0.04;
    let spacing = 2.3 * r;
    let mut centers = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                centers.push([
                    (i as f64 - 1.0) * spacing,
                    (j as f64 - 1.0) * spacing,
                    (k as f64 - 1.0) * spacing,
                ]);
            }
        }
    }
    let cfg = effmed_core::geometry::Configuration {
        n: centers.len(),
        radius: r,
        scaling: Scaling::Power {
            coeff: r,
            exponent: 0.0,
        },
        generator: effmed_core::geometry::GeneratorTag::Manual,
        seed: 0,
        centers,
    };
    let g = SourceField::single_scalar(1.0, [0.0, 0.0, 0.8], 0.3);
    let err = solve_dirichlet_laplace(
        &cfg,
        &g,
        MicroOptions {
            method: effmed_core::microsolver::SolveMethod::Reflections { tol: 1e-8 },
            ..Default::default()
        },
    )
    .unwrap_err();
    match err {
        effmed_core::microsolver::MicroError::ReflectionsDiverged { .. }
        | effmed_core::microsolver::MicroError::ReflectionsStalled { .. } => {}
        other => panic!("unexpected {other:?}"),
    }
    // the direct path still solves it
    let direct = solve_dirichlet_laplace(&cfg, &g, MicroOptions::default()).unwrap();
    assert!(direct.diagnostics.linear_residual < 1e-10);
}

#[test]
fn permittivity_expansion_matches_variable_coefficient_oracle() {
    // Independent oracle: radial FD solve of −(r²(1+ερ)u′)′/r² = g for the
    // uniform-ball coefficient, compared with u₀ + ε·correction.
    let rho = Density::unit_ball();
    let g = SourceField::single_scalar(1.0, [0.0; 3], 0.3);
    let lambda = 0.02;
    let eps = 3.0 * lambda * rho.support().volume(); // 3λ|K_ρ|

    // variable-coefficient tridiagonal solve in v = r·u with coefficient
    // a(r) = 1 + ερ(r): −(a v′)′ + (a′/r) v = r g (derived from
    // −(r² a u′)′/r² = g with u = v/r)
    let m = 6000usize;
    let r_max = 4.0;
    let h = r_max / m as f64;
    let a_mid = |k: usize| -> f64 {
        let r = (k as f64 + 0.5) * h;
        1.0 + eps * rho.value([r, 0.0, 0.0])
    };
    let a_prime_over_r = |k: usize| -> f64 {
        // ρ is a step: represent a′ by the centered difference of the
        // cell-averaged coefficient
        let r = k as f64 * h;
        let ap = 1.0 + eps * rho.value([r + 0.5 * h, 0.0, 0.0]);
        let am = 1.0 + eps * rho.value([(r - 0.5 * h).max(0.0), 0.0, 0.0]);
        (ap - am) / (h * r.max(0.5 * h))
    };
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for k in 1..=m {
        let i = k - 1;
        let r = k as f64 * h;
        let (ap, am) = (a_mid(k), a_mid(k - 1));
        if k < m {
            lower[i] = -am / (h * h);
            upper[i] = -ap / (h * h);
            diag[i] = (ap + am) / (h * h) + a_prime_over_r(k);
        } else {
            lower[i] = -(ap + am) / (h * h);
            diag[i] = (ap + am) / (h * h) + a_prime_over_r(k);
        }
        rhs[i] = r * g.value([r, 0.0, 0.0]);
    }
    let mut c_star = vec![0.0; m];
    let mut d_star = vec![0.0; m];
    c_star[0] = upper[0] / diag[0];
    d_star[0] = rhs[0] / diag[0];
    for k in 1..m {
        let denom = diag[k] - lower[k] * c_star[k - 1];
        c_star[k] = if k < m - 1 { upper[k] / denom } else { 0.0 };
        d_star[k] = (rhs[k] - lower[k] * d_star[k - 1]) / denom;
    }
    let mut v = vec![0.0; m];
    v[m - 1] = d_star[m - 1];
    for k in (0..m - 1).rev() {
        v[k] = d_star[k] - c_star[k] * v[k + 1];
    }
    let oracle_at = |r: f64| -> f64 {
        let k = ((r / h).round() as usize).clamp(1, m);
        v[k - 1] / (k as f64 * h)
    };

    let field = solve_volume_potential(
        MacroModel::Permittivity { lambda },
        &rho,
        &g,
        GridParams {
            cells: 40,
            margin: 0.1,
        },
        IterParams::default(),
    )
    .unwrap();
    for r in [0.3, 0.6] {
        let x = [r, 0.0, 0.0];
        let ours = field.eval(x).as_scalar();
        let oracle = oracle_at(r);
        let u0 = g.potential(x);
        // first-order expansion: the discrepancy must be well below the
        // correction itself (O(λ²) + grid error), and the SIGNED
        // corrections must agree
        let corr_ours = ours - u0;
        let corr_oracle = oracle - u0;
        assert!(
            corr_ours.signum() == corr_oracle.signum(),
            "sign mismatch at r={r}"
        );
        assert!(
            (corr_ours - corr_oracle).abs() < 0.25 * corr_oracle.abs(),
            "r={r}: correction {corr_ours} vs oracle {corr_oracle}"
        );
    }
    // outside the inclusions the exact exterior field carries the full
    // source monopole, so both corrections must be near zero there
    let x = [1.5, 0.0, 0.0];
    let u0 = g.potential(x);
    assert!((field.eval(x).as_scalar() - u0).abs() < 0.01 * u0.abs());
    assert!((oracle_at(1.5) - u0).abs() < 0.01 * u0.abs());
}
