//! Limit densities ρ and their Newtonian / Oseen potentials.
//!
//! All densities carry unit mass. Uniform balls have fully closed-form
//! potentials (Newton's theorem); uniform boxes use the prism closed forms
//! from [`crate::boxint`]; radial profiles evaluate Newton's shell formula
//! with exact piecewise-polynomial integration, falling back to 1D
//! quadrature for the biharmonic radial function that feeds the Stokes
//! potential.

use super::{Domain, GeometryError};
use crate::boxint;
use crate::mat3::{self, Mat3};
use crate::vec3::{self, Vec3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const FOUR_PI: f64 = 4.0 * PI;
const EIGHT_PI: f64 = 8.0 * PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Density {
    UniformBall {
        center: Vec3,
        radius: f64,
    },
    UniformBox {
        lo: Vec3,
        hi: Vec3,
    },
    /// Piecewise-linear radial profile `(r, value)` with monotone radii
    /// starting at `r = 0`; must integrate to unit mass.
    RadialProfile {
        center: Vec3,
        table: Vec<(f64, f64)>,
    },
}

impl Density {
    pub fn unit_ball() -> Density {
        Density::UniformBall {
            center: [0.0; 3],
            radius: 1.0,
        }
    }

    pub fn unit_cube() -> Density {
        Density::UniformBox {
            lo: [-0.5, -0.5, -0.5],
            hi: [0.5, 0.5, 0.5],
        }
    }

    /// Uniform density over the given carrier.
    pub fn uniform_over(domain: &Domain) -> Density {
        match domain {
            Domain::Box { lo, hi } => Density::UniformBox { lo: *lo, hi: *hi },
            Domain::Ball { center, radius } => Density::UniformBall {
                center: *center,
                radius: *radius,
            },
        }
    }

    pub fn support(&self) -> Domain {
        match self {
            Density::UniformBall { center, radius } => Domain::Ball {
                center: *center,
                radius: *radius,
            },
            Density::UniformBox { lo, hi } => Domain::Box { lo: *lo, hi: *hi },
            Density::RadialProfile { center, table } => Domain::Ball {
                center: *center,
                radius: table.last().map(|t| t.0).unwrap_or(0.0),
            },
        }
    }

    pub fn value(&self, x: Vec3) -> f64 {
        match self {
            Density::UniformBall { center, radius } => {
                if vec3::dist(x, *center) <= *radius {
                    1.0 / (FOUR_PI / 3.0 * radius.powi(3))
                } else {
                    0.0
                }
            }
            Density::UniformBox { lo, hi } => {
                let inside = (0..3).all(|d| x[d] >= lo[d] && x[d] <= hi[d]);
                if inside {
                    1.0 / self.support().volume()
                } else {
                    0.0
                }
            }
            Density::RadialProfile { center, table } => {
                profile_value(table, vec3::dist(x, *center))
            }
        }
    }

    /// Pointwise supremum.
    pub fn sup(&self) -> f64 {
        match self {
            Density::UniformBall { radius, .. } => 1.0 / (FOUR_PI / 3.0 * radius.powi(3)),
            Density::UniformBox { .. } => 1.0 / self.support().volume(),
            Density::RadialProfile { table, .. } => {
                table.iter().map(|t| t.1).fold(0.0f64, f64::max)
            }
        }
    }

    /// Total mass, evaluated by exact (piecewise-)analytic quadrature.
    pub fn mass(&self) -> f64 {
        match self {
            Density::UniformBall { .. } | Density::UniformBox { .. } => 1.0,
            Density::RadialProfile { table, .. } => {
                FOUR_PI * profile_moment(table, 2, 0.0, table.last().map(|t| t.0).unwrap_or(0.0))
            }
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        self.support().validate()?;
        if let Density::RadialProfile { table, .. } = self {
            if table.len() < 2 {
                return Err(GeometryError::BadDensity(
                    "radial profile needs at least two rows".into(),
                ));
            }
            if table[0].0 != 0.0 {
                return Err(GeometryError::BadDensity(
                    "radial profile must start at r = 0".into(),
                ));
            }
            if table.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(GeometryError::BadDensity(
                    "radial profile radii must be strictly increasing".into(),
                ));
            }
            if table.iter().any(|t| t.1 < 0.0) {
                return Err(GeometryError::BadDensity(
                    "radial profile values must be nonnegative".into(),
                ));
            }
        }
        let mass = self.mass();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(GeometryError::BadMass(mass));
        }
        Ok(())
    }

    /// Rescale a radial profile to unit mass.
    pub fn normalized(self) -> Density {
        match self {
            Density::RadialProfile { center, table } => {
                let m = FOUR_PI
                    * profile_moment(&table, 2, 0.0, table.last().map(|t| t.0).unwrap_or(0.0));
                Density::RadialProfile {
                    center,
                    table: table.into_iter().map(|(r, v)| (r, v / m)).collect(),
                }
            }
            other => other,
        }
    }

    /// `(G ⋆ ρ)(x)` with `G = 1/(4π|x|)`.
    pub fn potential(&self, x: Vec3) -> f64 {
        match self {
            Density::UniformBall { center, radius } => {
                let r = vec3::dist(x, *center);
                if r >= *radius {
                    1.0 / (FOUR_PI * r)
                } else {
                    (3.0 * radius * radius - r * r) / (EIGHT_PI * radius.powi(3))
                }
            }
            Density::UniformBox { lo, hi } => {
                let rho = 1.0 / self.support().volume();
                rho * boxint::inv_r(vec3::sub(*lo, x), vec3::sub(*hi, x)) / FOUR_PI
            }
            Density::RadialProfile { center, table } => {
                let r = vec3::dist(x, *center);
                let rmax = table.last().unwrap().0;
                if r == 0.0 {
                    return profile_moment(table, 1, 0.0, rmax);
                }
                profile_moment(table, 2, 0.0, r.min(rmax)) / r
                    + profile_moment(table, 1, r.min(rmax), rmax)
            }
        }
    }

    /// `∫ ρ(y)/|x−y| dy = 4π (G ⋆ ρ)(x)`.
    pub fn inv_r_potential(&self, x: Vec3) -> f64 {
        FOUR_PI * self.potential(x)
    }

    /// `∇(G ⋆ ρ)(x)`.
    pub fn grad_potential(&self, x: Vec3) -> Vec3 {
        match self {
            Density::UniformBall { center, radius } => {
                let d = vec3::sub(x, *center);
                let r = vec3::norm(d);
                if r == 0.0 {
                    return [0.0; 3];
                }
                let slope = if r >= *radius {
                    -1.0 / (FOUR_PI * r * r)
                } else {
                    -r / (FOUR_PI * radius.powi(3))
                };
                vec3::scale(d, slope / r)
            }
            Density::UniformBox { lo, hi } => {
                let rho = 1.0 / self.support().volume();
                vec3::scale(
                    boxint::z_over_r3(vec3::sub(*lo, x), vec3::sub(*hi, x)),
                    rho / FOUR_PI,
                )
            }
            Density::RadialProfile { center, table } => {
                let d = vec3::sub(x, *center);
                let r = vec3::norm(d);
                if r == 0.0 {
                    return [0.0; 3];
                }
                let rmax = table.last().unwrap().0;
                let slope = -profile_moment(table, 2, 0.0, r.min(rmax)) / (r * r);
                vec3::scale(d, slope / r)
            }
        }
    }

    /// `W(x) = ∫ (x−y)⊗(x−y)/|x−y|³ ρ(y) dy`; satisfies
    /// `tr W = ∫ ρ/|x−y|`.
    pub fn xx_potential(&self, x: Vec3) -> Mat3 {
        match self {
            Density::UniformBox { lo, hi } => {
                let rho = 1.0 / self.support().volume();
                mat3::scale(
                    boxint::zz_over_r3(vec3::sub(*lo, x), vec3::sub(*hi, x)),
                    rho,
                )
            }
            _ => {
                let center = self.radial_center();
                let d = vec3::sub(x, center);
                let r = vec3::norm(d);
                let tau = self.inv_r_potential(x);
                let (bp, bpp) = self.biharmonic_derivatives(r);
                if r < 1e-12 {
                    // B'(r)/r → B''(0); the anisotropic part vanishes.
                    return mat3::scaled_identity(tau - bpp);
                }
                let xhat = vec3::scale(d, 1.0 / r);
                let alpha = tau - bp / r;
                let beta = bp / r - bpp;
                mat3::add(
                    mat3::scaled_identity(alpha),
                    mat3::scale(mat3::outer(xhat, xhat), beta),
                )
            }
        }
    }

    /// `(G_St ⋆ ρ)(x) = (G⋆ρ)(x)/2 · I + W(x)/(8π)`.
    pub fn stokes_potential(&self, x: Vec3) -> Mat3 {
        let pot = self.potential(x);
        mat3::add(
            mat3::scaled_identity(0.5 * pot),
            mat3::scale(self.xx_potential(x), 1.0 / EIGHT_PI),
        )
    }

    /// Translate the support by `t`.
    pub fn translated(&self, t: Vec3) -> Density {
        match self {
            Density::UniformBall { center, radius } => Density::UniformBall {
                center: vec3::add(*center, t),
                radius: *radius,
            },
            Density::UniformBox { lo, hi } => Density::UniformBox {
                lo: vec3::add(*lo, t),
                hi: vec3::add(*hi, t),
            },
            Density::RadialProfile { center, table } => Density::RadialProfile {
                center: vec3::add(*center, t),
                table: table.clone(),
            },
        }
    }

    fn radial_center(&self) -> Vec3 {
        match self {
            Density::UniformBall { center, .. } | Density::RadialProfile { center, .. } => *center,
            Density::UniformBox { lo, hi } => vec3::scale(vec3::add(*lo, *hi), 0.5),
        }
    }

    /// First and second derivatives of `B = |·| ⋆ ρ` at radius `r`
    /// (radial densities only).
    fn biharmonic_derivatives(&self, r: f64) -> (f64, f64) {
        match self {
            Density::UniformBall { radius, .. } => {
                let s = r / radius;
                if s >= 1.0 {
                    (1.0 - 0.2 / (s * s), 0.4 / (s * s * s) / radius)
                } else {
                    (s - 0.2 * s * s * s, (1.0 - 0.6 * s * s) / radius)
                }
            }
            Density::RadialProfile { .. } => {
                // B'(r) = (1/r²) ∫₀ʳ s² m(s) ds with m = 8π (G⋆ρ),
                // B''(r) = m(r) − 2 B'(r)/r.
                let center = self.radial_center();
                let m = |s: f64| EIGHT_PI * self.potential(vec3::add(center, [s, 0.0, 0.0]));
                if r < 1e-12 {
                    return (0.0, m(0.0) / 3.0);
                }
                let integral = simpson(|s| s * s * m(s), 0.0, r, 512);
                let bp = integral / (r * r);
                (bp, m(r) - 2.0 * bp / r)
            }
            Density::UniformBox { .. } => unreachable!("box densities use prism closed forms"),
        }
    }
}

fn profile_value(table: &[(f64, f64)], r: f64) -> f64 {
    if table.is_empty() || r > table.last().unwrap().0 {
        return 0.0;
    }
    for w in table.windows(2) {
        let (r0, v0) = w[0];
        let (r1, v1) = w[1];
        if r <= r1 {
            if r1 == r0 {
                return v1;
            }
            return v0 + (v1 - v0) * (r - r0) / (r1 - r0);
        }
    }
    table.last().unwrap().1
}

/// Exact `∫_a^b s^k ρ(s) ds` for the piecewise-linear profile, `k ∈ {1,2}`.
fn profile_moment(table: &[(f64, f64)], k: u32, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut total = 0.0;
    for w in table.windows(2) {
        let (r0, v0) = w[0];
        let (r1, v1) = w[1];
        let lo = a.max(r0);
        let hi = b.min(r1);
        if hi <= lo {
            continue;
        }
        // rho(s) = alpha + beta s on the segment
        let beta = (v1 - v0) / (r1 - r0);
        let alpha = v0 - beta * r0;
        let kp1 = (k + 1) as f64;
        let kp2 = (k + 2) as f64;
        let anti = |s: f64| alpha * s.powf(kp1) / kp1 + beta * s.powf(kp2) / kp2;
        total += anti(hi) - anti(lo);
    }
    total
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(2) & !1usize;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_potential_of_unit_ball() {
        let rho = Density::unit_ball();
        assert!((rho.potential([0.0; 3]) - 3.0 / (EIGHT_PI)).abs() < 1e-14);
        assert!((rho.potential([2.0, 0.0, 0.0]) - 1.0 / (EIGHT_PI)).abs() < 1e-14);
        // far field carries unit mass
        let far = [90.0, 40.0, 10.0];
        let v = rho.potential(far);
        assert!((v * FOUR_PI * vec3::norm(far) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn gradient_vanishes_at_center_and_matches_fd() {
        for rho in [Density::unit_ball(), Density::unit_cube()] {
            let g0 = rho.grad_potential(rho.support().center());
            assert!(vec3::norm(g0) < 1e-12, "{rho:?}");
            let x = [0.31, -0.12, 0.55];
            let h = 1e-6;
            for k in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[k] += h;
                xm[k] -= h;
                let fd = (rho.potential(xp) - rho.potential(xm)) / (2.0 * h);
                assert!(
                    (fd - rho.grad_potential(x)[k]).abs() < 1e-8,
                    "{rho:?} component {k}"
                );
            }
        }
    }

    #[test]
    fn potential_is_harmonic_outside_support() {
        let rho = Density::unit_ball();
        let x = [2.0, 0.0, 0.0];
        let h = 1e-3;
        let mut lap = -6.0 * rho.potential(x);
        for k in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            lap += rho.potential(xp) + rho.potential(xm);
        }
        lap /= h * h;
        assert!(lap.abs() < 1e-4, "laplacian {lap}");
    }

    #[test]
    fn stokes_potential_isotropic_at_center() {
        let rho = Density::unit_ball();
        let m = rho.stokes_potential([0.0; 3]);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(m[i][j].abs() < 1e-12);
                }
            }
        }
        // c = 1/(4π) for the unit ball
        assert!((m[0][0] - 1.0 / FOUR_PI).abs() < 1e-12);
    }

    #[test]
    fn xx_potential_trace_identity() {
        for rho in [Density::unit_ball(), Density::unit_cube()] {
            for x in [[0.2, 0.1, -0.3], [1.5, 0.2, 0.4]] {
                let w = rho.xx_potential(x);
                let tr = mat3::trace(w);
                let expect = rho.inv_r_potential(x);
                assert!(
                    (tr - expect).abs() < 1e-10 * expect.abs(),
                    "{rho:?} at {x:?}: {tr} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn radial_profile_reproduces_uniform_ball() {
        let uniform = Density::unit_ball();
        let v = 3.0 / FOUR_PI;
        let profile = Density::RadialProfile {
            center: [0.0; 3],
            table: vec![(0.0, v), (0.5, v), (1.0, v)],
        };
        profile.validate().unwrap();
        for x in [[0.0; 3], [0.3, 0.2, 0.1], [0.9, 0.0, 0.0], [2.0, 1.0, 0.5]] {
            assert!((profile.potential(x) - uniform.potential(x)).abs() < 1e-12);
            assert!(
                vec3::dist(profile.grad_potential(x), uniform.grad_potential(x)) < 1e-12,
                "grad at {x:?}"
            );
            let wp = profile.xx_potential(x);
            let wu = uniform.xx_potential(x);
            assert!(mat3::frobenius(mat3::sub(wp, wu)) < 1e-7, "W at {x:?}");
        }
    }

    #[test]
    fn profile_normalization_and_validation() {
        let raw = Density::RadialProfile {
            center: [0.0; 3],
            table: vec![(0.0, 2.0), (0.5, 1.0), (1.0, 0.0)],
        };
        assert!(raw.validate().is_err());
        let rho = raw.normalized();
        rho.validate().unwrap();
        assert!((rho.mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mass_checked_by_midpoint_quadrature() {
        let rho = Density::unit_cube();
        let n = 40;
        let h = 1.0 / n as f64;
        let mut m = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let x = [
                        -0.5 + (i as f64 + 0.5) * h,
                        -0.5 + (j as f64 + 0.5) * h,
                        -0.5 + (k as f64 + 0.5) * h,
                    ];
                    m += rho.value(x) * h * h * h;
                }
            }
        }
        assert!((m - 1.0).abs() < 1e-10);
    }
}
