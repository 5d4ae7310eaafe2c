//! Radial finite-difference solver for the screened Poisson limit
//! `−Δu + 4πρu = g` with radially symmetric data, used as the independent
//! cross-check of the volume-potential solver.

use super::MacroError;
use crate::geometry::Density;
use crate::microsolver::SourceField;
use crate::vec3::{self, Vec3};
use serde::{Deserialize, Serialize};

/// Radial solution profile with harmonic decay `u ≈ A/r` beyond the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub center: Vec3,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    /// Decay coefficient of the matched far field `A/r`.
    pub far_coeff: f64,
}

impl RadialProfile {
    pub fn eval_radius(&self, r: f64) -> f64 {
        let rmax = *self.r.last().unwrap();
        if r >= rmax {
            return self.far_coeff / r;
        }
        let h = self.r[1] - self.r[0];
        let k = ((r / h).floor() as usize).min(self.r.len() - 2);
        let t = (r - self.r[k]) / h;
        self.u[k] * (1.0 - t) + self.u[k + 1] * t
    }

    pub fn eval(&self, x: Vec3) -> f64 {
        self.eval_radius(vec3::dist(x, self.center))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RadialParams {
    pub r_max: f64,
    /// Number of intervals.
    pub m: usize,
}

/// Solve `−(r²u′)′/r² + 4πρu = g` on `[0, r_max]` with `u′(0) = 0` and the
/// harmonic matching condition `u′(R) = −u(R)/R`.
pub fn solve_strange_radial(
    rho: Option<&Density>,
    g: &SourceField,
    params: RadialParams,
) -> Result<RadialProfile, MacroError> {
    if !g.is_scalar() {
        return Err(MacroError::Precondition(
            "radial solver needs a scalar source".into(),
        ));
    }
    let center = g
        .radial_about()
        .ok_or_else(|| MacroError::NotRadial("source bumps share no common center".into()))?;
    if let Some(rho) = rho {
        let rho_center = match rho {
            Density::UniformBall { center, .. } | Density::RadialProfile { center, .. } => *center,
            Density::UniformBox { .. } => {
                return Err(MacroError::NotRadial("box density is not radial".into()))
            }
        };
        if vec3::dist(rho_center, center) > 0.0 {
            return Err(MacroError::NotRadial(
                "density and source centers differ".into(),
            ));
        }
        let support_radius = match rho {
            Density::UniformBall { radius, .. } => *radius,
            Density::RadialProfile { table, .. } => table.last().map(|t| t.0).unwrap_or(0.0),
            Density::UniformBox { .. } => unreachable!(),
        };
        if params.r_max < support_radius {
            return Err(MacroError::DomainTooSmall {
                r_max: params.r_max,
                needed: support_radius,
            });
        }
    }
    let g_reach = g.effective_support_radius() - vec3::norm(center);
    if params.r_max < g_reach {
        return Err(MacroError::DomainTooSmall {
            r_max: params.r_max,
            needed: g_reach,
        });
    }

    let m = params.m.max(8);
    let h = params.r_max / m as f64;
    // Cell-averaged coefficient: keeps second order when ρ has jumps
    // (uniform-ball edges) that fall inside a cell.
    let rho_at = |r: f64| -> f64 {
        match rho {
            None => 0.0,
            Some(d) => {
                let sub = 32;
                let mut acc = 0.0;
                for q in 0..sub {
                    let s_ = (r - 0.5 * h + (q as f64 + 0.5) * h / sub as f64).max(0.0);
                    acc += d.value(vec3::add(center, [s_, 0.0, 0.0]));
                }
                acc / sub as f64
            }
        }
    };
    let g_at = |r: f64| -> f64 { g.value(vec3::add(center, [r, 0.0, 0.0])) };

    // Substitute v = r·u: the equation becomes −v″ + 4πρ v = r g with
    // v(0) = 0, and the harmonic matching u′(R) = −u(R)/R turns into the
    // plain Neumann condition v′(R) = 0. Unknowns are v₁..v_m.
    let n = m;
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for k in 1..=m {
        let i = k - 1;
        let r = k as f64 * h;
        let c = 4.0 * std::f64::consts::PI * rho_at(r);
        if k < m {
            lower[i] = -1.0 / (h * h);
            upper[i] = -1.0 / (h * h);
            diag[i] = 2.0 / (h * h) + c;
        } else {
            // ghost elimination of v′(R) = 0: v_{m+1} = v_{m−1}
            lower[i] = -2.0 / (h * h);
            diag[i] = 2.0 / (h * h) + c;
        }
        rhs[i] = r * g_at(r);
    }
    // Thomas algorithm
    let mut c_star = vec![0.0; n];
    let mut d_star = vec![0.0; n];
    c_star[0] = upper[0] / diag[0];
    d_star[0] = rhs[0] / diag[0];
    for k in 1..n {
        let denom = diag[k] - lower[k] * c_star[k - 1];
        c_star[k] = if k < n - 1 { upper[k] / denom } else { 0.0 };
        d_star[k] = (rhs[k] - lower[k] * d_star[k - 1]) / denom;
    }
    let mut v = vec![0.0; n];
    v[n - 1] = d_star[n - 1];
    for k in (0..n - 1).rev() {
        v[k] = d_star[k] - c_star[k] * v[k + 1];
    }
    let mut u = vec![0.0; m + 1];
    for k in 1..=m {
        u[k] = v[k - 1] / (k as f64 * h);
    }
    // symmetric extrapolation u(r) = u₀ + c r² near the origin
    u[0] = (4.0 * u[1] - u[2]) / 3.0;
    let r_grid: Vec<f64> = (0..=m).map(|k| k as f64 * h).collect();
    let far_coeff = u[m] * params.r_max;
    Ok(RadialProfile {
        center,
        r: r_grid,
        u,
        far_coeff,
    })
}
