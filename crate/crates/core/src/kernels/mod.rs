//! Green kernels of `-Δ` and `-PΔ`, their truncated single-sphere variants,
//! and closed-form gradients.
//!
//! Conventions: `G(x) = 1/(4π|x|)`,
//! `G_St(x) = (1/8π)(I/|x| + x⊗x/|x|³)`,
//! `R_St(x) = (1/8π)(I/(3|x|³) − x⊗x/|x|⁵)`,
//! `V(x) = ∇G(x) = −x/(4π|x|³)`.
//!
//! The truncated kernels agree with the free-space ones for `|x| ≥ 1` and
//! are capped inside the unit ball so that `4π𝒢(n·)`, `6π𝒢_St(n·)` and the
//! rescaled `𝒱` are the exact exterior solutions of the single grounded /
//! no-slip / conducting sphere.
//!
//! Gradients of matrix kernels are taken componentwise; norms over such
//! rank-3 values are Frobenius norms.

mod closed;
pub mod octree;
pub mod sum;

pub use closed::*;
pub use sum::{kernel_sum, Exclusion, SumMethod};

use crate::mat3::{self, Mat3};
use crate::vec3::{self, Vec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rank-3 tensor `T[k][i][j]` holding `∂_k K_ij` of a matrix kernel.
pub type Tensor3 = [Mat3; 3];

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel {0:?} is singular at the origin")]
    SingularAtOrigin(KernelId),
    #[error("coincident target {target} and source {source_index} on a singular kernel")]
    CoincidentPoint { target: usize, source_index: usize },
    #[error("weights length {weights} does not match sources length {sources}")]
    WeightMismatch { weights: usize, sources: usize },
    #[error("tree opening parameter theta={0} outside (0, 1)")]
    BadTheta(f64),
}

/// Identifiers for the kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelId {
    /// `1/(4π|x|)`
    G,
    /// `∇G`
    GradG,
    /// `V = ∇G` (the dipole kernel of the conductor problem)
    V,
    /// `∇V = ∇∇G`
    GradV,
    /// Stokeslet
    GSt,
    /// componentwise `∇G_St`
    GradGSt,
    /// degenerate quadrupole companion of the Stokeslet
    RSt,
    /// componentwise `∇R_St`
    GradRSt,
    /// truncated `𝒢`
    TruncG,
    /// truncated `𝒢_St`
    TruncGSt,
    /// truncated `𝒱`
    TruncV,
    /// bare `1/|x|`
    InvR,
    /// `x⊗x/|x|³`
    XxR3,
}

impl KernelId {
    /// Truncated kernels stay finite at the origin.
    pub fn singular(self) -> bool {
        !matches!(self, KernelId::TruncG | KernelId::TruncGSt | KernelId::TruncV)
    }
}

/// Value of a kernel evaluation; arity depends on the kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelValue {
    Scalar(f64),
    Vector(Vec3),
    Matrix(Mat3),
    Rank3(Tensor3),
}

impl KernelValue {
    pub fn as_scalar(&self) -> f64 {
        match self {
            KernelValue::Scalar(v) => *v,
            _ => panic!("kernel value is not scalar"),
        }
    }

    pub fn as_vector(&self) -> Vec3 {
        match self {
            KernelValue::Vector(v) => *v,
            _ => panic!("kernel value is not a vector"),
        }
    }

    pub fn as_matrix(&self) -> Mat3 {
        match self {
            KernelValue::Matrix(v) => *v,
            _ => panic!("kernel value is not a matrix"),
        }
    }

    /// Euclidean / Frobenius norm of the value.
    pub fn norm(&self) -> f64 {
        match self {
            KernelValue::Scalar(v) => v.abs(),
            KernelValue::Vector(v) => vec3::norm(*v),
            KernelValue::Matrix(m) => mat3::frobenius(*m),
            KernelValue::Rank3(t) => {
                (t.iter().map(|m| mat3::frobenius(*m).powi(2)).sum::<f64>()).sqrt()
            }
        }
    }
}

/// Evaluate a kernel at `x`.
///
/// Singular kernels reject `x = 0`; truncated kernels accept any argument.
pub fn eval(id: KernelId, x: Vec3) -> Result<KernelValue, KernelError> {
    if id.singular() && vec3::norm2(x) == 0.0 {
        return Err(KernelError::SingularAtOrigin(id));
    }
    Ok(eval_unchecked(id, x))
}

pub(crate) fn eval_unchecked(id: KernelId, x: Vec3) -> KernelValue {
    match id {
        KernelId::G => KernelValue::Scalar(g(x)),
        KernelId::GradG | KernelId::V => KernelValue::Vector(grad_g(x)),
        KernelId::GradV => KernelValue::Matrix(grad_v(x)),
        KernelId::GSt => KernelValue::Matrix(g_st(x)),
        KernelId::GradGSt => KernelValue::Rank3(grad_g_st(x)),
        KernelId::RSt => KernelValue::Matrix(r_st(x)),
        KernelId::GradRSt => KernelValue::Rank3(grad_r_st(x)),
        KernelId::TruncG => KernelValue::Scalar(trunc_g(x)),
        KernelId::TruncGSt => KernelValue::Matrix(trunc_g_st(x)),
        KernelId::TruncV => KernelValue::Vector(trunc_v(x)),
        KernelId::InvR => KernelValue::Scalar(1.0 / vec3::norm(x)),
        KernelId::XxR3 => KernelValue::Matrix(xx_r3(x)),
    }
}

/// Directional derivative `(d·∇)K(x)`, used for the treecode dipole term.
pub(crate) fn dir_grad(id: KernelId, x: Vec3, d: Vec3) -> KernelValue {
    match id {
        KernelId::G => KernelValue::Scalar(vec3::dot(grad_g(x), d)),
        KernelId::InvR => {
            let r2 = vec3::norm2(x);
            KernelValue::Scalar(-vec3::dot(x, d) / (r2 * r2.sqrt()))
        }
        KernelId::GradG | KernelId::V => KernelValue::Vector(mat3::matvec(grad_v(x), d)),
        KernelId::GradV => KernelValue::Matrix(dir_grad_grad_v(x, d)),
        KernelId::GSt => KernelValue::Matrix(dir_grad_g_st(x, d)),
        KernelId::RSt => KernelValue::Matrix(dir_grad_r_st(x, d)),
        KernelId::XxR3 => KernelValue::Matrix(dir_grad_xx_r3(x, d)),
        KernelId::GradGSt => KernelValue::Rank3(dir_grad_grad_g_st(x, d)),
        KernelId::GradRSt => KernelValue::Rank3(dir_grad_grad_r_st(x, d)),
        // The truncated kernels are only summed directly (corrector
        // evaluation); keep the far-field form for completeness.
        KernelId::TruncG => {
            if vec3::norm(x) >= 1.0 {
                KernelValue::Scalar(vec3::dot(grad_g(x), d))
            } else {
                KernelValue::Scalar(0.0)
            }
        }
        KernelId::TruncV => {
            if vec3::norm(x) >= 1.0 {
                KernelValue::Vector(mat3::matvec(grad_v(x), d))
            } else {
                KernelValue::Vector(vec3::scale(d, -1.0 / (4.0 * std::f64::consts::PI)))
            }
        }
        KernelId::TruncGSt => {
            if vec3::norm(x) >= 1.0 {
                KernelValue::Matrix(mat3::add(dir_grad_g_st(x, d), dir_grad_r_st(x, d)))
            } else {
                KernelValue::Matrix(mat3::ZERO)
            }
        }
    }
}

/// `½ Q : ∇∇K(x)` for the scalar kernels, the cheap form of the treecode
/// quadrupole term.
pub(crate) fn quad_contract_scalar(id: KernelId, x: Vec3, q: &Mat3) -> Option<f64> {
    let scale = match id {
        KernelId::G => 1.0,
        KernelId::InvR => 4.0 * std::f64::consts::PI,
        _ => return None,
    };
    let h = grad_v(x);
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            acc += q[i][j] * h[i][j];
        }
    }
    Some(0.5 * scale * acc)
}

/// Second directional derivative `(v·∇)²K(x)` for the kernels that carry a
/// treecode quadrupole correction; `None` for the rest.
pub(crate) fn dir2_grad(id: KernelId, x: Vec3, v: Vec3) -> Option<KernelValue> {
    match id {
        KernelId::G => Some(KernelValue::Scalar(vec3::dot(
            v,
            mat3::matvec(grad_v(x), v),
        ))),
        KernelId::InvR => Some(KernelValue::Scalar(
            4.0 * std::f64::consts::PI * vec3::dot(v, mat3::matvec(grad_v(x), v)),
        )),
        KernelId::GradG | KernelId::V => Some(KernelValue::Vector(mat3::matvec(
            dir_grad_grad_v(x, v),
            v,
        ))),
        KernelId::GSt => {
            let t = dir_grad_grad_g_st(x, v);
            Some(KernelValue::Matrix(contract_rank3(&t, v)))
        }
        KernelId::RSt => {
            let t = dir_grad_grad_r_st(x, v);
            Some(KernelValue::Matrix(contract_rank3(&t, v)))
        }
        KernelId::XxR3 => {
            // x⊗x/|x|³ = 8π G_St − I/|x|
            let t = dir_grad_grad_g_st(x, v);
            let gst2 = contract_rank3(&t, v);
            let inv2 = 4.0 * std::f64::consts::PI * vec3::dot(v, mat3::matvec(grad_v(x), v));
            let mut out = mat3::scale(gst2, 8.0 * std::f64::consts::PI);
            for i in 0..3 {
                out[i][i] -= inv2;
            }
            Some(KernelValue::Matrix(out))
        }
        _ => None,
    }
}

fn contract_rank3(t: &Tensor3, v: Vec3) -> Mat3 {
    let mut out = mat3::ZERO;
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] += v[k] * t[k][i][j];
            }
        }
    }
    out
}

/// Discrepancies from `finite_difference_check`.
#[derive(Debug, Clone, Copy)]
pub struct FdCheck {
    /// `max |numeric ∇ − closed-form ∇|` over components.
    pub grad_mismatch: f64,
    /// For `G_St`: max over rows of `|Σ_j ∂_j K_ij|` (numeric).
    pub row_divergence: Option<f64>,
    /// For `G_St`: `max(|K(x)−K(−x)|, |K(x)−K(x)ᵀ|)` componentwise.
    pub symmetry_defect: Option<f64>,
}

/// Validate the hand-differentiated gradients by central differences at `x`
/// with step `h` (requires `|x| > 2h`).
pub fn finite_difference_check(id: KernelId, x: Vec3, h: f64) -> Result<FdCheck, KernelError> {
    assert!(vec3::norm(x) > 2.0 * h, "finite differences need |x| > 2h");
    let grad_id = match id {
        KernelId::G | KernelId::InvR => KernelId::GradG,
        KernelId::V | KernelId::GradG => KernelId::GradV,
        KernelId::GSt => KernelId::GradGSt,
        KernelId::RSt => KernelId::GradRSt,
        other => other,
    };
    let mut grad_mismatch = 0.0f64;
    let scale = if id == KernelId::InvR {
        4.0 * std::f64::consts::PI
    } else {
        1.0
    };
    for k in 0..3 {
        let mut xp = x;
        let mut xm = x;
        xp[k] += h;
        xm[k] -= h;
        let fp = eval(id, xp)?;
        let fm = eval(id, xm)?;
        let numeric = numeric_diff(&fp, &fm, 2.0 * h, 1.0 / scale);
        let closed = component_k(&eval(grad_id, x)?, k);
        for (a, b) in numeric.iter().zip(closed.iter()) {
            grad_mismatch = grad_mismatch.max((a - b).abs());
        }
    }

    let (row_divergence, symmetry_defect) = if id == KernelId::GSt {
        let mut div = [0.0f64; 3];
        for k in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let mp = g_st(xp);
            let mm = g_st(xm);
            for i in 0..3 {
                div[i] += (mp[i][k] - mm[i][k]) / (2.0 * h);
            }
        }
        let m = g_st(x);
        let mneg = g_st(vec3::scale(x, -1.0));
        let mt = mat3::transpose(m);
        let mut sym = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                sym = sym.max((m[i][j] - mneg[i][j]).abs());
                sym = sym.max((m[i][j] - mt[i][j]).abs());
            }
        }
        (
            Some(div.iter().fold(0.0f64, |a, b| a.max(b.abs()))),
            Some(sym),
        )
    } else {
        (None, None)
    };

    Ok(FdCheck {
        grad_mismatch,
        row_divergence,
        symmetry_defect,
    })
}

/// Flatten the k-th derivative slot of a gradient value to a comparable list.
fn component_k(v: &KernelValue, k: usize) -> Vec<f64> {
    match v {
        KernelValue::Vector(g) => vec![g[k]],
        KernelValue::Matrix(m) => vec![m[0][k], m[1][k], m[2][k]],
        KernelValue::Rank3(t) => t[k].iter().flatten().copied().collect(),
        KernelValue::Scalar(_) => unreachable!("no scalar gradient kernels"),
    }
}

fn numeric_diff(fp: &KernelValue, fm: &KernelValue, denom: f64, scale: f64) -> Vec<f64> {
    let flat = |v: &KernelValue| -> Vec<f64> {
        match v {
            KernelValue::Scalar(s) => vec![*s],
            KernelValue::Vector(g) => g.to_vec(),
            KernelValue::Matrix(m) => m.iter().flatten().copied().collect(),
            KernelValue::Rank3(t) => t.iter().flat_map(|m| m.iter().flatten().copied()).collect(),
        }
    };
    flat(fp)
        .into_iter()
        .zip(flat(fm))
        .map(|(a, b)| (a - b) / denom * scale)
        .collect()
}
