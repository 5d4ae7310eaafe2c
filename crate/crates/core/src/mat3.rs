//! Row-major 3x3 matrix helpers.

use crate::vec3::Vec3;

pub type Mat3 = [[f64; 3]; 3];

pub const ZERO: Mat3 = [[0.0; 3]; 3];

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[inline]
pub fn add(a: Mat3, b: Mat3) -> Mat3 {
    let mut out = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][j] + b[i][j];
        }
    }
    out
}

#[inline]
pub fn sub(a: Mat3, b: Mat3) -> Mat3 {
    let mut out = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][j] - b[i][j];
        }
    }
    out
}

#[inline]
pub fn scale(a: Mat3, s: f64) -> Mat3 {
    let mut out = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][j] * s;
        }
    }
    out
}

#[inline]
pub fn scaled_identity(s: f64) -> Mat3 {
    [[s, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, s]]
}

/// Outer product `a ⊗ b`.
#[inline]
pub fn outer(a: Vec3, b: Vec3) -> Mat3 {
    let mut out = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i] * b[j];
        }
    }
    out
}

#[inline]
pub fn matvec(m: Mat3, v: Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

#[inline]
pub fn transpose(m: Mat3) -> Mat3 {
    let mut out = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[j][i];
        }
    }
    out
}

#[inline]
pub fn trace(m: Mat3) -> f64 {
    m[0][0] + m[1][1] + m[2][2]
}

#[inline]
pub fn frobenius(m: Mat3) -> f64 {
    let mut s = 0.0;
    for row in &m {
        for v in row {
            s += v * v;
        }
    }
    s.sqrt()
}

/// Apply a rotation `R m Rᵀ`.
pub fn conjugate(r: Mat3, m: Mat3) -> Mat3 {
    let mut rm = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                rm[i][j] += r[i][k] * m[k][j];
            }
        }
    }
    let mut out = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                out[i][j] += rm[i][k] * r[j][k];
            }
        }
    }
    out
}

/// Rotation matrix about the given unit axis.
pub fn rotation(axis: Vec3, angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    let [x, y, z] = axis;
    let omc = 1.0 - c;
    [
        [c + x * x * omc, x * y * omc - z * s, x * z * omc + y * s],
        [y * x * omc + z * s, c + y * y * omc, y * z * omc - x * s],
        [z * x * omc - y * s, z * y * omc + x * s, c + z * z * omc],
    ]
}

/// Eigendecomposition of a symmetric matrix by Jacobi rotations.
/// Returns (eigenvalues, eigenvectors as columns).
pub fn sym_eigen(m: Mat3) -> (Vec3, Mat3) {
    let mut a = m;
    let mut v = IDENTITY;
    for _ in 0..32 {
        // largest off-diagonal element
        let (mut p, mut q, mut off) = (0usize, 1usize, a[0][1].abs());
        if a[0][2].abs() > off {
            p = 0;
            q = 2;
            off = a[0][2].abs();
        }
        if a[1][2].abs() > off {
            p = 1;
            q = 2;
            off = a[1][2].abs();
        }
        if off < 1e-15 * (trace(a).abs().max(1.0)) {
            break;
        }
        let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
        let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
        let c = 1.0 / (t * t + 1.0).sqrt();
        let s = t * c;
        let mut rot = IDENTITY;
        rot[p][p] = c;
        rot[q][q] = c;
        rot[p][q] = s;
        rot[q][p] = -s;
        // a = rotᵀ a rot
        let mut tmp = ZERO;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    tmp[i][j] += rot[k][i] * a[k][j];
                }
            }
        }
        let mut next = ZERO;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    next[i][j] += tmp[i][k] * rot[k][j];
                }
            }
        }
        a = next;
        let mut vn = ZERO;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    vn[i][j] += v[i][k] * rot[k][j];
                }
            }
        }
        v = vn;
    }
    ([a[0][0], a[1][1], a[2][2]], v)
}
