//! Closed-form kernel evaluations and their hand-differentiated gradients.

use crate::mat3::{self, Mat3};
use crate::vec3::{self, Vec3};
use std::f64::consts::PI;

use super::Tensor3;

const FOUR_PI: f64 = 4.0 * PI;
const EIGHT_PI: f64 = 8.0 * PI;

#[inline]
pub fn g(x: Vec3) -> f64 {
    1.0 / (FOUR_PI * vec3::norm(x))
}

/// `∇G(x) = V(x) = −x/(4π|x|³)`.
#[inline]
pub fn grad_g(x: Vec3) -> Vec3 {
    let r2 = vec3::norm2(x);
    let r3 = r2 * r2.sqrt();
    vec3::scale(x, -1.0 / (FOUR_PI * r3))
}

/// Hessian of `G`: `∇V(x) = (3 x⊗x/|x|² − I)/(4π|x|³)`.
#[inline]
pub fn grad_v(x: Vec3) -> Mat3 {
    let r2 = vec3::norm2(x);
    let r = r2.sqrt();
    let r3 = r2 * r;
    let r5 = r3 * r2;
    let mut out = mat3::scale(mat3::outer(x, x), 3.0 / (FOUR_PI * r5));
    for i in 0..3 {
        out[i][i] -= 1.0 / (FOUR_PI * r3);
    }
    out
}

/// Stokeslet `G_St(x) = (1/8π)(I/|x| + x⊗x/|x|³)`.
#[inline]
pub fn g_st(x: Vec3) -> Mat3 {
    let r2 = vec3::norm2(x);
    let r = r2.sqrt();
    let r3 = r2 * r;
    let mut out = mat3::scale(mat3::outer(x, x), 1.0 / (EIGHT_PI * r3));
    for i in 0..3 {
        out[i][i] += 1.0 / (EIGHT_PI * r);
    }
    out
}

/// `R_St(x) = (1/8π)(I/(3|x|³) − x⊗x/|x|⁵)`.
#[inline]
pub fn r_st(x: Vec3) -> Mat3 {
    let r2 = vec3::norm2(x);
    let r = r2.sqrt();
    let r3 = r2 * r;
    let r5 = r3 * r2;
    let mut out = mat3::scale(mat3::outer(x, x), -1.0 / (EIGHT_PI * r5));
    for i in 0..3 {
        out[i][i] += 1.0 / (3.0 * EIGHT_PI * r3);
    }
    out
}

/// `x⊗x/|x|³` (the kernel of the sharp Stokes separation functional).
#[inline]
pub fn xx_r3(x: Vec3) -> Mat3 {
    let r2 = vec3::norm2(x);
    let r3 = r2 * r2.sqrt();
    mat3::scale(mat3::outer(x, x), 1.0 / r3)
}

/// `𝒢(x)`: `G` outside the unit ball, constant `1/4π` inside.
#[inline]
pub fn trunc_g(x: Vec3) -> f64 {
    if vec3::norm2(x) >= 1.0 {
        g(x)
    } else {
        1.0 / FOUR_PI
    }
}

/// `𝒢_St(x)`: `G_St + R_St` outside the unit ball, `I/6π` inside.
#[inline]
pub fn trunc_g_st(x: Vec3) -> Mat3 {
    if vec3::norm2(x) >= 1.0 {
        mat3::add(g_st(x), r_st(x))
    } else {
        mat3::scaled_identity(1.0 / (6.0 * PI))
    }
}

/// `𝒱(x)`: `V` outside the unit ball, `−x/4π` inside.
#[inline]
pub fn trunc_v(x: Vec3) -> Vec3 {
    if vec3::norm2(x) >= 1.0 {
        grad_g(x)
    } else {
        vec3::scale(x, -1.0 / FOUR_PI)
    }
}

/// `∂_k (G_St)_ij`, laid out as `T[k][i][j]`.
pub fn grad_g_st(x: Vec3) -> Tensor3 {
    let r2 = vec3::norm2(x);
    let r = r2.sqrt();
    let r3 = r2 * r;
    let r5 = r3 * r2;
    let mut t = [mat3::ZERO; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut v = 0.0;
                if i == j {
                    v -= x[k] / r3;
                }
                if i == k {
                    v += x[j] / r3;
                }
                if j == k {
                    v += x[i] / r3;
                }
                v -= 3.0 * x[i] * x[j] * x[k] / r5;
                t[k][i][j] = v / EIGHT_PI;
            }
        }
    }
    t
}

/// `∂_k (R_St)_ij`, laid out as `T[k][i][j]`.
pub fn grad_r_st(x: Vec3) -> Tensor3 {
    let r2 = vec3::norm2(x);
    let r = r2.sqrt();
    let r5 = r2 * r2 * r;
    let r7 = r5 * r2;
    let mut t = [mat3::ZERO; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut v = 0.0;
                if i == j {
                    v -= x[k] / r5;
                }
                if i == k {
                    v -= x[j] / r5;
                }
                if j == k {
                    v -= x[i] / r5;
                }
                v += 5.0 * x[i] * x[j] * x[k] / r7;
                t[k][i][j] = v / EIGHT_PI;
            }
        }
    }
    t
}

/// `(d·∇)∇V`, the third derivative of `G` contracted once.
pub fn dir_grad_grad_v(x: Vec3, d: Vec3) -> Mat3 {
    let r2 = vec3::norm2(x);
    let r = r2.sqrt();
    let r5 = r2 * r2 * r;
    let r7 = r5 * r2;
    let xd = vec3::dot(x, d);
    let mut out = mat3::add(
        mat3::add(mat3::outer(d, x), mat3::outer(x, d)),
        mat3::scaled_identity(xd),
    );
    out = mat3::scale(out, 3.0 / r5);
    let quad = mat3::scale(mat3::outer(x, x), 15.0 * xd / r7);
    mat3::scale(mat3::sub(out, quad), 1.0 / FOUR_PI)
}

/// `(d·∇)G_St`.
pub fn dir_grad_g_st(x: Vec3, d: Vec3) -> Mat3 {
    let r2 = vec3::norm2(x);
    let r = r2.sqrt();
    let r3 = r2 * r;
    let r5 = r3 * r2;
    let xd = vec3::dot(x, d);
    let mut out = mat3::add(mat3::outer(d, x), mat3::outer(x, d));
    out = mat3::add(out, mat3::scaled_identity(-xd));
    out = mat3::scale(out, 1.0 / r3);
    let quad = mat3::scale(mat3::outer(x, x), 3.0 * xd / r5);
    mat3::scale(mat3::sub(out, quad), 1.0 / EIGHT_PI)
}

/// `(d·∇)R_St`.
pub fn dir_grad_r_st(x: Vec3, d: Vec3) -> Mat3 {
    let r2 = vec3::norm2(x);
    let r = r2.sqrt();
    let r5 = r2 * r2 * r;
    let r7 = r5 * r2;
    let xd = vec3::dot(x, d);
    let mut out = mat3::add(mat3::outer(d, x), mat3::outer(x, d));
    out = mat3::add(out, mat3::scaled_identity(xd));
    out = mat3::scale(out, -1.0 / r5);
    let quad = mat3::scale(mat3::outer(x, x), 5.0 * xd / r7);
    mat3::scale(mat3::add(out, quad), 1.0 / EIGHT_PI)
}

/// `(d·∇)(x⊗x/|x|³)`.
pub fn dir_grad_xx_r3(x: Vec3, d: Vec3) -> Mat3 {
    let r2 = vec3::norm2(x);
    let r = r2.sqrt();
    let r3 = r2 * r;
    let r5 = r3 * r2;
    let xd = vec3::dot(x, d);
    let sym = mat3::scale(mat3::add(mat3::outer(d, x), mat3::outer(x, d)), 1.0 / r3);
    let quad = mat3::scale(mat3::outer(x, x), 3.0 * xd / r5);
    mat3::sub(sym, quad)
}

/// `(d·∇)∇G_St` laid out as `T[k][i][j]`.
pub fn dir_grad_grad_g_st(x: Vec3, d: Vec3) -> Tensor3 {
    let r2 = vec3::norm2(x);
    let r = r2.sqrt();
    let r3 = r2 * r;
    let r5 = r3 * r2;
    let r7 = r5 * r2;
    let xd = vec3::dot(x, d);
    let mut t = [mat3::ZERO; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut v = 0.0;
                if i == j {
                    v += -d[k] / r3 + 3.0 * x[k] * xd / r5;
                }
                if i == k {
                    v += d[j] / r3 - 3.0 * x[j] * xd / r5;
                }
                if j == k {
                    v += d[i] / r3 - 3.0 * x[i] * xd / r5;
                }
                v -= 3.0 * (d[i] * x[j] * x[k] + d[j] * x[i] * x[k] + d[k] * x[i] * x[j]) / r5;
                v += 15.0 * x[i] * x[j] * x[k] * xd / r7;
                t[k][i][j] = v / EIGHT_PI;
            }
        }
    }
    t
}

/// `(d·∇)∇R_St` laid out as `T[k][i][j]`.
pub fn dir_grad_grad_r_st(x: Vec3, d: Vec3) -> Tensor3 {
    let r2 = vec3::norm2(x);
    let r = r2.sqrt();
    let r5 = r2 * r2 * r;
    let r7 = r5 * r2;
    let r9 = r7 * r2;
    let xd = vec3::dot(x, d);
    let mut t = [mat3::ZERO; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut v = 0.0;
                if i == j {
                    v += -d[k] / r5 + 5.0 * x[k] * xd / r7;
                }
                if i == k {
                    v += -d[j] / r5 + 5.0 * x[j] * xd / r7;
                }
                if j == k {
                    v += -d[i] / r5 + 5.0 * x[i] * xd / r7;
                }
                v += 5.0 * (d[i] * x[j] * x[k] + d[j] * x[i] * x[k] + d[k] * x[i] * x[j]) / r7;
                v -= 35.0 * x[i] * x[j] * x[k] * xd / r9;
                t[k][i][j] = v / EIGHT_PI;
            }
        }
    }
    t
}
