//! Closed-form integrals of Newtonian-type kernels over axis-aligned boxes.
//!
//! These are the standard log/arctan antiderivatives used for prism
//! potentials. All integrals are over `z` in the box `[a, b]` (componentwise
//! `a < b`), and remain valid when the box contains the origin: the
//! integrands `1/|z|`, `z/|z|³` and `z⊗z/|z|³` are absolutely integrable.

use crate::mat3::Mat3;
use crate::vec3::Vec3;

/// Triple antiderivative of `1/|z|`, i.e. `∂³F/∂x∂y∂z = 1/r`.
fn f1(x: f64, y: f64, z: f64) -> f64 {
    let r = (x * x + y * y + z * z).sqrt();
    let mut t = 0.0;
    if x != 0.0 && y != 0.0 {
        t += x * y * (z + r).ln();
    }
    if y != 0.0 && z != 0.0 {
        t += y * z * (x + r).ln();
    }
    if z != 0.0 && x != 0.0 {
        t += z * x * (y + r).ln();
    }
    if x != 0.0 && r != 0.0 {
        t -= 0.5 * x * x * (y * z / (x * r)).atan();
    }
    if y != 0.0 && r != 0.0 {
        t -= 0.5 * y * y * (z * x / (y * r)).atan();
    }
    if z != 0.0 && r != 0.0 {
        t -= 0.5 * z * z * (x * y / (z * r)).atan();
    }
    t
}

/// 2D antiderivative of `1/sqrt(u² + v² + c²)` in `u` and `v`.
fn f2(u: f64, v: f64, c: f64) -> f64 {
    let r = (u * u + v * v + c * c).sqrt();
    let mut t = 0.0;
    if u != 0.0 && v + r > 0.0 {
        t += u * (v + r).ln();
    }
    if v != 0.0 && u + r > 0.0 {
        t += v * (u + r).ln();
    }
    if c != 0.0 && r != 0.0 {
        t -= c * (u * v / (c * r)).atan();
    }
    t
}

/// `∫_rect 1/sqrt(u² + v² + c²) du dv` over `[au,bu] x [av,bv]`.
fn rect_inv_r(au: f64, bu: f64, av: f64, bv: f64, c: f64) -> f64 {
    f2(bu, bv, c) - f2(au, bv, c) - f2(bu, av, c) + f2(au, av, c)
}

/// Antiderivative of `sqrt(v² + k2) dv`.
fn anti_sqrt(v: f64, k2: f64) -> f64 {
    let r = (v * v + k2).sqrt();
    if k2 == 0.0 {
        return 0.5 * v * v.abs();
    }
    0.5 * (v * r + k2 * (v / k2.sqrt()).asinh())
}

/// `∫_rect u / sqrt(u² + v² + c²) du dv`.
fn rect_u_over_r(au: f64, bu: f64, av: f64, bv: f64, c: f64) -> f64 {
    let g = |u: f64| anti_sqrt(bv, u * u + c * c) - anti_sqrt(av, u * u + c * c);
    g(bu) - g(au)
}

/// `∫_box 1/|z| dz`.
pub fn inv_r(a: Vec3, b: Vec3) -> f64 {
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let sgn = if (i + j + k) % 2 == 1 { -1.0 } else { 1.0 };
                s += sgn
                    * f1(
                        if i == 0 { b[0] } else { a[0] },
                        if j == 0 { b[1] } else { a[1] },
                        if k == 0 { b[2] } else { a[2] },
                    );
            }
        }
    }
    s
}

/// `∫_box z/|z|³ dz` (componentwise).
pub fn z_over_r3(a: Vec3, b: Vec3) -> Vec3 {
    let mut out = [0.0; 3];
    for i in 0..3 {
        let o = other_axes(i);
        out[i] = -(rect_inv_r(a[o.0], b[o.0], a[o.1], b[o.1], b[i])
            - rect_inv_r(a[o.0], b[o.0], a[o.1], b[o.1], a[i]));
    }
    out
}

/// `∫_box z⊗z/|z|³ dz`. Satisfies `tr = ∫ 1/|z|` exactly.
pub fn zz_over_r3(a: Vec3, b: Vec3) -> Mat3 {
    let c_pot = inv_r(a, b);
    let mut w = [[0.0; 3]; 3];
    for jj in 0..3 {
        let o = other_axes(jj);
        for ii in 0..3 {
            let face = |c: f64| -> f64 {
                if ii == jj {
                    c * rect_inv_r(a[o.0], b[o.0], a[o.1], b[o.1], c)
                } else if ii == o.0 {
                    rect_u_over_r(a[ii], b[ii], a[o.1], b[o.1], c)
                } else {
                    rect_u_over_r(a[ii], b[ii], a[o.0], b[o.0], c)
                }
            };
            let diag = if ii == jj { c_pot } else { 0.0 };
            w[ii][jj] = diag - (face(b[jj]) - face(a[jj]));
        }
    }
    w
}

fn other_axes(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}
