//! Discrete volume-potential convolutions on a uniform grid.
//!
//! Kernel weights are the exact prism integrals of the kernel over cells
//! near the singularity (the self cell in particular) and midpoint values
//! `K(d·h)·h³` far away; the convolution is applied circularly on a
//! zero-padded grid via FFT. Evaluation at arbitrary points uses the same
//! near-exact policy, so interior grid values and the representation agree
//! to solver precision.

use crate::boxint;
use crate::kernels;
use crate::mat3::Mat3;
use crate::vec3::{self, Vec3};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Offsets with `|d|_∞` up to this many cells use exact prism integrals.
const NEAR_CELLS: i64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Lower corner of the grid volume.
    pub origin: Vec3,
    /// Cubic cell spacing.
    pub h: f64,
    pub dims: [usize; 3],
}

impl GridSpec {
    pub fn cell_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        [
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + (j as f64 + 0.5) * self.h,
            self.origin[2] + (k as f64 + 0.5) * self.h,
        ]
    }

    #[inline]
    pub fn flat(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    pub fn centers(&self) -> Vec<Vec3> {
        let mut out = Vec::with_capacity(self.cell_count());
        for k in 0..self.dims[2] {
            for j in 0..self.dims[1] {
                for i in 0..self.dims[0] {
                    out.push(self.center(i, j, k));
                }
            }
        }
        out
    }

    /// True if `x` lies within the grid volume.
    pub fn contains(&self, x: Vec3) -> bool {
        (0..3).all(|d| {
            x[d] >= self.origin[d] && x[d] <= self.origin[d] + self.h * self.dims[d] as f64
        })
    }

    /// Trilinear interpolation of cell-centered values.
    pub fn trilinear(&self, values: &[f64], x: Vec3) -> f64 {
        let mut idx = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for d in 0..3 {
            let t = (x[d] - self.origin[d]) / self.h - 0.5;
            let t = t.clamp(0.0, (self.dims[d] - 1) as f64);
            let i0 = (t.floor() as usize).min(self.dims[d].saturating_sub(2));
            idx[d] = i0;
            frac[d] = (t - i0 as f64).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        for dz in 0..2usize {
            for dy in 0..2usize {
                for dx in 0..2usize {
                    let w = (if dx == 0 { 1.0 - frac[0] } else { frac[0] })
                        * (if dy == 0 { 1.0 - frac[1] } else { frac[1] })
                        * (if dz == 0 { 1.0 - frac[2] } else { frac[2] });
                    acc += w
                        * values[self.flat(
                            (idx[0] + dx).min(self.dims[0] - 1),
                            (idx[1] + dy).min(self.dims[1] - 1),
                            (idx[2] + dz).min(self.dims[2] - 1),
                        )];
                }
            }
        }
        acc
    }
}

/// Exact prism integral of G over the cell at lattice offset `d`.
fn cell_g(d: [i64; 3], h: f64) -> f64 {
    let a = [
        d[0] as f64 * h - 0.5 * h,
        d[1] as f64 * h - 0.5 * h,
        d[2] as f64 * h - 0.5 * h,
    ];
    let b = [a[0] + h, a[1] + h, a[2] + h];
    boxint::inv_r(a, b) / (4.0 * PI)
}

fn cell_g_st(d: [i64; 3], h: f64) -> Mat3 {
    let a = [
        d[0] as f64 * h - 0.5 * h,
        d[1] as f64 * h - 0.5 * h,
        d[2] as f64 * h - 0.5 * h,
    ];
    let b = [a[0] + h, a[1] + h, a[2] + h];
    let c = boxint::inv_r(a, b);
    let w = boxint::zz_over_r3(a, b);
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (if i == j { c } else { 0.0 } + w[i][j]) / (8.0 * PI);
        }
    }
    out
}

/// `∫_cell V` with the convolution orientation convention (`T_V(d)` pairs a
/// target at offset `+d` from the source cell).
fn cell_v(d: [i64; 3], h: f64) -> Vec3 {
    let a = [
        d[0] as f64 * h - 0.5 * h,
        d[1] as f64 * h - 0.5 * h,
        d[2] as f64 * h - 0.5 * h,
    ];
    let b = [a[0] + h, a[1] + h, a[2] + h];
    vec3::scale(boxint::z_over_r3(a, b), -1.0 / (4.0 * PI))
}

fn far_or_near<T>(d: [i64; 3], h: f64, near: impl Fn() -> T, far: impl Fn(Vec3) -> T) -> T {
    let inf = d.iter().map(|v| v.abs()).max().unwrap();
    if inf <= NEAR_CELLS {
        near()
    } else {
        far([d[0] as f64 * h, d[1] as f64 * h, d[2] as f64 * h])
    }
}

/// Kernel weight used by both the grid convolution and point evaluation.
pub(crate) fn weight_g(d: [i64; 3], h: f64) -> f64 {
    far_or_near(d, h, || cell_g(d, h), |x| kernels::g(x) * h * h * h)
}

pub(crate) fn weight_g_st(d: [i64; 3], h: f64) -> Mat3 {
    far_or_near(
        d,
        h,
        || cell_g_st(d, h),
        |x| {
            let mut m = kernels::g_st(x);
            for row in &mut m {
                for v in row.iter_mut() {
                    *v *= h * h * h;
                }
            }
            m
        },
    )
}

pub(crate) fn weight_v(d: [i64; 3], h: f64) -> Vec3 {
    if d == [0, 0, 0] {
        return [0.0; 3]; // odd kernel: the self cell vanishes
    }
    far_or_near(
        d,
        h,
        || cell_v(d, h),
        |x| vec3::scale(kernels::grad_g(x), h * h * h),
    )
}

/// Continuous-point weights: exact prism integral of the kernel over the
/// cell centered at `yc` when the evaluation point is close, midpoint value
/// otherwise. At grid centers this reproduces the lattice weights above.
pub(crate) fn point_weight_g(x: Vec3, yc: Vec3, h: f64) -> f64 {
    let d = vec3::sub(x, yc);
    if vec3::norm_inf(d) <= (NEAR_CELLS as f64 + 0.49) * h {
        let a = [
            yc[0] - 0.5 * h - x[0],
            yc[1] - 0.5 * h - x[1],
            yc[2] - 0.5 * h - x[2],
        ];
        let b = [a[0] + h, a[1] + h, a[2] + h];
        boxint::inv_r(a, b) / (4.0 * PI)
    } else {
        kernels::g(d) * h * h * h
    }
}

pub(crate) fn point_weight_g_st(x: Vec3, yc: Vec3, h: f64) -> Mat3 {
    let d = vec3::sub(x, yc);
    if vec3::norm_inf(d) <= (NEAR_CELLS as f64 + 0.49) * h {
        let a = [
            yc[0] - 0.5 * h - x[0],
            yc[1] - 0.5 * h - x[1],
            yc[2] - 0.5 * h - x[2],
        ];
        let b = [a[0] + h, a[1] + h, a[2] + h];
        let c = boxint::inv_r(a, b);
        let w = boxint::zz_over_r3(a, b);
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (if i == j { c } else { 0.0 } + w[i][j]) / (8.0 * PI);
            }
        }
        out
    } else {
        let mut m = kernels::g_st(d);
        for row in &mut m {
            for v in row.iter_mut() {
                *v *= h * h * h;
            }
        }
        m
    }
}

pub(crate) fn point_weight_v(x: Vec3, yc: Vec3, h: f64) -> Vec3 {
    let d = vec3::sub(x, yc);
    if vec3::norm_inf(d) <= (NEAR_CELLS as f64 + 0.49) * h {
        let a = [
            yc[0] - 0.5 * h - x[0],
            yc[1] - 0.5 * h - x[1],
            yc[2] - 0.5 * h - x[2],
        ];
        let b = [a[0] + h, a[1] + h, a[2] + h];
        // z = y − x, V(x−y) = z/(4π|z|³)
        vec3::scale(boxint::z_over_r3(a, b), 1.0 / (4.0 * PI))
    } else {
        vec3::scale(kernels::grad_g(d), h * h * h)
    }
}

/// Which kernel family a [`GridConv`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvKernel {
    /// Scalar Newtonian kernel `G`.
    Laplace,
    /// Matrix Oseen kernel `G_St` (six stored components).
    Stokeslet,
    /// Vector kernel `V = ∇G`, contracted against a vector field.
    GradG,
}

/// FFT-backed circular convolution with one of the kernel tables.
pub struct GridConv {
    pub spec: GridSpec,
    padded: [usize; 3],
    kernel_hat: Vec<Vec<Complex64>>,
    kernel: ConvKernel,
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
}

fn good_fft_size(min: usize) -> usize {
    // smallest 2^a 3^b 5^c ≥ min
    let mut best = usize::MAX;
    let mut p2 = 1usize;
    while p2 < 4 * min {
        let mut p23 = p2;
        while p23 < 4 * min {
            let mut p235 = p23;
            while p235 < 4 * min {
                if p235 >= min && p235 < best {
                    best = p235;
                }
                p235 *= 5;
            }
            p23 *= 3;
        }
        p2 *= 2;
    }
    best
}

impl GridConv {
    pub fn new(spec: GridSpec, kernel: ConvKernel) -> GridConv {
        let padded = [
            good_fft_size(2 * spec.dims[0]),
            good_fft_size(2 * spec.dims[1]),
            good_fft_size(2 * spec.dims[2]),
        ];
        let mut planner = FftPlanner::new();
        let fwd = [
            planner.plan_fft_forward(padded[0]),
            planner.plan_fft_forward(padded[1]),
            planner.plan_fft_forward(padded[2]),
        ];
        let inv = [
            planner.plan_fft_inverse(padded[0]),
            planner.plan_fft_inverse(padded[1]),
            planner.plan_fft_inverse(padded[2]),
        ];
        let n_components = match kernel {
            ConvKernel::Laplace => 1,
            ConvKernel::Stokeslet => 6,
            ConvKernel::GradG => 3,
        };
        let total = padded[0] * padded[1] * padded[2];
        let mut tables = vec![vec![Complex64::new(0.0, 0.0); total]; n_components];
        let h = spec.h;
        let wrap = |d: i64, m: usize| -> usize {
            let m = m as i64;
            ((d % m + m) % m) as usize
        };
        for dz in -(spec.dims[2] as i64 - 1)..=(spec.dims[2] as i64 - 1) {
            for dy in -(spec.dims[1] as i64 - 1)..=(spec.dims[1] as i64 - 1) {
                for dx in -(spec.dims[0] as i64 - 1)..=(spec.dims[0] as i64 - 1) {
                    let d = [dx, dy, dz];
                    let idx = (wrap(dz, padded[2]) * padded[1] + wrap(dy, padded[1])) * padded[0]
                        + wrap(dx, padded[0]);
                    match kernel {
                        ConvKernel::Laplace => {
                            tables[0][idx] = Complex64::new(weight_g(d, h), 0.0);
                        }
                        ConvKernel::Stokeslet => {
                            let m = weight_g_st(d, h);
                            let comps = [
                                m[0][0], m[1][1], m[2][2], m[0][1], m[0][2], m[1][2],
                            ];
                            for (t, v) in tables.iter_mut().zip(comps.iter()) {
                                t[idx] = Complex64::new(*v, 0.0);
                            }
                        }
                        ConvKernel::GradG => {
                            let v = weight_v(d, h);
                            for (t, c) in tables.iter_mut().zip(v.iter()) {
                                t[idx] = Complex64::new(*c, 0.0);
                            }
                        }
                    }
                }
            }
        }
        let mut conv = GridConv {
            spec,
            padded,
            kernel_hat: Vec::new(),
            kernel,
            fwd,
            inv,
        };
        for table in &mut tables {
            conv.fft3(table, true);
        }
        conv.kernel_hat = tables;
        conv
    }

    fn fft3(&self, data: &mut [Complex64], forward: bool) {
        let [mx, my, mz] = self.padded;
        let plans = if forward { &self.fwd } else { &self.inv };
        // axis 0: contiguous lines
        plans[0].process(data);
        // axis 1: gather lines of stride mx
        let mut scratch = vec![Complex64::new(0.0, 0.0); my * mx];
        for z in 0..mz {
            let plane = &mut data[z * my * mx..(z + 1) * my * mx];
            for x in 0..mx {
                for y in 0..my {
                    scratch[x * my + y] = plane[y * mx + x];
                }
            }
            plans[1].process(&mut scratch);
            for x in 0..mx {
                for y in 0..my {
                    plane[y * mx + x] = scratch[x * my + y];
                }
            }
        }
        // axis 2: gather lines of stride mx*my, one x-y plane batch at a time
        let stride = mx * my;
        let mut scratch = vec![Complex64::new(0.0, 0.0); mz * mx];
        for y in 0..my {
            for x in 0..mx {
                for z in 0..mz {
                    scratch[x * mz + z] = data[z * stride + y * mx + x];
                }
            }
            plans[2].process(&mut scratch);
            for x in 0..mx {
                for z in 0..mz {
                    data[z * stride + y * mx + x] = scratch[x * mz + z];
                }
            }
        }
    }

    fn pad(&self, field: &[f64]) -> Vec<Complex64> {
        let [mx, my, _] = self.padded;
        let total = self.padded[0] * self.padded[1] * self.padded[2];
        let mut out = vec![Complex64::new(0.0, 0.0); total];
        let [nx, ny, nz] = self.spec.dims;
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    out[(k * my + j) * mx + i] =
                        Complex64::new(field[self.spec.flat(i, j, k)], 0.0);
                }
            }
        }
        out
    }

    fn unpad(&self, data: &[Complex64]) -> Vec<f64> {
        let [mx, my, _] = self.padded;
        let scale = 1.0 / (self.padded[0] * self.padded[1] * self.padded[2]) as f64;
        let [nx, ny, nz] = self.spec.dims;
        let mut out = vec![0.0; self.spec.cell_count()];
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    out[self.spec.flat(i, j, k)] = data[(k * my + j) * mx + i].re * scale;
                }
            }
        }
        out
    }

    /// `(G ⋆ w)` at all grid centers.
    pub fn apply_laplace(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(self.kernel, ConvKernel::Laplace);
        let mut what = self.pad(w);
        self.fft3(&mut what, true);
        for (v, k) in what.iter_mut().zip(self.kernel_hat[0].iter()) {
            *v *= k;
        }
        self.fft3(&mut what, false);
        self.unpad(&what)
    }

    /// `(G_St ⋆ w)` componentwise for a vector field.
    pub fn apply_stokeslet(&self, w: &[Vec3]) -> Vec<Vec3> {
        assert_eq!(self.kernel, ConvKernel::Stokeslet);
        let comps: Vec<Vec<Complex64>> = (0..3)
            .map(|a| {
                let field: Vec<f64> = w.iter().map(|v| v[a]).collect();
                let mut f = self.pad(&field);
                self.fft3(&mut f, true);
                f
            })
            .collect();
        // component order: xx, yy, zz, xy, xz, yz
        let pair = |a: usize, b: usize| -> &Vec<Complex64> {
            match (a.min(b), a.max(b)) {
                (0, 0) => &self.kernel_hat[0],
                (1, 1) => &self.kernel_hat[1],
                (2, 2) => &self.kernel_hat[2],
                (0, 1) => &self.kernel_hat[3],
                (0, 2) => &self.kernel_hat[4],
                _ => &self.kernel_hat[5],
            }
        };
        let total = self.padded[0] * self.padded[1] * self.padded[2];
        let mut out = vec![[0.0; 3]; self.spec.cell_count()];
        for a in 0..3 {
            let mut acc = vec![Complex64::new(0.0, 0.0); total];
            for b in 0..3 {
                let k = pair(a, b);
                for i in 0..total {
                    acc[i] += k[i] * comps[b][i];
                }
            }
            self.fft3(&mut acc, false);
            let vals = self.unpad(&acc);
            for (o, v) in out.iter_mut().zip(vals.iter()) {
                o[a] = *v;
            }
        }
        out
    }

    /// `Σ_a (V_a ⋆ w_a)`, the scalar contraction of `V` with a vector field.
    pub fn apply_grad_g(&self, w: &[Vec3]) -> Vec<f64> {
        assert_eq!(self.kernel, ConvKernel::GradG);
        let total = self.padded[0] * self.padded[1] * self.padded[2];
        let mut acc = vec![Complex64::new(0.0, 0.0); total];
        for a in 0..3 {
            let field: Vec<f64> = w.iter().map(|v| v[a]).collect();
            let mut f = self.pad(&field);
            self.fft3(&mut f, true);
            for i in 0..total {
                acc[i] += self.kernel_hat[a][i] * f[i];
            }
        }
        self.fft3(&mut acc, false);
        self.unpad(&acc)
    }
}
