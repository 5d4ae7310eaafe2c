//! Computable evaluation of the separation hypotheses controlling the
//! effective limits: the minimal-distance conditions, the non-clustering
//! functionals (ball integrals and their sharp point-evaluation variants),
//! the weak separation gap, the dipole-interaction functional, and the
//! pair-correlation criterion for stationary point processes.
//!
//! Summation conventions: centers are processed in lexicographic order, so
//! every functional is invariant under relabeling bit for bit. Matrix norms
//! are Frobenius norms; gradients of matrix kernels are componentwise.

use crate::geometry::{BallCubature, Configuration, Density, Domain, Scaling};
use crate::kernels::{kernel_sum, Exclusion, KernelId, SumMethod};
use crate::mat3;
use crate::vec3::{self, Vec3};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HypothesisError {
    #[error("functional requires reflexive scaling (r_n = 1/n), got {0:?}")]
    NeedsReflexive(Scaling),
    #[error("functional requires fraction scaling (fixed lambda), got {0:?}")]
    NeedsFraction(Scaling),
    #[error("functional requires at least {needed} centers, got {got}")]
    TooFewCenters { needed: usize, got: usize },
    #[error(transparent)]
    Kernel(#[from] crate::kernels::KernelError),
}

/// Options shared by the pairwise functionals.
#[derive(Debug, Clone, Copy)]
pub struct SumOptions {
    pub method: SumMethod,
}

impl Default for SumOptions {
    fn default() -> Self {
        SumOptions {
            method: SumMethod::Direct,
        }
    }
}

/// Minimal-distance checks for (H1) (`d_n ≥ c/n`) and (A1) (`d_n ≥ c·r_n`).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct H1Check {
    pub d_n: f64,
    pub h1_pass: bool,
    pub a1_pass: bool,
}

pub fn h1_check(config: &Configuration, c: f64) -> H1Check {
    let d_n = config.min_distance();
    if config.n < 2 {
        return H1Check {
            d_n,
            h1_pass: true,
            a1_pass: true,
        };
    }
    H1Check {
        d_n,
        h1_pass: d_n >= c / config.n as f64,
        a1_pass: d_n >= c * config.radius,
    }
}

/// Value of the Laplace non-clustering functional together with its two
/// terms.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct H2Value {
    pub total: f64,
    pub potential_term: f64,
    pub gradient_term: f64,
}

/// Value of the Stokes non-clustering functional and its four terms.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct H2PrimeValue {
    pub total: f64,
    pub potential_term: f64,
    pub gradient_term: f64,
    pub quadrupole_term: f64,
    pub grad_quadrupole_term: f64,
}

/// Σ_i ∫_{B_i} ( n² |n⁻¹ Σ_{j≠i} G(x−x_j) − (G⋆ρ)(x)|²
///              + n⁻² |Σ_{j≠i} ∇G(x−x_j)|² ) dx, with r_n = 1/n.
pub fn h2_value(
    config: &Configuration,
    rho: &Density,
    opts: SumOptions,
) -> Result<H2Value, HypothesisError> {
    if !matches!(config.scaling, Scaling::Reflexive) {
        return Err(HypothesisError::NeedsReflexive(config.scaling));
    }
    let centers = canonical_centers(config);
    let n = config.n as f64;
    let (nodes, weights, owner) = ball_nodes(&centers, config.radius);
    let g_sums = kernel_sum(
        KernelId::G,
        &nodes,
        &centers,
        &vec![1.0; centers.len()],
        opts.method,
        Exclusion::PerTarget(&owner),
    )?;
    let grad_sums = kernel_sum(
        KernelId::GradG,
        &nodes,
        &centers,
        &vec![1.0; centers.len()],
        opts.method,
        Exclusion::PerTarget(&owner),
    )?;
    let mut potential_term = 0.0;
    let mut gradient_term = 0.0;
    for (k, (&x, &w)) in nodes.iter().zip(weights.iter()).enumerate() {
        let s = g_sums[k].as_scalar();
        let diff = s / n - rho.potential(x);
        potential_term += w * n * n * diff * diff;
        let gv = grad_sums[k].as_vector();
        gradient_term += w * vec3::norm2(gv) / (n * n);
    }
    Ok(H2Value {
        total: potential_term + gradient_term,
        potential_term,
        gradient_term,
    })
}

/// The Stokes analogue with kernels `G_St`, `∇G_St`, `R_St`, `∇R_St`.
pub fn h2prime_value(
    config: &Configuration,
    rho: &Density,
    opts: SumOptions,
) -> Result<H2PrimeValue, HypothesisError> {
    if !matches!(config.scaling, Scaling::Reflexive) {
        return Err(HypothesisError::NeedsReflexive(config.scaling));
    }
    let centers = canonical_centers(config);
    let n = config.n as f64;
    let ones = vec![1.0; centers.len()];
    let (nodes, weights, owner) = ball_nodes(&centers, config.radius);
    let excl = Exclusion::PerTarget(&owner);
    let gst = kernel_sum(KernelId::GSt, &nodes, &centers, &ones, opts.method, excl)?;
    let grad_gst = kernel_sum(KernelId::GradGSt, &nodes, &centers, &ones, opts.method, excl)?;
    let rst = kernel_sum(KernelId::RSt, &nodes, &centers, &ones, opts.method, excl)?;
    let grad_rst = kernel_sum(KernelId::GradRSt, &nodes, &centers, &ones, opts.method, excl)?;
    let n2 = n * n;
    let n4 = n2 * n2;
    let n6 = n4 * n2;
    let mut t1 = 0.0;
    let mut t2 = 0.0;
    let mut t3 = 0.0;
    let mut t4 = 0.0;
    for (k, (&x, &w)) in nodes.iter().zip(weights.iter()).enumerate() {
        let m = gst[k].as_matrix();
        let conv = rho.stokes_potential(x);
        let diff = mat3::sub(mat3::scale(m, 1.0 / n), conv);
        t1 += w * n2 * mat3::frobenius(diff).powi(2);
        t2 += w * grad_gst[k].norm().powi(2) / n2;
        t3 += w * rst[k].norm().powi(2) / n4;
        t4 += w * grad_rst[k].norm().powi(2) / n6;
    }
    Ok(H2PrimeValue {
        total: t1 + t2 + t3 + t4,
        potential_term: t1,
        gradient_term: t2,
        quadrupole_term: t3,
        grad_quadrupole_term: t4,
    })
}

/// `(1/n) Σ_i ( (1/n) Σ_{j≠i} 1/|x_i−x_j| − ∫ ρ(y)/|x_i−y| dy )²`.
pub fn h2sharp_value(
    config: &Configuration,
    rho: &Density,
    opts: SumOptions,
) -> Result<f64, HypothesisError> {
    if config.n < 1 {
        return Err(HypothesisError::TooFewCenters {
            needed: 1,
            got: 0,
        });
    }
    let centers = canonical_centers(config);
    let n = config.n as f64;
    let sums = kernel_sum(
        KernelId::InvR,
        &centers,
        &centers,
        &vec![1.0; centers.len()],
        opts.method,
        Exclusion::SelfIndex,
    )?;
    let mut total = 0.0;
    for (i, &x) in centers.iter().enumerate() {
        let diff = sums[i].as_scalar() / n - rho.inv_r_potential(x);
        total += diff * diff;
    }
    Ok(total / n)
}

/// The Stokes-sharp variant with the kernel `(x⊗x)/|x|³` (Frobenius norm).
pub fn h2prime_sharp_value(
    config: &Configuration,
    rho: &Density,
    opts: SumOptions,
) -> Result<f64, HypothesisError> {
    if config.n < 1 {
        return Err(HypothesisError::TooFewCenters {
            needed: 1,
            got: 0,
        });
    }
    let centers = canonical_centers(config);
    let n = config.n as f64;
    let sums = kernel_sum(
        KernelId::XxR3,
        &centers,
        &centers,
        &vec![1.0; centers.len()],
        opts.method,
        Exclusion::SelfIndex,
    )?;
    let mut total = 0.0;
    for (i, &x) in centers.iter().enumerate() {
        let diff = mat3::sub(
            mat3::scale(sums[i].as_matrix(), 1.0 / n),
            rho.xx_potential(x),
        );
        total += mat3::frobenius(diff).powi(2);
    }
    Ok(total / n)
}

/// Weak separation gap and its two sides.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WeakSepValue {
    pub gap: f64,
    pub empirical_sum: f64,
    pub reference_integral: f64,
}

/// `| n⁻² Σ_{i≠j} 1/|x_i−x_j| − ∬ ρ(x)ρ(y)/|x−y| dx dy |`.
///
/// The reference double integral is analytic for uniform balls (`6/(5R)`)
/// and Monte-Carlo (fixed seed, 4·10⁵ pairs) otherwise.
pub fn weaksep_gap(
    config: &Configuration,
    rho: &Density,
    opts: SumOptions,
) -> Result<WeakSepValue, HypothesisError> {
    if config.n < 2 {
        return Err(HypothesisError::TooFewCenters {
            needed: 2,
            got: config.n,
        });
    }
    let centers = canonical_centers(config);
    let n = config.n as f64;
    let sums = kernel_sum(
        KernelId::InvR,
        &centers,
        &centers,
        &vec![1.0; centers.len()],
        opts.method,
        Exclusion::SelfIndex,
    )?;
    let empirical: f64 = sums.iter().map(|v| v.as_scalar()).sum::<f64>() / (n * n);
    let reference = mean_inverse_distance(rho);
    Ok(WeakSepValue {
        gap: (empirical - reference).abs(),
        empirical_sum: empirical,
        reference_integral: reference,
    })
}

/// `∬ ρ(x)ρ(y)/|x−y| dx dy`.
pub fn mean_inverse_distance(rho: &Density) -> f64 {
    match rho {
        Density::UniformBall { radius, .. } => 6.0 / (5.0 * radius),
        _ => {
            // MC over pairs sampled from rho, fixed stream.
            let mut rng = crate::geometry::rng_for(0x5eed, 77);
            let bbox = rho.support().bounding_box();
            let sup = rho.sup();
            let mut sample = || loop {
                let x = [
                    bbox.0[0] + rng.random::<f64>() * (bbox.1[0] - bbox.0[0]),
                    bbox.0[1] + rng.random::<f64>() * (bbox.1[1] - bbox.0[1]),
                    bbox.0[2] + rng.random::<f64>() * (bbox.1[2] - bbox.0[2]),
                ];
                let u: f64 = rng.random();
                if u * sup < rho.value(x) {
                    return x;
                }
            };
            let pairs = 400_000;
            let mut acc = 0.0;
            for _ in 0..pairs {
                let x = sample();
                let y = sample();
                let d = vec3::dist(x, y);
                if d > 0.0 {
                    acc += 1.0 / d;
                }
            }
            acc / pairs as f64
        }
    }
}

/// Analytic test fields for the dipole functional: the family is
/// 3 linear + 3 quadratic + 1 Gaussian-modulated, per the documented
/// convention. Any finite family under-approximates the supremum over all
/// smooth φ, so reports flag the result as a lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TestField {
    /// φ with constant gradient `g`.
    Linear { grad: Vec3 },
    /// φ = x_a x_b (a ≠ b) or x_a² − x_b².
    QuadraticCross { a: usize, b: usize },
    QuadraticDiff { a: usize, b: usize },
    /// φ = x₁ exp(−|x|²/2).
    GaussianX,
}

impl TestField {
    pub fn grad(&self, x: Vec3) -> Vec3 {
        match self {
            TestField::Linear { grad } => *grad,
            TestField::QuadraticCross { a, b } => {
                let mut g = [0.0; 3];
                g[*a] = x[*b];
                g[*b] = x[*a];
                g
            }
            TestField::QuadraticDiff { a, b } => {
                let mut g = [0.0; 3];
                g[*a] = 2.0 * x[*a];
                g[*b] = -2.0 * x[*b];
                g
            }
            TestField::GaussianX => {
                let e = (-vec3::norm2(x) / 2.0).exp();
                [
                    e * (1.0 - x[0] * x[0]),
                    -e * x[0] * x[1],
                    -e * x[0] * x[2],
                ]
            }
        }
    }

    /// Numerical sup of `|∇φ|` over the domain (33³ sample grid plus
    /// bounding-box corners).
    pub fn grad_sup(&self, domain: &Domain) -> f64 {
        if let TestField::Linear { grad } = self {
            return vec3::norm(*grad);
        }
        let (lo, hi) = domain.bounding_box();
        let m = 33;
        let mut sup = 0.0f64;
        for i in 0..=m {
            for j in 0..=m {
                for k in 0..=m {
                    let x = [
                        lo[0] + (hi[0] - lo[0]) * i as f64 / m as f64,
                        lo[1] + (hi[1] - lo[1]) * j as f64 / m as f64,
                        lo[2] + (hi[2] - lo[2]) * k as f64 / m as f64,
                    ];
                    sup = sup.max(vec3::norm(self.grad(x)));
                }
            }
        }
        sup
    }

    pub fn name(&self) -> String {
        match self {
            TestField::Linear { grad } => format!("linear[{:.2},{:.2},{:.2}]", grad[0], grad[1], grad[2]),
            TestField::QuadraticCross { a, b } => format!("x{a}*x{b}"),
            TestField::QuadraticDiff { a, b } => format!("x{a}^2-x{b}^2"),
            TestField::GaussianX => "gaussian-x".into(),
        }
    }
}

/// The documented 7-field family.
pub fn standard_fields() -> Vec<TestField> {
    vec![
        TestField::Linear {
            grad: [1.0, 0.0, 0.0],
        },
        TestField::Linear {
            grad: [0.0, 1.0, 0.0],
        },
        TestField::Linear {
            grad: [0.0, 0.0, 1.0],
        },
        TestField::QuadraticCross { a: 0, b: 1 },
        TestField::QuadraticCross { a: 1, b: 2 },
        TestField::QuadraticDiff { a: 0, b: 1 },
        TestField::GaussianX,
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct A2Value {
    pub value: f64,
    /// `(3|K_ρ|)² value / ‖∇φ‖∞²`; equals `Σ_i ‖a_i‖² / (λ² ‖∇φ‖∞²)` and is
    /// the computable stand-in for η(λ).
    pub eta_estimate: f64,
    pub grad_sup: f64,
    pub field: String,
}

/// `n⁻² Σ_i ∫_{B_i} |Σ_{j≠i} ∇V(x−x_j) ∇φ(x_j)|² dx` (fraction scaling).
pub fn a2_value(
    config: &Configuration,
    rho: &Density,
    field: &TestField,
) -> Result<A2Value, HypothesisError> {
    let lambda = match config.scaling {
        Scaling::Fraction { lambda } => lambda,
        other => return Err(HypothesisError::NeedsFraction(other)),
    };
    let _ = lambda;
    if config.n < 1 {
        return Err(HypothesisError::TooFewCenters { needed: 1, got: 0 });
    }
    let centers = canonical_centers(config);
    let n = config.n as f64;
    let grads: Vec<Vec3> = centers.iter().map(|&c| field.grad(c)).collect();
    let cubature = BallCubature::degree5();
    let mut value = 0.0;
    for (i, &ci) in centers.iter().enumerate() {
        for (x, w) in cubature.mapped(ci, config.radius) {
            let mut s = [0.0; 3];
            for (j, &cj) in centers.iter().enumerate() {
                if j == i {
                    continue;
                }
                let m = crate::kernels::grad_v(vec3::sub(x, cj));
                vec3::axpy(&mut s, 1.0, mat3::matvec(m, grads[j]));
            }
            value += w * vec3::norm2(s);
        }
    }
    value /= n * n;
    let support = rho.support();
    let kvol = support.volume();
    let sup = field.grad_sup(&support);
    Ok(A2Value {
        value,
        eta_estimate: (3.0 * kvol).powi(2) * value / (sup * sup),
        grad_sup: sup,
        field: field.name(),
    })
}

/// Max of [`a2_value`] over a field family (a lower bound for the supremum
/// over all smooth φ).
pub fn a2_family_max(
    config: &Configuration,
    rho: &Density,
    fields: &[TestField],
) -> Result<A2Value, HypothesisError> {
    let mut best: Option<A2Value> = None;
    for f in fields {
        let v = a2_value(config, rho, f)?;
        if !best
            .as_ref()
            .is_some_and(|b| v.eta_estimate <= b.eta_estimate)
        {
            best = Some(v);
        }
    }
    Ok(best.expect("field family must be non-empty"))
}

/// Translation-invariant second factorial moment models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PairCorrelationModel {
    /// ρ₂ ≡ λ₀²
    Poisson { intensity: f64 },
    /// ρ₂ = λ₀² · 1(|z| ≥ c λ₀^{-1/3})
    Hardcore { intensity: f64, c: f64 },
}

/// `(λ/λ₀³) ∫ ρ₂(0,z) / (|z|⁶ + (λ/λ₀)²) dz` by radial quadrature.
///
/// The integral reduces to `∫ du/(u² + a²)` with `u = r³`, `a = λ/λ₀`; it
/// is evaluated by composite Simpson with an analytic far tail.
pub fn cond_rho2_value(model: &PairCorrelationModel, lambda: f64) -> f64 {
    let (intensity, r0) = match model {
        PairCorrelationModel::Poisson { intensity } => (*intensity, 0.0),
        PairCorrelationModel::Hardcore { intensity, c } => {
            (*intensity, c * intensity.powf(-1.0 / 3.0))
        }
    };
    let a = lambda / intensity;
    let u0 = r0 * r0 * r0;
    // integral of 1/(u² + a²) over [u0, ∞)
    let f = |u: f64| 1.0 / (u * u + a * a);
    let u_mid = (u0 + a).max(u0 + 1e-12);
    let mut integral = simpson(f, u0, u_mid + 10.0 * a, 4096);
    // log-spaced panel out to a far cutoff, then the 1/u tail
    let far = (u_mid + 10.0 * a).max(1e-9);
    let cutoff = far * 1e9;
    integral += simpson(|t: f64| { let u = t.exp(); f(u) * u }, far.ln(), cutoff.ln(), 8192);
    integral += 1.0 / cutoff;
    (lambda / intensity.powi(3)) * intensity * intensity * (4.0 * PI / 3.0) * integral
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = panels.max(2) & !1usize;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Everything the CLI reports for one configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub n: usize,
    pub d_n: f64,
    /// `n · d_n` (grows without bound under (H1♯)).
    pub h1_margin: f64,
    /// `d_n / r_n` (must exceed the constant `c` of (A1)).
    pub a1_margin: f64,
    pub h2: Option<H2Value>,
    pub h2prime: Option<H2PrimeValue>,
    pub h2sharp: Option<f64>,
    pub h2prime_sharp: Option<f64>,
    pub weaksep: Option<WeakSepValue>,
    pub a2: Option<A2Value>,
    pub metadata: ReportMetadata,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub cubature_degree: u32,
    pub sum_method: String,
    pub matrix_norm: String,
    pub summation_order: String,
    /// The (A2) family max under-approximates the sup over all smooth φ.
    pub a2_is_lower_bound: bool,
}

impl ReportMetadata {
    fn new(method: SumMethod) -> Self {
        ReportMetadata {
            cubature_degree: 5,
            sum_method: match method {
                SumMethod::Direct => "direct".into(),
                SumMethod::Tree { theta } => format!("tree(theta={theta})"),
            },
            matrix_norm: "frobenius".into(),
            summation_order: "lexicographic".into(),
            a2_is_lower_bound: true,
        }
    }
}

/// Evaluate every functional applicable to the configuration's scaling.
pub fn evaluate_report(
    config: &Configuration,
    rho: &Density,
    opts: SumOptions,
) -> Result<HypothesisReport, HypothesisError> {
    let d_n = config.min_distance();
    let reflexive = matches!(config.scaling, Scaling::Reflexive);
    let fraction = matches!(config.scaling, Scaling::Fraction { .. });
    let h2 = if reflexive && config.n >= 1 {
        Some(h2_value(config, rho, opts)?)
    } else {
        None
    };
    let h2prime = if reflexive && config.n >= 1 {
        Some(h2prime_value(config, rho, opts)?)
    } else {
        None
    };
    let h2sharp = if config.n >= 1 {
        Some(h2sharp_value(config, rho, opts)?)
    } else {
        None
    };
    let h2prime_sharp = if config.n >= 1 {
        Some(h2prime_sharp_value(config, rho, opts)?)
    } else {
        None
    };
    let weaksep = if config.n >= 2 {
        Some(weaksep_gap(config, rho, opts)?)
    } else {
        None
    };
    let a2 = if fraction && config.n >= 1 {
        Some(a2_family_max(config, rho, &standard_fields())?)
    } else {
        None
    };
    Ok(HypothesisReport {
        n: config.n,
        d_n,
        h1_margin: config.n as f64 * d_n,
        a1_margin: d_n / config.radius,
        h2,
        h2prime,
        h2sharp,
        h2prime_sharp,
        weaksep,
        a2,
        metadata: ReportMetadata::new(opts.method),
    })
}

/// Centers sorted lexicographically so sums are permutation invariant.
fn canonical_centers(config: &Configuration) -> Vec<Vec3> {
    let mut centers = config.centers.clone();
    centers.sort_by(|a, b| {
        a.partial_cmp(b)
            .expect("configuration centers must not contain NaN")
    });
    centers
}

/// Cubature nodes for every ball, with weights and owning ball index.
fn ball_nodes(centers: &[Vec3], radius: f64) -> (Vec<Vec3>, Vec<f64>, Vec<Option<usize>>) {
    let cubature = BallCubature::degree5();
    let mut nodes = Vec::with_capacity(centers.len() * cubature.nodes.len());
    let mut weights = Vec::with_capacity(nodes.capacity());
    let mut owner = Vec::with_capacity(nodes.capacity());
    for (i, &c) in centers.iter().enumerate() {
        for (x, w) in cubature.mapped(c, radius) {
            nodes.push(x);
            weights.push(w);
            owner.push(Some(i));
        }
    }
    (nodes, weights, owner)
}
