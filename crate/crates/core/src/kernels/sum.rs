//! Pairwise kernel sums over point clouds, exact or treecode-accelerated.
//!
//! The direct path accumulates sources in index order per target, so results
//! are bitwise reproducible regardless of how targets are distributed over
//! threads. The tree path opens a cell when `size/distance >= theta` and
//! otherwise applies a monopole + dipole expansion about the cell center.

use rayon::prelude::*;

use super::octree::Octree;
use super::{
    dir2_grad, dir_grad, eval_unchecked, quad_contract_scalar, KernelError, KernelId, KernelValue,
};
use crate::mat3;
use crate::vec3::{self, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SumMethod {
    Direct,
    Tree { theta: f64 },
}

/// Which source to skip for each target.
#[derive(Debug, Clone, Copy)]
pub enum Exclusion<'a> {
    /// Include every source.
    None,
    /// Skip the source with the same index as the target (targets and
    /// sources must be parallel sequences).
    SelfIndex,
    /// Per-target source index to skip (`None` entries skip nothing).
    PerTarget(&'a [Option<usize>]),
}

impl Exclusion<'_> {
    #[inline]
    fn skip_for(&self, target_idx: usize) -> Option<usize> {
        match self {
            Exclusion::None => None,
            Exclusion::SelfIndex => Some(target_idx),
            Exclusion::PerTarget(v) => v[target_idx],
        }
    }
}

/// Sum `Σ_j w_j K(x_t − x_j)` for every target `x_t`.
pub fn kernel_sum(
    id: KernelId,
    targets: &[Vec3],
    sources: &[Vec3],
    weights: &[f64],
    method: SumMethod,
    exclusion: Exclusion,
) -> Result<Vec<KernelValue>, KernelError> {
    if weights.len() != sources.len() {
        return Err(KernelError::WeightMismatch {
            weights: weights.len(),
            sources: sources.len(),
        });
    }
    match method {
        SumMethod::Direct => direct_sum(id, targets, sources, weights, exclusion),
        SumMethod::Tree { theta } => {
            if !(theta > 0.0 && theta < 1.0) {
                return Err(KernelError::BadTheta(theta));
            }
            let tree = Octree::build(sources, weights);
            tree_sum(id, targets, &tree, theta, exclusion)
        }
    }
}

/// Accumulator abstraction so scalar/vector/matrix kernels share one engine.
trait Accum: Copy + Send + Sync {
    fn zero() -> Self;
    fn add_scaled(&mut self, v: &KernelValue, w: f64);
    fn into_value(self) -> KernelValue;
}

#[derive(Clone, Copy)]
struct AccScalar(f64);
#[derive(Clone, Copy)]
struct AccVector(Vec3);
#[derive(Clone, Copy)]
struct AccMatrix(mat3::Mat3);
#[derive(Clone, Copy)]
struct AccRank3([mat3::Mat3; 3]);

impl Accum for AccScalar {
    fn zero() -> Self {
        AccScalar(0.0)
    }
    #[inline]
    fn add_scaled(&mut self, v: &KernelValue, w: f64) {
        if let KernelValue::Scalar(s) = v {
            self.0 += w * s;
        }
    }
    fn into_value(self) -> KernelValue {
        KernelValue::Scalar(self.0)
    }
}

impl Accum for AccVector {
    fn zero() -> Self {
        AccVector([0.0; 3])
    }
    #[inline]
    fn add_scaled(&mut self, v: &KernelValue, w: f64) {
        if let KernelValue::Vector(g) = v {
            vec3::axpy(&mut self.0, w, *g);
        }
    }
    fn into_value(self) -> KernelValue {
        KernelValue::Vector(self.0)
    }
}

impl Accum for AccMatrix {
    fn zero() -> Self {
        AccMatrix(mat3::ZERO)
    }
    #[inline]
    fn add_scaled(&mut self, v: &KernelValue, w: f64) {
        if let KernelValue::Matrix(m) = v {
            for i in 0..3 {
                for j in 0..3 {
                    self.0[i][j] += w * m[i][j];
                }
            }
        }
    }
    fn into_value(self) -> KernelValue {
        KernelValue::Matrix(self.0)
    }
}

impl Accum for AccRank3 {
    fn zero() -> Self {
        AccRank3([mat3::ZERO; 3])
    }
    #[inline]
    fn add_scaled(&mut self, v: &KernelValue, w: f64) {
        if let KernelValue::Rank3(t) = v {
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        self.0[k][i][j] += w * t[k][i][j];
                    }
                }
            }
        }
    }
    fn into_value(self) -> KernelValue {
        KernelValue::Rank3(self.0)
    }
}

macro_rules! dispatch_arity {
    ($id:expr, $go:ident) => {
        match $id {
            KernelId::G | KernelId::InvR | KernelId::TruncG => $go!(AccScalar),
            KernelId::GradG | KernelId::V | KernelId::TruncV => $go!(AccVector),
            KernelId::GradV
            | KernelId::GSt
            | KernelId::RSt
            | KernelId::TruncGSt
            | KernelId::XxR3 => $go!(AccMatrix),
            KernelId::GradGSt | KernelId::GradRSt => $go!(AccRank3),
        }
    };
}

fn direct_sum(
    id: KernelId,
    targets: &[Vec3],
    sources: &[Vec3],
    weights: &[f64],
    exclusion: Exclusion,
) -> Result<Vec<KernelValue>, KernelError> {
    run_per_target(targets, |t, x| direct_one(id, t, x, sources, weights, exclusion))
}

fn direct_one(
    id: KernelId,
    target_idx: usize,
    x: Vec3,
    sources: &[Vec3],
    weights: &[f64],
    exclusion: Exclusion,
) -> Result<KernelValue, KernelError> {
    let skip = exclusion.skip_for(target_idx);
    macro_rules! go {
        ($acc:ty) => {{
            let mut acc = <$acc>::zero();
            for (j, (&s, &w)) in sources.iter().zip(weights.iter()).enumerate() {
                if Some(j) == skip {
                    continue;
                }
                let d = vec3::sub(x, s);
                if id.singular() && vec3::norm2(d) == 0.0 {
                    return Err(KernelError::CoincidentPoint {
                        target: target_idx,
                        source_index: j,
                    });
                }
                acc.add_scaled(&eval_unchecked(id, d), w);
            }
            Ok(acc.into_value())
        }};
    }
    dispatch_arity!(id, go)
}

fn tree_sum(
    id: KernelId,
    targets: &[Vec3],
    tree: &Octree,
    theta: f64,
    exclusion: Exclusion,
) -> Result<Vec<KernelValue>, KernelError> {
    run_per_target(targets, |t, x| tree_one(id, t, x, tree, theta, exclusion))
}

fn tree_one(
    id: KernelId,
    target_idx: usize,
    x: Vec3,
    tree: &Octree,
    theta: f64,
    exclusion: Exclusion,
) -> Result<KernelValue, KernelError> {
    let skip = exclusion.skip_for(target_idx);
    macro_rules! go {
        ($acc:ty) => {{
            let mut acc = <$acc>::zero();
            let mut stack: Vec<usize> = Vec::with_capacity(64);
            if !tree.nodes.is_empty() && tree.nodes[0].end > tree.nodes[0].start {
                stack.push(0);
            }
            while let Some(idx) = stack.pop() {
                let node = &tree.nodes[idx];
                let dist = vec3::dist(x, node.com);
                let size = 2.0 * node.half;
                // Barnes-style offset guard: the expansion center may sit
                // away from the geometric center of the cell.
                let offset = node.offset;
                let excluded_inside = match skip {
                    Some(j) => tree.node_contains(node, j),
                    None => false,
                };
                if !excluded_inside && size < theta * (dist - offset) {
                    // Far cell: multipole expansion about the cell centroid,
                    //   Σ_j w_j K(x−x_j) ≈ M K(d) − D·∇K(d) + ½ Q : ∇∇K(d).
                    let d = vec3::sub(x, node.com);
                    acc.add_scaled(&eval_unchecked(id, d), node.monopole);
                    let dip = node.dipole;
                    if vec3::norm2(dip) > 0.0 {
                        acc.add_scaled(&dir_grad(id, d, dip), -1.0);
                    }
                    if let Some(q2) = quad_contract_scalar(id, d, &node.quad) {
                        acc.add_scaled(&KernelValue::Scalar(q2), 1.0);
                    } else {
                        for m in 0..3 {
                            let sigma = node.quad_eigs[m];
                            if sigma != 0.0 {
                                let axis = [
                                    node.quad_axes[0][m],
                                    node.quad_axes[1][m],
                                    node.quad_axes[2][m],
                                ];
                                if let Some(v2) = dir2_grad(id, d, axis) {
                                    acc.add_scaled(&v2, 0.5 * sigma);
                                }
                            }
                        }
                    }
                    continue;
                }
                match node.children {
                    Some(children) => {
                        for &c in children.iter() {
                            if c != usize::MAX {
                                stack.push(c);
                            }
                        }
                    }
                    None => {
                        for slot in node.start..node.end {
                            let j = tree.order[slot];
                            if Some(j) == skip {
                                continue;
                            }
                            let d = vec3::sub(x, tree.points[slot]);
                            if id.singular() && vec3::norm2(d) == 0.0 {
                                return Err(KernelError::CoincidentPoint {
                                    target: target_idx,
                                    source_index: j,
                                });
                            }
                            acc.add_scaled(&eval_unchecked(id, d), tree.weights[slot]);
                        }
                    }
                }
            }
            Ok(acc.into_value())
        }};
    }
    dispatch_arity!(id, go)
}

fn run_per_target<F>(targets: &[Vec3], f: F) -> Result<Vec<KernelValue>, KernelError>
where
    F: Fn(usize, Vec3) -> Result<KernelValue, KernelError> + Send + Sync,
{
    if targets.len() >= 128 {
        targets
            .par_iter()
            .enumerate()
            .map(|(t, &x)| f(t, x))
            .collect()
    } else {
        targets.iter().enumerate().map(|(t, &x)| f(t, x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn cloud(n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                [
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                ]
            })
            .collect()
    }

    #[test]
    fn two_sources_at_unit_distance() {
        let sources = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]];
        let out = kernel_sum(
            KernelId::G,
            &[[0.0, 0.0, 0.0]],
            &sources,
            &[1.0, 1.0],
            SumMethod::Direct,
            Exclusion::None,
        )
        .unwrap();
        assert!((out[0].as_scalar() - 2.0 / (4.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn tree_with_tiny_theta_matches_direct() {
        let sources = cloud(700, 10);
        let targets = cloud(50, 11);
        let weights = vec![1.0; sources.len()];
        let direct = kernel_sum(
            KernelId::G,
            &targets,
            &sources,
            &weights,
            SumMethod::Direct,
            Exclusion::None,
        )
        .unwrap();
        let tree = kernel_sum(
            KernelId::G,
            &targets,
            &sources,
            &weights,
            SumMethod::Tree { theta: 1e-6 },
            Exclusion::None,
        )
        .unwrap();
        for (a, b) in direct.iter().zip(tree.iter()) {
            assert!((a.as_scalar() - b.as_scalar()).abs() <= 1e-13 * a.as_scalar().abs());
        }
    }

    #[test]
    fn tree_accuracy_at_standard_theta() {
        let sources = cloud(5000, 12);
        let weights = vec![1.0; sources.len()];
        let targets: Vec<Vec3> = sources[..400].to_vec();
        let direct = kernel_sum(
            KernelId::G,
            &targets,
            &sources,
            &weights,
            SumMethod::Direct,
            Exclusion::SelfIndex,
        )
        .unwrap();
        let tree = kernel_sum(
            KernelId::G,
            &targets,
            &sources,
            &weights,
            SumMethod::Tree { theta: 0.4 },
            Exclusion::SelfIndex,
        )
        .unwrap();
        let mut max_rel = 0.0f64;
        for (a, b) in direct.iter().zip(tree.iter()) {
            max_rel = max_rel.max((a.as_scalar() - b.as_scalar()).abs() / a.as_scalar().abs());
        }
        assert!(max_rel <= 1e-4, "max relative error {max_rel}");
    }

    #[test]
    fn tree_handles_vector_and_matrix_kernels() {
        let sources = cloud(3000, 13);
        let weights: Vec<f64> = cloud(3000, 14).iter().map(|p| p[0] + 0.5).collect();
        // Targets offset outside the cloud so derivative kernels stay tame.
        let targets: Vec<Vec3> = cloud(40, 15)
            .iter()
            .map(|p| [p[0] + 1.5, p[1], p[2]])
            .collect();
        for (id, tol) in [
            (KernelId::GradG, 5e-4),
            (KernelId::GSt, 5e-4),
            (KernelId::RSt, 2e-3),
            (KernelId::XxR3, 1e-3),
        ] {
            let direct = kernel_sum(
                id,
                &targets,
                &sources,
                &weights,
                SumMethod::Direct,
                Exclusion::None,
            )
            .unwrap();
            let tree = kernel_sum(
                id,
                &targets,
                &sources,
                &weights,
                SumMethod::Tree { theta: 0.4 },
                Exclusion::None,
            )
            .unwrap();
            for (a, b) in direct.iter().zip(tree.iter()) {
                let diff = match (a, b) {
                    (KernelValue::Vector(u), KernelValue::Vector(v)) => vec3::dist(*u, *v),
                    (KernelValue::Matrix(u), KernelValue::Matrix(v)) => {
                        mat3::frobenius(mat3::sub(*u, *v))
                    }
                    _ => unreachable!(),
                };
                assert!(
                    diff <= tol * a.norm(),
                    "{id:?}: rel diff {}",
                    diff / a.norm()
                );
            }
        }
    }

    #[test]
    fn exclusion_matches_manual_subtraction() {
        let sources = cloud(300, 16);
        let weights = vec![1.0; 300];
        let targets: Vec<Vec3> = sources.clone();
        let excl = kernel_sum(
            KernelId::InvR,
            &targets,
            &sources,
            &weights,
            SumMethod::Tree { theta: 0.4 },
            Exclusion::SelfIndex,
        )
        .unwrap();
        let direct = kernel_sum(
            KernelId::InvR,
            &targets,
            &sources,
            &weights,
            SumMethod::Direct,
            Exclusion::SelfIndex,
        )
        .unwrap();
        for (a, b) in excl.iter().zip(direct.iter()) {
            assert!(
                (a.as_scalar() - b.as_scalar()).abs() < 2e-4 * b.as_scalar().abs(),
                "{} vs {}",
                a.as_scalar(),
                b.as_scalar()
            );
        }
    }

    #[test]
    fn coincident_point_is_reported() {
        let sources = [[0.5, 0.5, 0.5], [0.25, 0.5, 0.5]];
        let err = kernel_sum(
            KernelId::G,
            &[[0.25, 0.5, 0.5]],
            &sources,
            &[1.0, 1.0],
            SumMethod::Direct,
            Exclusion::None,
        )
        .unwrap_err();
        match err {
            KernelError::CoincidentPoint { target, source_index } => {
                assert_eq!((target, source_index), (0, 1));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn tree_deterministic_across_thread_counts() {
        let sources = cloud(4000, 17);
        let weights = vec![1.0; sources.len()];
        let targets = cloud(300, 18);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                kernel_sum(
                    KernelId::G,
                    &targets,
                    &sources,
                    &weights,
                    SumMethod::Tree { theta: 0.4 },
                    Exclusion::None,
                )
                .unwrap()
            })
        };
        let a = run(1);
        let b = run(4);
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.as_scalar().to_bits(), y.as_scalar().to_bits());
        }
    }
}
