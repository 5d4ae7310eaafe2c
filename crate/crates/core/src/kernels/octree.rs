//! Octree over source points with monopole and dipole moments per cell,
//! used for Barnes–Hut style far-field summation.

use crate::mat3::{self, Mat3};
use crate::vec3::{self, Vec3};

pub(crate) const LEAF_CAPACITY: usize = 32;

#[derive(Debug, Clone)]
pub struct Node {
    pub center: Vec3,
    pub half: f64,
    /// Children indices into `nodes`, `usize::MAX` for absent octants.
    pub children: Option<[usize; 8]>,
    /// Range into the reordered source array covered by this cell.
    pub start: usize,
    pub end: usize,
    /// Sum of weights in the cell.
    pub monopole: f64,
    /// Expansion center: the |weight|-weighted centroid of the cell.
    pub com: Vec3,
    /// Weighted first moment about `com` (nonzero only for signed weights).
    pub dipole: Vec3,
    /// Distance from `com` to the geometric cell center (opening guard).
    pub offset: f64,
    /// Weighted second moment about `com`.
    pub quad: Mat3,
    /// Eigenvalues and eigenvector columns of `quad`.
    pub quad_eigs: Vec3,
    pub quad_axes: Mat3,
}

#[derive(Debug, Clone)]
pub struct Octree {
    pub nodes: Vec<Node>,
    /// Source positions in tree order.
    pub points: Vec<Vec3>,
    /// Weights in tree order.
    pub weights: Vec<f64>,
    /// Original source index of each tree slot.
    pub order: Vec<usize>,
    /// Tree slot of each original source index.
    pub slot_of: Vec<usize>,
}

impl Octree {
    pub fn build(sources: &[Vec3], weights: &[f64]) -> Octree {
        assert_eq!(sources.len(), weights.len());
        let n = sources.len();
        let (center, half) = bounding_cube(sources);
        let mut order: Vec<usize> = (0..n).collect();
        let mut points: Vec<Vec3> = sources.to_vec();
        let mut w: Vec<f64> = weights.to_vec();
        let mut nodes = Vec::new();
        nodes.push(Node {
            center,
            half,
            children: None,
            start: 0,
            end: n,
            monopole: 0.0,
            com: center,
            dipole: [0.0; 3],
            offset: 0.0,
            quad: mat3::ZERO,
            quad_eigs: [0.0; 3],
            quad_axes: mat3::IDENTITY,
        });
        // Iterative subdivision; reorders points in place so each node covers
        // a contiguous slice.
        let mut stack = vec![0usize];
        while let Some(idx) = stack.pop() {
            let (start, end, center, half) = {
                let nd = &nodes[idx];
                (nd.start, nd.end, nd.center, nd.half)
            };
            if end - start <= LEAF_CAPACITY {
                continue;
            }
            // Partition the slice into the eight octants.
            let mut buckets: [Vec<usize>; 8] = Default::default();
            for slot in start..end {
                let p = points[slot];
                let mut oct = 0usize;
                if p[0] >= center[0] {
                    oct |= 1;
                }
                if p[1] >= center[1] {
                    oct |= 2;
                }
                if p[2] >= center[2] {
                    oct |= 4;
                }
                buckets[oct].push(slot);
            }
            let mut permuted_points = Vec::with_capacity(end - start);
            let mut permuted_w = Vec::with_capacity(end - start);
            let mut permuted_order = Vec::with_capacity(end - start);
            let mut children = [usize::MAX; 8];
            let mut cursor = start;
            for (oct, bucket) in buckets.iter().enumerate() {
                if bucket.is_empty() {
                    continue;
                }
                let q = half / 2.0;
                let child_center = [
                    center[0] + if oct & 1 != 0 { q } else { -q },
                    center[1] + if oct & 2 != 0 { q } else { -q },
                    center[2] + if oct & 4 != 0 { q } else { -q },
                ];
                let child_idx = nodes.len();
                nodes.push(Node {
                    center: child_center,
                    half: q,
                    children: None,
                    start: cursor,
                    end: cursor + bucket.len(),
                    monopole: 0.0,
                    com: child_center,
                    dipole: [0.0; 3],
                    offset: 0.0,
                    quad: mat3::ZERO,
                    quad_eigs: [0.0; 3],
                    quad_axes: mat3::IDENTITY,
                });
                children[oct] = child_idx;
                cursor += bucket.len();
                for &slot in bucket {
                    permuted_points.push(points[slot]);
                    permuted_w.push(w[slot]);
                    permuted_order.push(order[slot]);
                }
                stack.push(child_idx);
            }
            points[start..end].copy_from_slice(&permuted_points);
            w[start..end].copy_from_slice(&permuted_w);
            order[start..end].copy_from_slice(&permuted_order);
            nodes[idx].children = Some(children);
        }
        let mut slot_of = vec![0usize; n];
        for (slot, &orig) in order.iter().enumerate() {
            slot_of[orig] = slot;
        }
        let mut tree = Octree {
            nodes,
            points,
            weights: w,
            order,
            slot_of,
        };
        tree.compute_moments();
        tree
    }

    fn compute_moments(&mut self) {
        // Children are pushed after their parent, so a reverse pass is
        // bottom-up. The expansion center is the |weight|-weighted centroid,
        // which kills the dipole for sign-definite weights.
        for idx in (0..self.nodes.len()).rev() {
            let node = &self.nodes[idx];
            let (mut wabs, mut com) = (0.0, [0.0; 3]);
            for slot in node.start..node.end {
                let a = self.weights[slot].abs();
                wabs += a;
                vec3::axpy(&mut com, a, self.points[slot]);
            }
            let com = if wabs > 0.0 {
                vec3::scale(com, 1.0 / wabs)
            } else {
                node.center
            };
            let (mono, dip, quad) = match node.children {
                None => {
                    let mut m = 0.0;
                    let mut d = [0.0; 3];
                    let mut q = mat3::ZERO;
                    for slot in node.start..node.end {
                        let w = self.weights[slot];
                        m += w;
                        let delta = vec3::sub(self.points[slot], com);
                        vec3::axpy(&mut d, w, delta);
                        for i in 0..3 {
                            for j in 0..3 {
                                q[i][j] += w * delta[i] * delta[j];
                            }
                        }
                    }
                    (m, d, q)
                }
                Some(children) => {
                    let mut m = 0.0;
                    let mut d = [0.0; 3];
                    let mut q = mat3::ZERO;
                    for &c in &children {
                        if c == usize::MAX {
                            continue;
                        }
                        let child = &self.nodes[c];
                        m += child.monopole;
                        vec3::axpy(&mut d, 1.0, child.dipole);
                        let delta = vec3::sub(child.com, com);
                        vec3::axpy(&mut d, child.monopole, delta);
                        // parallel-axis shift of the second moment
                        for i in 0..3 {
                            for j in 0..3 {
                                q[i][j] += child.quad[i][j]
                                    + child.dipole[i] * delta[j]
                                    + delta[i] * child.dipole[j]
                                    + child.monopole * delta[i] * delta[j];
                            }
                        }
                    }
                    (m, d, q)
                }
            };
            let (eigs, axes) = mat3::sym_eigen(quad);
            let node = &mut self.nodes[idx];
            node.offset = vec3::dist(com, node.center);
            node.com = com;
            node.monopole = mono;
            node.dipole = dip;
            node.quad = quad;
            node.quad_eigs = eigs;
            node.quad_axes = axes;
        }
    }

    /// True if the original source index lies in the given node.
    #[inline]
    pub fn node_contains(&self, node: &Node, original_index: usize) -> bool {
        let slot = self.slot_of[original_index];
        node.start <= slot && slot < node.end
    }
}

fn bounding_cube(points: &[Vec3]) -> (Vec3, f64) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for d in 0..3 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    if points.is_empty() {
        return ([0.0; 3], 1.0);
    }
    let center = [
        0.5 * (lo[0] + hi[0]),
        0.5 * (lo[1] + hi[1]),
        0.5 * (lo[2] + hi[2]),
    ];
    let mut half = 0.0f64;
    for d in 0..3 {
        half = half.max(0.5 * (hi[d] - lo[d]));
    }
    (center, half.max(1e-12))
}
