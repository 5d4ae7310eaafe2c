//! Sphere configurations, their generators, limit densities and ball
//! cubature.

pub mod cubature;
pub mod density;
pub mod generate;

pub use cubature::BallCubature;
pub use density::Density;
pub use generate::{generate_hardcore, generate_iid, generate_periodic, generate_poisson};

use crate::vec3::{self, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("domain has non-positive volume")]
    DegenerateDomain,
    #[error("density mass {0} deviates from 1 by more than 1e-10")]
    BadMass(f64),
    #[error("density is negative or malformed: {0}")]
    BadDensity(String),
    #[error("balls {i} and {j} overlap: center distance {dist} <= 2r = {two_r}")]
    Overlap {
        i: usize,
        j: usize,
        dist: f64,
        two_r: f64,
    },
    #[error("center {0} lies outside the carrier domain")]
    CenterOutside(usize),
    #[error("declared scaling inconsistent: lambda_n = {actual} vs declared {declared}")]
    ScalingMismatch { actual: f64, declared: f64 },
    #[error("could not resolve overlaps after {attempts} resampling attempts (volume fraction too large for i.i.d. placement)")]
    OverlapUnresolvable { attempts: usize },
    #[error("hardcore sampling saturated after placing {achieved} of {requested} points")]
    Saturation { achieved: usize, requested: usize },
    #[error("hardcore packing precondition failed: n c^3 / n = c^3 = {c3} >= 6|K|/pi = {budget}")]
    PackingInfeasible { c3: f64, budget: f64 },
    #[error("{0}")]
    Precondition(String),
}

/// Carrier set for centers and density supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    Box { lo: Vec3, hi: Vec3 },
    Ball { center: Vec3, radius: f64 },
}

impl Domain {
    pub fn unit_cube() -> Domain {
        Domain::Box {
            lo: [-0.5, -0.5, -0.5],
            hi: [0.5, 0.5, 0.5],
        }
    }

    pub fn unit_ball() -> Domain {
        Domain::Ball {
            center: [0.0; 3],
            radius: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match self {
            Domain::Box { lo, hi } => {
                if (0..3).any(|d| lo[d] >= hi[d]) {
                    return Err(GeometryError::DegenerateDomain);
                }
            }
            Domain::Ball { radius, .. } => {
                if *radius <= 0.0 {
                    return Err(GeometryError::DegenerateDomain);
                }
            }
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        match self {
            Domain::Box { lo, hi } => (0..3).map(|d| hi[d] - lo[d]).product(),
            Domain::Ball { radius, .. } => 4.0 * std::f64::consts::PI / 3.0 * radius.powi(3),
        }
    }

    pub fn contains(&self, x: Vec3) -> bool {
        match self {
            Domain::Box { lo, hi } => (0..3).all(|d| x[d] >= lo[d] && x[d] <= hi[d]),
            Domain::Ball { center, radius } => vec3::dist(x, *center) <= *radius,
        }
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        match self {
            Domain::Box { lo, hi } => (*lo, *hi),
            Domain::Ball { center, radius } => (
                [center[0] - radius, center[1] - radius, center[2] - radius],
                [center[0] + radius, center[1] + radius, center[2] + radius],
            ),
        }
    }

    pub fn center(&self) -> Vec3 {
        match self {
            Domain::Box { lo, hi } => vec3::scale(vec3::add(*lo, *hi), 0.5),
            Domain::Ball { center, .. } => *center,
        }
    }

    pub fn translated(&self, t: Vec3) -> Domain {
        match self {
            Domain::Box { lo, hi } => Domain::Box {
                lo: vec3::add(*lo, t),
                hi: vec3::add(*hi, t),
            },
            Domain::Ball { center, radius } => Domain::Ball {
                center: vec3::add(*center, t),
                radius: *radius,
            },
        }
    }
}

/// How the common sphere radius depends on the count `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scaling {
    /// `r_n = 1/n`, the critical scaling of the strange-term and Brinkman
    /// limits.
    Reflexive,
    /// Fixed volume fraction: `r_n = (3 λ |K_ρ| / (4π n))^{1/3}`.
    Fraction { lambda: f64 },
    /// `r_n = coeff · n^{-exponent}`; used for sub/super-critical studies.
    Power { coeff: f64, exponent: f64 },
}

impl Scaling {
    /// Radius for `n` spheres; `krho_volume` is `|K_ρ|`.
    pub fn radius_for(&self, n: usize, krho_volume: f64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let nf = n as f64;
        match self {
            Scaling::Reflexive => 1.0 / nf,
            Scaling::Fraction { lambda } => {
                (3.0 * lambda * krho_volume / (4.0 * std::f64::consts::PI * nf)).cbrt()
            }
            Scaling::Power { coeff, exponent } => coeff * nf.powf(-exponent),
        }
    }
}

/// Tag recording how a configuration was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorTag {
    Periodic,
    Iid {
        /// Resampling attempts spent restoring disjointness.
        retries: usize,
    },
    Hardcore {
        c: f64,
    },
    Poisson {
        intensity: f64,
        eps: f64,
    },
    Manual,
}

/// A cloud of `n` disjoint spheres with a common radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub n: usize,
    pub radius: f64,
    pub scaling: Scaling,
    pub generator: GeneratorTag,
    pub seed: u64,
    pub centers: Vec<Vec3>,
}

impl Configuration {
    /// Validate the configuration invariants against its carrier domain.
    ///
    /// `krho_volume` is the volume of the density support used to declare
    /// the scaling; pass the carrier volume for periodic configurations.
    pub fn validate(&self, carrier: &Domain, krho_volume: f64) -> Result<(), GeometryError> {
        if self.centers.len() != self.n {
            return Err(GeometryError::Precondition(format!(
                "center count {} does not match n = {}",
                self.centers.len(),
                self.n
            )));
        }
        for (i, &c) in self.centers.iter().enumerate() {
            if !carrier.contains(c) {
                return Err(GeometryError::CenterOutside(i));
            }
        }
        if self.n >= 2 {
            let (d, i, j) = min_distance_pair(&self.centers);
            if d <= 2.0 * self.radius {
                return Err(GeometryError::Overlap {
                    i,
                    j,
                    dist: d,
                    two_r: 2.0 * self.radius,
                });
            }
        }
        // Volume-fraction bookkeeping must match the declared scaling law.
        if self.n > 0 {
            match self.scaling {
                Scaling::Fraction { lambda } => {
                    let actual = self.volume_fraction(krho_volume);
                    if (actual - lambda).abs() > 1e-12 * lambda.abs().max(1.0) {
                        return Err(GeometryError::ScalingMismatch {
                            actual,
                            declared: lambda,
                        });
                    }
                }
                Scaling::Reflexive => {
                    let expect = 1.0 / self.n as f64;
                    if (self.radius - expect).abs() > 1e-12 * expect {
                        return Err(GeometryError::ScalingMismatch {
                            actual: self.radius,
                            declared: expect,
                        });
                    }
                }
                Scaling::Power { .. } => {}
            }
        }
        Ok(())
    }

    /// `λ_n = (4π/3) n r_n³ / |K_ρ|`.
    pub fn volume_fraction(&self, krho_volume: f64) -> f64 {
        4.0 * std::f64::consts::PI / 3.0 * self.n as f64 * self.radius.powi(3) / krho_volume
    }

    /// Minimum center distance `d_n` (`+∞` for fewer than two centers).
    pub fn min_distance(&self) -> f64 {
        if self.n < 2 {
            return f64::INFINITY;
        }
        min_distance_pair(&self.centers).0
    }

    pub fn translated(&self, t: Vec3) -> Configuration {
        Configuration {
            centers: self.centers.iter().map(|&c| vec3::add(c, t)).collect(),
            ..self.clone()
        }
    }
}

/// Exhaustive minimum-distance scan; returns `(distance, i, j)`.
pub fn min_distance_pair(centers: &[Vec3]) -> (f64, usize, usize) {
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..centers.len() {
        for j in (i + 1)..centers.len() {
            let d = vec3::dist(centers[i], centers[j]);
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    best
}

/// Grid-bucketed minimum distance; exact, and much faster than the scan for
/// large clouds.
pub fn min_distance_bucketed(centers: &[Vec3]) -> f64 {
    let n = centers.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for c in centers {
        for d in 0..3 {
            lo[d] = lo[d].min(c[d]);
            hi[d] = hi[d].max(c[d]);
        }
    }
    let extent = (0..3).map(|d| hi[d] - lo[d]).fold(0.0f64, f64::max);
    if extent == 0.0 {
        return 0.0;
    }
    let cells_per_axis = ((n as f64).cbrt().ceil() as usize).clamp(1, 128);
    let cell = extent / cells_per_axis as f64;
    let dims: [usize; 3] = std::array::from_fn(|d| {
        (((hi[d] - lo[d]) / cell).ceil() as usize).max(1)
    });
    let index = |c: Vec3| -> [usize; 3] {
        std::array::from_fn(|d| (((c[d] - lo[d]) / cell) as usize).min(dims[d] - 1))
    };
    let mut buckets: std::collections::HashMap<[usize; 3], Vec<usize>> =
        std::collections::HashMap::new();
    for (i, &c) in centers.iter().enumerate() {
        buckets.entry(index(c)).or_default().push(i);
    }
    // Expand the neighbour ring until a pair is found, then keep going until
    // the ring bound exceeds the best distance found.
    let mut best = f64::INFINITY;
    let mut ring = 1usize;
    loop {
        for (i, &c) in centers.iter().enumerate() {
            let idx = index(c);
            let lo_r: [isize; 3] = std::array::from_fn(|d| idx[d] as isize - ring as isize);
            let hi_r: [isize; 3] = std::array::from_fn(|d| idx[d] as isize + ring as isize);
            for bx in lo_r[0]..=hi_r[0] {
                for by in lo_r[1]..=hi_r[1] {
                    for bz in lo_r[2]..=hi_r[2] {
                        if bx < 0 || by < 0 || bz < 0 {
                            continue;
                        }
                        let key = [bx as usize, by as usize, bz as usize];
                        if key[0] >= dims[0] || key[1] >= dims[1] || key[2] >= dims[2] {
                            continue;
                        }
                        if let Some(list) = buckets.get(&key) {
                            for &j in list {
                                if j > i {
                                    best = best.min(vec3::dist(c, centers[j]));
                                }
                            }
                        }
                    }
                }
            }
        }
        // Any pair within `ring * cell` of each other has been examined.
        if best <= ring as f64 * cell || ring >= dims.iter().copied().max().unwrap_or(1) {
            return best;
        }
        ring += 1;
    }
}

/// Counter-based reproducible RNG keyed by `(seed, stream)`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive a per-replicate seed from a base seed (splitmix64 step).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn domain_volumes() {
        assert!((Domain::unit_cube().volume() - 1.0).abs() < 1e-15);
        let v = Domain::unit_ball().volume();
        assert!((v - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn bucketed_min_distance_matches_exhaustive() {
        let mut rng = rng_for(42, 0);
        let centers: Vec<Vec3> = (0..2000)
            .map(|_| {
                [
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                ]
            })
            .collect();
        let exact = min_distance_pair(&centers).0;
        let bucketed = min_distance_bucketed(&centers);
        assert_eq!(exact.to_bits(), bucketed.to_bits());
    }

    #[test]
    fn overlap_is_detected_with_pair() {
        let cfg = Configuration {
            n: 2,
            radius: 0.5,
            scaling: Scaling::Reflexive,
            generator: GeneratorTag::Manual,
            seed: 0,
            centers: vec![[0.0, 0.0, 0.0], [0.5, 0.0, 0.0]],
        };
        let err = cfg.validate(&Domain::unit_ball(), 1.0).unwrap_err();
        match err {
            GeometryError::Overlap { i, j, .. } => assert_eq!((i, j), (0, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fraction_scaling_consistency() {
        let krho = Domain::unit_cube().volume();
        let lambda = 0.02;
        let n = 64;
        let r = Scaling::Fraction { lambda }.radius_for(n, krho);
        let cfg = Configuration {
            n,
            radius: r,
            scaling: Scaling::Fraction { lambda },
            generator: GeneratorTag::Manual,
            seed: 0,
            centers: generate_periodic(4, &Domain::unit_cube(), Scaling::Fraction { lambda })
                .unwrap()
                .centers,
        };
        assert!((cfg.volume_fraction(krho) - lambda).abs() < 1e-15);
        cfg.validate(&Domain::unit_cube(), krho).unwrap();
    }

    #[test]
    fn config_json_roundtrip() {
        let cfg = generate_periodic(2, &Domain::unit_cube(), Scaling::Reflexive).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: Configuration = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        // Schema fields exactly as documented.
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["n", "radius", "scaling", "generator", "seed", "centers"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
