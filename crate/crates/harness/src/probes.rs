//! Probe-point generation and admissibility filtering.

use crate::scenario::ProbeSpec;
use effmed_core::geometry::Configuration;
use effmed_core::{vec3, Vec3};

/// Deterministic Fibonacci spiral on a sphere.
pub fn fibonacci_shell(center: Vec3, radius: f64, count: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    (0..count)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - y * y).sqrt();
            let t = golden * i as f64;
            [
                center[0] + radius * r * t.cos(),
                center[1] + radius * y,
                center[2] + radius * r * t.sin(),
            ]
        })
        .collect()
}

/// Shell probes with the exclusion rule applied; returns the admissible
/// probes and the number excluded.
pub fn admissible_probes(spec: &ProbeSpec, config: &Configuration) -> (Vec<Vec3>, usize) {
    let all = fibonacci_shell(spec.center, spec.radius, spec.count);
    let cutoff = spec.exclusion_margin * config.radius;
    let mut kept = Vec::with_capacity(all.len());
    let mut excluded = 0;
    for p in all {
        let ok = config
            .centers
            .iter()
            .all(|&c| vec3::dist(p, c) >= cutoff);
        if ok {
            kept.push(p);
        } else {
            excluded += 1;
        }
    }
    (kept, excluded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use effmed_core::geometry::{GeneratorTag, Scaling};

    #[test]
    fn shell_points_sit_on_the_sphere() {
        let pts = fibonacci_shell([1.0, 0.0, -1.0], 2.0, 200);
        assert_eq!(pts.len(), 200);
        for p in &pts {
            assert!((vec3::dist(*p, [1.0, 0.0, -1.0]) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exclusion_rule_is_enforced() {
        let config = Configuration {
            n: 1,
            radius: 0.5,
            scaling: Scaling::Power {
                coeff: 0.5,
                exponent: 0.0,
            },
            generator: GeneratorTag::Manual,
            seed: 0,
            centers: vec![[1.25, 0.0, 0.0]],
        };
        let spec = ProbeSpec {
            center: [0.0; 3],
            radius: 1.25,
            count: 256,
            exclusion_margin: 2.0,
        };
        let (kept, excluded) = admissible_probes(&spec, &config);
        assert!(excluded > 0);
        assert_eq!(kept.len() + excluded, 256);
        for p in &kept {
            assert!(vec3::dist(*p, [1.25, 0.0, 0.0]) >= 1.0);
        }
    }
}
