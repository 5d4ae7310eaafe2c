//! Configuration generators: periodic lattice, i.i.d. sampling from ρ,
//! hardcore dart throwing, and a scaled Poisson point process.

use super::{rng_for, Configuration, Density, Domain, GeneratorTag, GeometryError, Scaling};
use crate::vec3::{self, Vec3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use std::f64::consts::PI;

/// `m³` centers at the cell midpoints of the uniform `m×m×m` grid over a
/// box domain.
pub fn generate_periodic(
    m: usize,
    domain: &Domain,
    scaling: Scaling,
) -> Result<Configuration, GeometryError> {
    if m < 1 {
        return Err(GeometryError::Precondition("m must be >= 1".into()));
    }
    let (lo, hi) = match domain {
        Domain::Box { lo, hi } => (*lo, *hi),
        Domain::Ball { .. } => {
            return Err(GeometryError::Precondition(
                "periodic generator requires a box domain".into(),
            ))
        }
    };
    domain.validate()?;
    let n = m * m * m;
    let mut centers = Vec::with_capacity(n);
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                centers.push([
                    lo[0] + (i as f64 + 0.5) * (hi[0] - lo[0]) / m as f64,
                    lo[1] + (j as f64 + 0.5) * (hi[1] - lo[1]) / m as f64,
                    lo[2] + (k as f64 + 0.5) * (hi[2] - lo[2]) / m as f64,
                ]);
            }
        }
    }
    let cfg = Configuration {
        n,
        radius: scaling.radius_for(n, domain.volume()),
        scaling,
        generator: GeneratorTag::Periodic,
        seed: 0,
        centers,
    };
    cfg.validate(domain, domain.volume())?;
    Ok(cfg)
}

/// Rejection-sample one point distributed as ρ.
fn sample_point(rho: &Density, bbox: (Vec3, Vec3), sup: f64, rng: &mut ChaCha8Rng) -> Vec3 {
    let (lo, hi) = bbox;
    loop {
        let x = [
            lo[0] + rng.random::<f64>() * (hi[0] - lo[0]),
            lo[1] + rng.random::<f64>() * (hi[1] - lo[1]),
            lo[2] + rng.random::<f64>() * (hi[2] - lo[2]),
        ];
        let u: f64 = rng.random();
        if u * sup < rho.value(x) {
            return x;
        }
    }
}

/// `n` centers drawn i.i.d. with law ρ. Points violating ball disjointness
/// are resampled, up to `100·n` attempts in total.
pub fn generate_iid(
    n: usize,
    rho: &Density,
    scaling: Scaling,
    seed: u64,
) -> Result<Configuration, GeometryError> {
    if n < 1 {
        return Err(GeometryError::Precondition("n must be >= 1".into()));
    }
    rho.validate()?;
    generate_with_min_distance(n, rho, scaling, seed, 0.0, 100 * n, GeneratorTag::Iid { retries: 0 })
}

/// Dart throwing with rejection of candidates closer than `c·n^{-1/3}` to
/// any accepted point.
pub fn generate_hardcore(
    n: usize,
    rho: &Density,
    c: f64,
    scaling: Scaling,
    seed: u64,
) -> Result<Configuration, GeometryError> {
    if n < 1 {
        return Err(GeometryError::Precondition("n must be >= 1".into()));
    }
    rho.validate()?;
    let krho = rho.support().volume();
    // Heuristic packing feasibility: n · (c n^{-1/3})³ < 6|K_ρ|/π.
    let c3 = c * c * c;
    let budget = 6.0 * krho / PI;
    if c3 >= budget {
        return Err(GeometryError::PackingInfeasible { c3, budget });
    }
    let threshold = c * (n as f64).powf(-1.0 / 3.0);
    generate_with_min_distance(
        n,
        rho,
        scaling,
        seed,
        threshold,
        2000 * n,
        GeneratorTag::Hardcore { c },
    )
}

fn generate_with_min_distance(
    n: usize,
    rho: &Density,
    scaling: Scaling,
    seed: u64,
    threshold: f64,
    max_attempts: usize,
    tag: GeneratorTag,
) -> Result<Configuration, GeometryError> {
    let mut rng = rng_for(seed, 0);
    let bbox = rho.support().bounding_box();
    let sup = rho.sup();
    let krho = rho.support().volume();
    let radius = scaling.radius_for(n, krho);
    // Both the hardcore threshold and ball disjointness must hold.
    let min_gap = threshold.max(2.0 * radius);

    let mut centers: Vec<Vec3> = Vec::with_capacity(n);
    let mut attempts = 0usize;
    let mut retries = 0usize;
    while centers.len() < n {
        if attempts >= max_attempts {
            return match tag {
                GeneratorTag::Hardcore { .. } => Err(GeometryError::Saturation {
                    achieved: centers.len(),
                    requested: n,
                }),
                _ => Err(GeometryError::OverlapUnresolvable { attempts }),
            };
        }
        attempts += 1;
        let x = sample_point(rho, bbox, sup, &mut rng);
        let ok = if min_gap > 0.0 {
            centers.iter().all(|&c| vec3::dist(c, x) >= min_gap)
        } else {
            true
        };
        if ok {
            centers.push(x);
        } else {
            retries += 1;
        }
    }
    let tag = match tag {
        GeneratorTag::Iid { .. } => GeneratorTag::Iid { retries },
        other => other,
    };
    let cfg = Configuration {
        n,
        radius,
        scaling,
        generator: tag,
        seed,
        centers,
    };
    cfg.validate(&rho.support(), krho)?;
    Ok(cfg)
}

/// Scaled stationary Poisson process: `Poisson(λ₀·|window|/ε³)` points,
/// uniform over the window. Ball disjointness is NOT enforced; this
/// generator exists to exercise the regime outside the hardcore criterion.
pub fn generate_poisson(
    intensity: f64,
    window: &Domain,
    eps: f64,
    scaling: Scaling,
    seed: u64,
) -> Result<Configuration, GeometryError> {
    if intensity < 0.0 || eps <= 0.0 {
        return Err(GeometryError::Precondition(
            "poisson generator needs intensity >= 0 and eps > 0".into(),
        ));
    }
    window.validate()?;
    let mut rng = rng_for(seed, 0);
    let mean = intensity * window.volume() / (eps * eps * eps);
    let n = if mean == 0.0 {
        0
    } else {
        Poisson::new(mean)
            .map_err(|e| GeometryError::Precondition(format!("poisson mean invalid: {e}")))?
            .sample(&mut rng) as usize
    };
    let (lo, hi) = window.bounding_box();
    let mut centers = Vec::with_capacity(n);
    while centers.len() < n {
        let x = [
            lo[0] + rng.random::<f64>() * (hi[0] - lo[0]),
            lo[1] + rng.random::<f64>() * (hi[1] - lo[1]),
            lo[2] + rng.random::<f64>() * (hi[2] - lo[2]),
        ];
        if window.contains(x) {
            centers.push(x);
        }
    }
    Ok(Configuration {
        n,
        radius: scaling.radius_for(n, window.volume()),
        scaling,
        generator: GeneratorTag::Poisson { intensity, eps },
        seed,
        centers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{min_distance_bucketed, min_distance_pair};

    #[test]
    fn periodic_two_per_side() {
        let cfg = generate_periodic(2, &Domain::unit_cube(), Scaling::Reflexive).unwrap();
        assert_eq!(cfg.n, 8);
        for c in &cfg.centers {
            for d in 0..3 {
                assert!((c[d].abs() - 0.25).abs() < 1e-15);
            }
        }
        assert!((cfg.min_distance() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn periodic_single_center_at_midpoint() {
        let cfg = generate_periodic(1, &Domain::unit_cube(), Scaling::Reflexive).unwrap();
        assert_eq!(cfg.n, 1);
        assert!(vec3::norm(cfg.centers[0]) < 1e-15);
    }

    #[test]
    fn periodic_lattice_spacing() {
        let cfg = generate_periodic(10, &Domain::unit_cube(), Scaling::Reflexive).unwrap();
        assert!((cfg.min_distance() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn iid_is_deterministic_given_seed() {
        let rho = Density::unit_ball();
        let a = generate_iid(200, &rho, Scaling::Reflexive, 7).unwrap();
        let b = generate_iid(200, &rho, Scaling::Reflexive, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_iid(200, &rho, Scaling::Reflexive, 8).unwrap();
        assert_ne!(a.centers, c.centers);
    }

    #[test]
    fn iid_single_center_inside_support() {
        let rho = Density::unit_ball();
        let cfg = generate_iid(1, &rho, Scaling::Reflexive, 3).unwrap();
        assert!(rho.support().contains(cfg.centers[0]));
    }

    #[test]
    fn iid_law_of_large_numbers() {
        let rho = Density::unit_ball();
        let cfg = generate_iid(1000, &rho, Scaling::Reflexive, 7).unwrap();
        let mut mean = [0.0; 3];
        for c in &cfg.centers {
            vec3::axpy(&mut mean, 1.0 / 1000.0, *c);
        }
        assert!(vec3::norm(mean) < 0.05, "mean {mean:?}");
    }

    #[test]
    fn hardcore_respects_min_distance() {
        let rho = Density::unit_cube();
        let n = 100;
        let c = 0.9;
        let cfg = generate_hardcore(n, &rho, c, Scaling::Reflexive, 5).unwrap();
        let threshold = c * (n as f64).powf(-1.0 / 3.0);
        assert!(cfg.min_distance() >= threshold);
        // threshold scale for c = 1 would be n^{-1/3} ≈ 0.2154
        assert!(((n as f64).powf(-1.0 / 3.0) - 0.2154).abs() < 1e-3);
    }

    #[test]
    fn hardcore_with_zero_c_matches_iid() {
        let rho = Density::unit_cube();
        let hc = generate_hardcore(150, &rho, 0.0, Scaling::Reflexive, 11).unwrap();
        let iid = generate_iid(150, &rho, Scaling::Reflexive, 11).unwrap();
        assert_eq!(hc.centers, iid.centers);
    }

    #[test]
    fn hardcore_margin_consistent_with_scan() {
        let rho = Density::unit_cube();
        let n = 500;
        let c = 0.8;
        let cfg = generate_hardcore(n, &rho, c, Scaling::Reflexive, 13).unwrap();
        let (d, _, _) = min_distance_pair(&cfg.centers);
        assert!(d >= c * (n as f64).powf(-1.0 / 3.0));
        assert_eq!(d.to_bits(), min_distance_bucketed(&cfg.centers).to_bits());
    }

    #[test]
    fn hardcore_infeasible_packing_rejected() {
        let rho = Density::unit_cube();
        let err = generate_hardcore(100, &rho, 1.4, Scaling::Reflexive, 1).unwrap_err();
        match err {
            GeometryError::PackingInfeasible { .. } => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn poisson_empty_limit() {
        let cfg =
            generate_poisson(0.0, &Domain::unit_cube(), 1.0, Scaling::Power { coeff: 1.0, exponent: 1.0 }, 3)
                .unwrap();
        assert_eq!(cfg.n, 0);
        assert_eq!(cfg.radius, 0.0);
    }

    #[test]
    fn poisson_count_concentration() {
        let window = Domain::unit_cube();
        let mut within = 0;
        let trials = 200;
        for seed in 0..trials {
            let cfg = generate_poisson(1000.0, &window, 1.0, Scaling::Reflexive, seed).unwrap();
            if (cfg.n as f64 - 1000.0).abs() <= 3.0 * 1000.0_f64.sqrt() {
                within += 1;
            }
        }
        assert!(within >= 198, "only {within}/{trials} within 3 sigma");
    }

    #[test]
    fn poisson_disjoint_window_counts_independent() {
        // Chi-squared independence test on counts in two disjoint half-windows,
        // binned into terciles, over 200 seeds.
        let window = Domain::unit_cube();
        let mut counts = Vec::new();
        for seed in 0..200 {
            let cfg = generate_poisson(400.0, &window, 1.0, Scaling::Reflexive, seed).unwrap();
            let left = cfg.centers.iter().filter(|c| c[0] < 0.0).count() as f64;
            let right = cfg.n as f64 - left;
            counts.push((left, right));
        }
        let tercile = |vals: &mut Vec<f64>| {
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            (vals[vals.len() / 3], vals[2 * vals.len() / 3])
        };
        let mut lefts: Vec<f64> = counts.iter().map(|c| c.0).collect();
        let mut rights: Vec<f64> = counts.iter().map(|c| c.1).collect();
        let (l1, l2) = tercile(&mut lefts);
        let (r1, r2) = tercile(&mut rights);
        let bin = |v: f64, q1: f64, q2: f64| {
            if v < q1 {
                0
            } else if v < q2 {
                1
            } else {
                2
            }
        };
        let mut table = [[0.0f64; 3]; 3];
        for (l, r) in &counts {
            table[bin(*l, l1, l2)][bin(*r, r1, r2)] += 1.0;
        }
        let total = 200.0;
        let mut chi2 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let row: f64 = table[i].iter().sum();
                let col: f64 = (0..3).map(|k| table[k][j]).sum();
                let expect = row * col / total;
                if expect > 0.0 {
                    chi2 += (table[i][j] - expect).powi(2) / expect;
                }
            }
        }
        // df = 4, critical value at alpha = 0.001 is 18.47
        assert!(chi2 < 18.47, "chi2 = {chi2}");
    }
}
