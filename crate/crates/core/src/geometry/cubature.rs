//! Degree-5 cubature over the unit ball: a 3-point Gauss rule in the radius
//! (weight `r² dr` on `[0,1]`) crossed with the 12-point icosahedral
//! spherical 5-design.

use crate::vec3::{self, Vec3};

/// Gauss nodes for weight `r²` on `[0,1]` (exact through degree 5).
const RADIAL_NODES: [f64; 3] = [
    0.294_997_790_111_501_62,
    0.652_996_233_961_648_12,
    0.927_005_975_926_850_27,
];
const RADIAL_WEIGHTS: [f64; 3] = [
    0.029_950_703_008_580_698,
    0.146_246_269_259_866_02,
    0.157_136_361_064_886_61,
];

/// Icosahedron vertex coordinates (unit sphere): (0, ±a, ±b) cyclic.
const ICO_A: f64 = 0.525_731_112_119_133_6;
const ICO_B: f64 = 0.850_650_808_352_039_9;

/// Nodes and weights integrating over the unit ball, exact for all
/// polynomials of total degree ≤ `degree`.
#[derive(Debug, Clone)]
pub struct BallCubature {
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub degree: u32,
}

impl BallCubature {
    /// The fixed degree-5 product rule (36 nodes).
    pub fn degree5() -> BallCubature {
        let mut sphere = Vec::with_capacity(12);
        for s1 in [1.0, -1.0] {
            for s2 in [1.0, -1.0] {
                let v = [0.0, s1 * ICO_A, s2 * ICO_B];
                sphere.push(v);
                sphere.push([v[1], v[2], v[0]]);
                sphere.push([v[2], v[0], v[1]]);
            }
        }
        let mut nodes = Vec::with_capacity(36);
        let mut weights = Vec::with_capacity(36);
        let sphere_w = 4.0 * std::f64::consts::PI / 12.0;
        for (r, wr) in RADIAL_NODES.iter().zip(RADIAL_WEIGHTS.iter()) {
            for dir in &sphere {
                nodes.push(vec3::scale(*dir, *r));
                weights.push(wr * sphere_w);
            }
        }
        BallCubature {
            nodes,
            weights,
            degree: 5,
        }
    }

    /// Integrate `f` over the ball `B(center, radius)`.
    pub fn integrate<F: FnMut(Vec3) -> f64>(&self, center: Vec3, radius: f64, mut f: F) -> f64 {
        let jac = radius.powi(3);
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(|(node, w)| w * jac * f(vec3::add(center, vec3::scale(*node, radius))))
            .sum()
    }

    /// Nodes of the rule mapped onto `B(center, radius)` with their weights.
    pub fn mapped(&self, center: Vec3, radius: f64) -> Vec<(Vec3, f64)> {
        let jac = radius.powi(3);
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(|(node, w)| (vec3::add(center, vec3::scale(*node, radius)), w * jac))
            .collect()
    }
}

/// Analytic `∫_{B(0,1)} x^a y^b z^c dx` (zero when any exponent is odd).
pub fn ball_monomial_integral(a: u32, b: u32, c: u32) -> f64 {
    if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
        return 0.0;
    }
    fn double_factorial(n: i64) -> f64 {
        if n <= 0 {
            1.0
        } else {
            n as f64 * double_factorial(n - 2)
        }
    }
    let k = (a + b + c) as i64;
    let sphere_avg = double_factorial(a as i64 - 1)
        * double_factorial(b as i64 - 1)
        * double_factorial(c as i64 - 1)
        / double_factorial(k + 1);
    4.0 * std::f64::consts::PI * sphere_avg / (k as f64 + 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_ball_volume() {
        let rule = BallCubature::degree5();
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn exact_on_all_monomials_up_to_degree_5() {
        let rule = BallCubature::degree5();
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                for c in 0..=(5 - a - b) {
                    let quad = rule.integrate([0.0; 3], 1.0, |x| {
                        x[0].powi(a as i32) * x[1].powi(b as i32) * x[2].powi(c as i32)
                    });
                    let exact = ball_monomial_integral(a, b, c);
                    assert!(
                        (quad - exact).abs() < 1e-10,
                        "monomial ({a},{b},{c}): {quad} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn x_squared_integral() {
        let rule = BallCubature::degree5();
        let quad = rule.integrate([0.0; 3], 1.0, |x| x[0] * x[0]);
        assert!((quad - 4.0 * std::f64::consts::PI / 15.0).abs() < 1e-10);
    }

    #[test]
    fn mapped_rule_scales_correctly() {
        let rule = BallCubature::degree5();
        let c = [0.3, -0.2, 0.1];
        let r = 0.25;
        let vol = rule.integrate(c, r, |_| 1.0);
        assert!((vol - 4.0 * std::f64::consts::PI / 3.0 * r.powi(3)).abs() < 1e-12);
        // degree-2 monomial about the mapped center
        let quad = rule.integrate(c, r, |x| (x[0] - c[0]).powi(2));
        let exact = ball_monomial_integral(2, 0, 0) * r.powi(5);
        assert!((quad - exact).abs() < 1e-12);
    }
}
