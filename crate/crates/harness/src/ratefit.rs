//! Log-log rate fitting by ordinary least squares.

use crate::HarnessError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    /// `2·SE` of the slope from the residual variance.
    pub halfwidth: f64,
    pub intercept: f64,
}

/// Fit `log e = slope · log n + intercept` over `(n, e)` pairs.
pub fn estimate_rate(pairs: &[(f64, f64)]) -> Result<RateFit, HarnessError> {
    if pairs.len() < 3 {
        return Err(HarnessError::RateFit(format!(
            "got {} pairs",
            pairs.len()
        )));
    }
    if let Some((n, e)) = pairs.iter().find(|(n, e)| *n <= 0.0 || *e <= 0.0) {
        return Err(HarnessError::RateFit(format!(
            "nonpositive sample (n = {n}, e = {e})"
        )));
    }
    let xs: Vec<f64> = pairs.iter().map(|(n, _)| n.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, e)| e.ln()).collect();
    let m = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys.iter())
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ssr: f64 = xs
        .iter()
        .zip(ys.iter())
        .map(|(x, y)| {
            let fit = slope * (x - xbar) + ybar;
            (y - fit) * (y - fit)
        })
        .sum();
    let dof = (m - 2.0).max(1.0);
    let se = (ssr / dof / sxx).sqrt();
    Ok(RateFit {
        slope,
        halfwidth: 2.0 * se,
        intercept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_has_zero_halfwidth() {
        let pairs: Vec<(f64, f64)> = [100.0, 200.0, 400.0, 800.0]
            .iter()
            .map(|&n: &f64| (n, 1.0 / n))
            .collect();
        let fit = estimate_rate(&pairs).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!(fit.halfwidth < 1e-12);
    }

    #[test]
    fn noisy_two_thirds_law() {
        // e = 3 n^{-2/3} with 1% multiplicative noise
        let noise = [1.01, 0.99, 1.008, 0.995, 1.002, 0.991];
        let pairs: Vec<(f64, f64)> = noise
            .iter()
            .enumerate()
            .map(|(i, eps)| {
                let n = 100.0 * 2.0f64.powi(i as i32);
                (n, 3.0 * n.powf(-2.0 / 3.0) * eps)
            })
            .collect();
        let fit = estimate_rate(&pairs).unwrap();
        assert!((fit.slope + 2.0 / 3.0).abs() < 0.05, "slope {}", fit.slope);
        assert!(fit.halfwidth < 0.05);
    }

    #[test]
    fn too_few_or_nonpositive_rejected() {
        assert!(estimate_rate(&[(1.0, 1.0), (2.0, 0.5)]).is_err());
        assert!(estimate_rate(&[(1.0, 1.0), (2.0, 0.5), (4.0, -0.2)]).is_err());
    }
}
