//! Timing benchmark of the treecode against the direct pairwise sum.

use crate::HarnessError;
use effmed_core::geometry::rng_for;
use effmed_core::kernels::{kernel_sum, Exclusion, KernelId, SumMethod};
use effmed_core::Vec3;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub theta: f64,
    /// Direct sum over all targets; skipped beyond the cutoff.
    pub t_direct_ms: Option<f64>,
    pub t_tree_ms: f64,
    /// Max relative error of the tree sum against the direct sum on a
    /// 200-target subsample.
    pub max_rel_err: f64,
    pub speedup: Option<f64>,
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("n,theta,t_direct_ms,t_tree_ms,max_rel_err,speedup\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:e},{}\n",
            r.n,
            r.theta,
            r.t_direct_ms.map(|v| format!("{v:.3}")).unwrap_or_default(),
            format!("{:.3}", r.t_tree_ms),
            r.max_rel_err,
            r.speedup.map(|v| format!("{v:.2}")).unwrap_or_default(),
        ));
    }
    out
}

/// Benchmark the `G` kernel sum on uniform clouds, tree vs direct.
pub fn bench_kernel_sum(
    ns: &[usize],
    thetas: &[f64],
    direct_cutoff: usize,
    seed: u64,
) -> Result<Vec<BenchRow>, HarnessError> {
    let mut rows = Vec::new();
    for &n in ns {
        let mut rng = rng_for(seed, n as u64);
        let sources: Vec<Vec3> = (0..n)
            .map(|_| {
                [
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                ]
            })
            .collect();
        let weights = vec![1.0; n];
        // error oracle on a subsample of the targets (self terms excluded
        // by original source index)
        let sub_idx: Vec<usize> = (0..n).step_by((n / 200).max(1)).collect();
        let sub: Vec<Vec3> = sub_idx.iter().map(|&i| sources[i]).collect();
        let sub_excl: Vec<Option<usize>> = sub_idx.iter().map(|&i| Some(i)).collect();
        let direct_sub = kernel_sum(
            KernelId::G,
            &sub,
            &sources,
            &weights,
            SumMethod::Direct,
            Exclusion::PerTarget(&sub_excl),
        )?;
        // min of two runs damps scheduler noise
        let time_min = |method: SumMethod| -> Result<f64, HarnessError> {
            let mut best = f64::INFINITY;
            for _ in 0..2 {
                let t = Instant::now();
                let _ = kernel_sum(
                    KernelId::G,
                    &sources,
                    &sources,
                    &weights,
                    method,
                    Exclusion::SelfIndex,
                )?;
                best = best.min(t.elapsed().as_secs_f64() * 1e3);
            }
            Ok(best)
        };
        let t_direct_ms = if n <= direct_cutoff {
            Some(time_min(SumMethod::Direct)?)
        } else {
            None
        };
        for &theta in thetas {
            let t_tree_ms = time_min(SumMethod::Tree { theta })?;
            let tree_sub = kernel_sum(
                KernelId::G,
                &sub,
                &sources,
                &weights,
                SumMethod::Tree { theta },
                Exclusion::PerTarget(&sub_excl),
            )?;
            let mut max_rel_err = 0.0f64;
            for (a, b) in tree_sub.iter().zip(direct_sub.iter()) {
                max_rel_err =
                    max_rel_err.max((a.as_scalar() - b.as_scalar()).abs() / b.as_scalar().abs());
            }
            rows.push(BenchRow {
                n,
                theta,
                t_direct_ms,
                t_tree_ms,
                max_rel_err,
                speedup: t_direct_ms.map(|d| d / t_tree_ms),
            });
        }
    }
    Ok(rows)
}
