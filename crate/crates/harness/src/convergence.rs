//! The u_n → u convergence experiment: generate, hypothesis-check,
//! micro-solve, macro-solve (cached), probe both representations, and fit
//! the observed rate.

use crate::probes::admissible_probes;
use crate::ratefit::{estimate_rate, RateFit};
use crate::scenario::{GeneratorSpec, Scenario, SolverSpec, Sweep};
use crate::HarnessError;
use effmed_core::geometry::Scaling;
use effmed_core::hypotheses::{self, SumOptions};
use effmed_core::kernels::SumMethod;
use effmed_core::macrosolver::{
    solve_volume_potential, EffectiveField, FieldSample, GridParams, IterParams, MacroModel,
};
use effmed_core::microsolver::{
    solve_conductor, solve_dirichlet_laplace, solve_dirichlet_stokes, MicroOptions, MicroSolution,
    ProblemKind, SolveMethod, Strengths,
};
use effmed_core::Vec3;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRow {
    pub problem: ProblemKind,
    pub n: usize,
    pub lambda: f64,
    pub replicate: usize,
    pub seed: u64,
    pub d_n: Option<f64>,
    pub h1_margin: Option<f64>,
    pub a1_margin: Option<f64>,
    pub h2: Option<f64>,
    pub h2prime: Option<f64>,
    pub h2sharp: Option<f64>,
    pub h2prime_sharp: Option<f64>,
    pub weaksep_gap: Option<f64>,
    pub a2: Option<f64>,
    /// Relative RMS probe error of u_n against the effective field.
    pub e_n: Option<f64>,
    /// Same error measured against the unscreened background.
    pub e_unscreened: Option<f64>,
    /// Normalized total charge −Σq/(n r ū); tends to the strange-term
    /// constant 4π on critical sweeps (Laplace only).
    pub charge_ratio: Option<f64>,
    pub excluded_probes: usize,
    pub t_micro_ms: u64,
    pub t_macro_ms: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<RunRow>,
    /// Log-log slope of the mean probe error per sweep value.
    pub rate: Option<RateFit>,
    pub rate_unscreened: Option<RateFit>,
    /// True when any replicate failed at some stage.
    pub flagged: bool,
}

impl ConvergenceReport {
    /// Mean probe error per sweep value (rows without errors only).
    pub fn mean_errors(&self) -> Vec<(usize, f64)> {
        let mut by_n: HashMap<usize, (f64, usize)> = HashMap::new();
        for row in &self.rows {
            if row.error.is_none() {
                if let Some(e) = row.e_n {
                    let entry = by_n.entry(row.n).or_insert((0.0, 0));
                    entry.0 += e;
                    entry.1 += 1;
                }
            }
        }
        let mut out: Vec<(usize, f64)> = by_n
            .into_iter()
            .map(|(n, (sum, count))| (n, sum / count as f64))
            .collect();
        out.sort_by_key(|&(n, _)| n);
        out
    }

    pub fn mean_unscreened_errors(&self) -> Vec<(usize, f64)> {
        let mut by_n: HashMap<usize, (f64, usize)> = HashMap::new();
        for row in &self.rows {
            if row.error.is_none() {
                if let Some(e) = row.e_unscreened {
                    let entry = by_n.entry(row.n).or_insert((0.0, 0));
                    entry.0 += e;
                    entry.1 += 1;
                }
            }
        }
        let mut out: Vec<(usize, f64)> = by_n
            .into_iter()
            .map(|(n, (sum, count))| (n, sum / count as f64))
            .collect();
        out.sort_by_key(|&(n, _)| n);
        out
    }

    /// Fixed CSV schema, one row per (sweep value, replicate).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "problem,n,lambda,replicate,seed,d_n,h1_margin,a1_margin,h2,h2prime,h2sharp,h2prime_sharp,weaksep_gap,a2,e_n,e_unscreened,charge_ratio,excluded_probes,t_micro_ms,t_macro_ms,error\n",
        );
        let fmt = |v: &Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for r in &self.rows {
            let problem = match r.problem {
                ProblemKind::DirichletLaplace => "dirichlet-laplace",
                ProblemKind::DirichletStokes => "dirichlet-stokes",
                ProblemKind::Conductor => "conductor",
            };
            out.push_str(&format!(
                "{},{},{:e},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                problem,
                r.n,
                r.lambda,
                r.replicate,
                r.seed,
                fmt(&r.d_n),
                fmt(&r.h1_margin),
                fmt(&r.a1_margin),
                fmt(&r.h2),
                fmt(&r.h2prime),
                fmt(&r.h2sharp),
                fmt(&r.h2prime_sharp),
                fmt(&r.weaksep_gap),
                fmt(&r.a2),
                fmt(&r.e_n),
                fmt(&r.e_unscreened),
                fmt(&r.charge_ratio),
                r.excluded_probes,
                r.t_micro_ms,
                r.t_macro_ms,
                r.error.clone().unwrap_or_default()
            ));
        }
        out
    }
}

/// Cache key for macro solves: one solve per unique effective instance.
fn macro_cache_key(model: &MacroModel, scenario: &Scenario) -> String {
    serde_json::to_string(&(
        model,
        &scenario.density,
        &scenario.source,
        scenario.solver.macro_cells,
        scenario.solver.macro_margin,
        scenario.solver.macro_tol,
    ))
    .expect("cache key serialization")
}

pub struct MacroCache {
    map: HashMap<String, Arc<EffectiveField>>,
}

impl MacroCache {
    pub fn new() -> MacroCache {
        MacroCache {
            map: HashMap::new(),
        }
    }

    pub fn get_or_solve(
        &mut self,
        model: MacroModel,
        scenario: &Scenario,
    ) -> Result<Arc<EffectiveField>, HarnessError> {
        let key = macro_cache_key(&model, scenario);
        if let Some(field) = self.map.get(&key) {
            return Ok(field.clone());
        }
        let field = solve_volume_potential(
            model,
            &scenario.density,
            &scenario.source,
            GridParams {
                cells: scenario.solver.macro_cells,
                margin: scenario.solver.macro_margin,
            },
            IterParams {
                tol: scenario.solver.macro_tol,
                ..Default::default()
            },
        )?;
        let field = Arc::new(field);
        self.map.insert(key, field.clone());
        Ok(field)
    }
}

impl Default for MacroCache {
    fn default() -> Self {
        Self::new()
    }
}

fn micro_options(solver: &SolverSpec) -> MicroOptions {
    MicroOptions {
        method: match solver.reflections_tol {
            Some(tol) => SolveMethod::Reflections { tol },
            None => SolveMethod::Direct,
        },
        pure_stokeslet: false,
    }
}

fn micro_sample(solution: &MicroSolution, x: Vec3) -> FieldSample {
    match solution.kind {
        ProblemKind::DirichletStokes => FieldSample::Vector(solution.eval_velocity(x)),
        _ => FieldSample::Scalar(solution.eval_scalar(x)),
    }
}

fn background_sample(scenario: &Scenario, x: Vec3) -> FieldSample {
    match scenario.problem {
        ProblemKind::DirichletStokes => FieldSample::Vector(scenario.source.stokes_velocity(x)),
        _ => FieldSample::Scalar(scenario.source.potential(x)),
    }
}

fn relative_rms(pairs: &[(FieldSample, FieldSample)]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in pairs {
        num += a.dist(b).powi(2);
        den += b.norm().powi(2);
    }
    (num / den.max(1e-300)).sqrt()
}

/// Run the full convergence experiment for a scenario.
pub fn run_convergence(scenario: &Scenario) -> Result<ConvergenceReport, HarnessError> {
    scenario.validate()?;
    let mut cache = MacroCache::new();
    let mut rows = Vec::new();
    let mut flagged = false;

    let sweep_points: Vec<(usize, Scaling, f64)> = match &scenario.sweep {
        Sweep::N { values } => values
            .iter()
            .map(|&n| {
                let lambda = match scenario.scaling {
                    Scaling::Fraction { lambda } => lambda,
                    _ => 0.0,
                };
                (n, scenario.scaling, lambda)
            })
            .collect(),
        Sweep::Lambda { values, n } => values
            .iter()
            .map(|&lambda| (*n, Scaling::Fraction { lambda }, lambda))
            .collect(),
    };

    for &(n, scaling, lambda) in &sweep_points {
        for replicate in 0..scenario.replicates {
            let row = run_one(scenario, n, scaling, lambda, replicate, &mut cache);
            match row {
                Ok(r) => {
                    if r.error.is_some() {
                        flagged = true;
                    }
                    rows.push(r);
                }
                Err(e) => {
                    flagged = true;
                    rows.push(RunRow {
                        problem: scenario.problem,
                        n,
                        lambda,
                        replicate,
                        seed: effmed_core::geometry::derive_seed(
                            scenario.base_seed,
                            replicate as u64,
                        ),
                        d_n: None,
                        h1_margin: None,
                        a1_margin: None,
                        h2: None,
                        h2prime: None,
                        h2sharp: None,
                        h2prime_sharp: None,
                        weaksep_gap: None,
                        a2: None,
                        e_n: None,
                        e_unscreened: None,
                        charge_ratio: None,
                        excluded_probes: 0,
                        t_micro_ms: 0,
                        t_macro_ms: 0,
                        error: Some(e.to_string()),
                    });
                }
            }
        }
    }

    let report_pairs: Vec<(f64, f64)> = {
        let means = ConvergenceReport {
            rows: rows.clone(),
            rate: None,
            rate_unscreened: None,
            flagged,
        }
        .mean_errors();
        means
            .iter()
            .filter(|(_, e)| *e > 0.0)
            .map(|&(n, e)| (n as f64, e))
            .collect()
    };
    let rate = estimate_rate(&report_pairs).ok();
    let unscreened_pairs: Vec<(f64, f64)> = {
        let means = ConvergenceReport {
            rows: rows.clone(),
            rate: None,
            rate_unscreened: None,
            flagged,
        }
        .mean_unscreened_errors();
        means
            .iter()
            .filter(|(_, e)| *e > 0.0)
            .map(|&(n, e)| (n as f64, e))
            .collect()
    };
    let rate_unscreened = estimate_rate(&unscreened_pairs).ok();
    Ok(ConvergenceReport {
        rows,
        rate,
        rate_unscreened,
        flagged,
    })
}

fn run_one(
    scenario: &Scenario,
    n: usize,
    scaling: Scaling,
    lambda: f64,
    replicate: usize,
    cache: &mut MacroCache,
) -> Result<RunRow, HarnessError> {
    let seed = effmed_core::geometry::derive_seed(scenario.base_seed, replicate as u64);
    let config = scenario.generate(n, scaling, replicate)?;
    let mut row = RunRow {
        problem: scenario.problem,
        n: config.n,
        lambda,
        replicate,
        seed: match scenario.generator {
            GeneratorSpec::Periodic => 0,
            _ => seed,
        },
        d_n: Some(config.min_distance()),
        h1_margin: Some(config.n as f64 * config.min_distance()),
        a1_margin: Some(config.min_distance() / config.radius.max(1e-300)),
        h2: None,
        h2prime: None,
        h2sharp: None,
        h2prime_sharp: None,
        weaksep_gap: None,
        a2: None,
        e_n: None,
        e_unscreened: None,
        charge_ratio: None,
        excluded_probes: 0,
        t_micro_ms: 0,
        t_macro_ms: 0,
        error: None,
    };

    // empty configurations short-circuit: both solvers return the background
    if config.n == 0 {
        row.e_n = Some(0.0);
        row.e_unscreened = Some(0.0);
        return Ok(row);
    }

    if scenario.solver.hypotheses {
        let opts = SumOptions {
            method: match scenario.solver.tree_theta {
                Some(theta) => SumMethod::Tree { theta },
                None => SumMethod::Direct,
            },
        };
        let report = hypotheses::evaluate_report(&config, &scenario.density, opts)?;
        row.h2 = report.h2.map(|v| v.total);
        row.h2prime = report.h2prime.map(|v| v.total);
        row.h2sharp = report.h2sharp;
        row.h2prime_sharp = report.h2prime_sharp;
        row.weaksep_gap = report.weaksep.map(|v| v.gap);
        row.a2 = report.a2.map(|v| v.value);
    }

    let t0 = Instant::now();
    let micro = match scenario.problem {
        ProblemKind::DirichletLaplace => {
            solve_dirichlet_laplace(&config, &scenario.source, micro_options(&scenario.solver))?
        }
        ProblemKind::DirichletStokes => {
            solve_dirichlet_stokes(&config, &scenario.source, micro_options(&scenario.solver))?
        }
        ProblemKind::Conductor => solve_conductor(&config, &scenario.source)?,
    };
    let t_micro = t0.elapsed().as_millis() as u64;

    let t1 = Instant::now();
    let field = cache.get_or_solve(scenario.macro_model(lambda), scenario)?;
    let t_macro = t1.elapsed().as_millis() as u64;

    let (probes, excluded) = admissible_probes(&scenario.probes, &config);
    row.excluded_probes = excluded;
    if probes.is_empty() {
        row.error = Some("all probes excluded".into());
        return Ok(row);
    }
    let pairs: Vec<(FieldSample, FieldSample)> = probes
        .iter()
        .map(|&p| (micro_sample(&micro, p), field.eval(p)))
        .collect();
    row.e_n = Some(relative_rms(&pairs));
    if scenario.solver.compare_unscreened {
        let pairs0: Vec<(FieldSample, FieldSample)> = probes
            .iter()
            .map(|&p| (micro_sample(&micro, p), background_sample(scenario, p)))
            .collect();
        row.e_unscreened = Some(relative_rms(&pairs0));
    }

    if let Strengths::Charges(q) = &micro.strengths {
        let total: f64 = q.iter().sum();
        let mean_u: f64 = config
            .centers
            .iter()
            .map(|&c| field.eval(c).as_scalar())
            .sum::<f64>()
            / config.n as f64;
        row.charge_ratio =
            Some(-total / (config.n as f64 * config.radius * mean_u));
    }

    if scenario.solver.timings {
        row.t_micro_ms = t_micro;
        row.t_macro_ms = t_macro;
    }
    Ok(row)
}
