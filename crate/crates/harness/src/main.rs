//! `effmed` — scenario-driven experiments on effective-medium limits.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use effmed_harness::{bench_kernel_sum, run_convergence, Scenario};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "effmed",
    about = "Desk-scale laboratory for effective-medium limits of PDEs outside many small spheres",
    version
)]
struct Cli {
    /// Scenario JSON file.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Rayon worker threads (0 = default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Override the scenario base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one configuration and write it as JSON.
    Generate {
        /// Cloud size (cube number for periodic generators).
        #[arg(long)]
        n: usize,
        /// Replicate index used to derive the seed.
        #[arg(long, default_value_t = 0)]
        replicate: usize,
    },
    /// Evaluate the hypothesis report for a configuration JSON.
    Hypothesis {
        /// Configuration file produced by `generate`.
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve the perforated-domain problem for a configuration JSON.
    SolveMicro {
        #[arg(long)]
        config: PathBuf,
        /// Optional CSV of the represented field sampled at the scenario
        /// probe shell.
        #[arg(long)]
        field_csv: bool,
    },
    /// Solve the effective model and save the field (header + values CSV).
    SolveMacro {
        /// Volume fraction for the permittivity model.
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
    },
    /// Evaluate a saved effective field at probe points from a JSON list.
    EvalMacro {
        /// Directory written by solve-macro.
        #[arg(long)]
        field: PathBuf,
        /// JSON file with an array of 3-vectors.
        #[arg(long)]
        points: PathBuf,
    },
    /// Run the convergence experiment of the scenario.
    Converge,
    /// Benchmark tree vs direct kernel summation.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "5000,20000")]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.4")]
        theta: Vec<f64>,
        /// Largest n timed with the direct sum.
        #[arg(long, default_value_t = 40000)]
        direct_cutoff: usize,
    },
}

fn load_scenario(cli: &Cli) -> Result<Scenario> {
    let path = cli
        .scenario
        .as_ref()
        .context("--scenario <file.json> is required for this subcommand")?;
    let mut scenario = Scenario::load(path).with_context(|| format!("loading {path:?}"))?;
    if let Some(seed) = cli.seed {
        scenario.base_seed = seed;
    }
    Ok(scenario)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .ok();
    }
    std::fs::create_dir_all(&cli.out)?;

    match &cli.command {
        Command::Generate { n, replicate } => {
            let scenario = load_scenario(&cli)?;
            let config = scenario.generate(*n, scenario.scaling, *replicate)?;
            let path = cli.out.join(format!("config_n{}_r{replicate}.json", config.n));
            write(&path, &serde_json::to_string_pretty(&config)?)?;
        }
        Command::Hypothesis { config } => {
            let scenario = load_scenario(&cli)?;
            let config: effmed_core::geometry::Configuration =
                serde_json::from_str(&std::fs::read_to_string(config)?)?;
            let opts = effmed_core::hypotheses::SumOptions {
                method: match scenario.solver.tree_theta {
                    Some(theta) => effmed_core::kernels::SumMethod::Tree { theta },
                    None => effmed_core::kernels::SumMethod::Direct,
                },
            };
            let report =
                effmed_core::hypotheses::evaluate_report(&config, &scenario.density, opts)?;
            write(
                &cli.out.join("hypothesis.json"),
                &serde_json::to_string_pretty(&report)?,
            )?;
            // one CSV row per functional
            let mut csv = String::from("functional,value\n");
            csv.push_str(&format!("d_n,{:e}\n", report.d_n));
            csv.push_str(&format!("h1_margin,{:e}\n", report.h1_margin));
            csv.push_str(&format!("a1_margin,{:e}\n", report.a1_margin));
            let mut push = |name: &str, v: Option<f64>| {
                if let Some(v) = v {
                    csv.push_str(&format!("{name},{v:e}\n"));
                }
            };
            push("h2", report.h2.map(|v| v.total));
            push("h2prime", report.h2prime.map(|v| v.total));
            push("h2sharp", report.h2sharp);
            push("h2prime_sharp", report.h2prime_sharp);
            push("weaksep_gap", report.weaksep.map(|v| v.gap));
            push("a2", report.a2.as_ref().map(|v| v.value));
            write(&cli.out.join("hypothesis.csv"), &csv)?;
        }
        Command::SolveMicro { config, field_csv } => {
            let scenario = load_scenario(&cli)?;
            let config: effmed_core::geometry::Configuration =
                serde_json::from_str(&std::fs::read_to_string(config)?)?;
            use effmed_core::microsolver as micro;
            let opts = micro::MicroOptions {
                method: match scenario.solver.reflections_tol {
                    Some(tol) => micro::SolveMethod::Reflections { tol },
                    None => micro::SolveMethod::Direct,
                },
                pure_stokeslet: false,
            };
            let solution = match scenario.problem {
                micro::ProblemKind::DirichletLaplace => {
                    micro::solve_dirichlet_laplace(&config, &scenario.source, opts)?
                }
                micro::ProblemKind::DirichletStokes => {
                    micro::solve_dirichlet_stokes(&config, &scenario.source, opts)?
                }
                micro::ProblemKind::Conductor => {
                    micro::solve_conductor(&config, &scenario.source)?
                }
            };
            write(
                &cli.out.join("micro_solution.json"),
                &serde_json::to_string_pretty(&solution)?,
            )?;
            if *field_csv {
                let (probes, _) =
                    effmed_harness::admissible_probes(&scenario.probes, &config);
                let mut csv = String::from("x,y,z,value...\n");
                for p in probes {
                    match scenario.problem {
                        micro::ProblemKind::DirichletStokes => {
                            let v = solution.eval_velocity(p);
                            csv.push_str(&format!(
                                "{:e},{:e},{:e},{:e},{:e},{:e}\n",
                                p[0], p[1], p[2], v[0], v[1], v[2]
                            ));
                        }
                        _ => {
                            let v = solution.eval_scalar(p);
                            csv.push_str(&format!("{:e},{:e},{:e},{:e}\n", p[0], p[1], p[2], v));
                        }
                    }
                }
                write(&cli.out.join("micro_field.csv"), &csv)?;
            }
        }
        Command::SolveMacro { lambda } => {
            let scenario = load_scenario(&cli)?;
            let field = effmed_core::macrosolver::solve_volume_potential(
                scenario.macro_model(*lambda),
                &scenario.density,
                &scenario.source,
                effmed_core::macrosolver::GridParams {
                    cells: scenario.solver.macro_cells,
                    margin: scenario.solver.macro_margin,
                },
                effmed_core::macrosolver::IterParams {
                    tol: scenario.solver.macro_tol,
                    ..Default::default()
                },
            )?;
            save_field(&cli.out.join("macro_field"), &field)?;
        }
        Command::EvalMacro { field, points } => {
            let field = load_field(field)?;
            let points: Vec<effmed_core::Vec3> =
                serde_json::from_str(&std::fs::read_to_string(points)?)?;
            let samples = effmed_core::macrosolver::evaluate_effective(&field, &points);
            let mut csv = String::from("x,y,z,value...\n");
            for (p, s) in points.iter().zip(samples.iter()) {
                match s {
                    effmed_core::macrosolver::FieldSample::Scalar(v) => {
                        csv.push_str(&format!("{:e},{:e},{:e},{:e}\n", p[0], p[1], p[2], v))
                    }
                    effmed_core::macrosolver::FieldSample::Vector(v) => csv.push_str(&format!(
                        "{:e},{:e},{:e},{:e},{:e},{:e}\n",
                        p[0], p[1], p[2], v[0], v[1], v[2]
                    )),
                }
            }
            write(&cli.out.join("macro_eval.csv"), &csv)?;
        }
        Command::Converge => {
            let scenario = load_scenario(&cli)?;
            let report = run_convergence(&scenario)?;
            write(&cli.out.join("results.csv"), &report.to_csv())?;
            write(
                &cli.out.join("report.json"),
                &serde_json::to_string_pretty(&report)?,
            )?;
            if report.flagged {
                bail!("one or more replicates failed; see results.csv");
            }
        }
        Command::Bench {
            n,
            theta,
            direct_cutoff,
        } => {
            let seed = cli.seed.unwrap_or(7);
            let rows = bench_kernel_sum(n, theta, *direct_cutoff, seed)?;
            write(
                &cli.out.join("bench.csv"),
                &effmed_harness::bench::bench_csv(&rows),
            )?;
        }
    }
    Ok(())
}

/// JSON header plus CSV value block.
fn save_field(dir: &Path, field: &effmed_core::macrosolver::EffectiveField) -> Result<()> {
    use effmed_core::macrosolver::FieldValues;
    std::fs::create_dir_all(dir)?;
    let header = serde_json::json!({
        "model": field.model,
        "spec": field.spec,
        "coeff": field.coeff,
        "source": field.source,
        "diagnostics": field.diagnostics,
        "value_arity": match &field.u { FieldValues::Scalar(_) => 1, FieldValues::Vector(_) => 3 },
        "w_arity": match &field.w { FieldValues::Scalar(_) => 1, FieldValues::Vector(_) => 3 },
    });
    std::fs::write(
        dir.join("header.json"),
        serde_json::to_string_pretty(&header)?,
    )?;
    let mut csv = String::from("index,u...,w...\n");
    let count = field.spec.cell_count();
    for idx in 0..count {
        let mut row = format!("{idx}");
        match &field.u {
            FieldValues::Scalar(v) => row.push_str(&format!(",{:e}", v[idx])),
            FieldValues::Vector(v) => {
                for a in 0..3 {
                    row.push_str(&format!(",{:e}", v[idx][a]));
                }
            }
        }
        match &field.w {
            FieldValues::Scalar(v) => row.push_str(&format!(",{:e}", v[idx])),
            FieldValues::Vector(v) => {
                for a in 0..3 {
                    row.push_str(&format!(",{:e}", v[idx][a]));
                }
            }
        }
        row.push('\n');
        csv.push_str(&row);
    }
    std::fs::write(dir.join("values.csv"), csv)?;
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn load_field(dir: &Path) -> Result<effmed_core::macrosolver::EffectiveField> {
    use effmed_core::macrosolver::{FieldValues, MacroDiagnostics};
    let header: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("header.json"))?)?;
    let model: effmed_core::macrosolver::MacroModel =
        serde_json::from_value(header["model"].clone())?;
    let spec: effmed_core::macrosolver::GridSpec = serde_json::from_value(header["spec"].clone())?;
    let coeff = header["coeff"].as_f64().context("coeff")?;
    let source: effmed_core::microsolver::SourceField =
        serde_json::from_value(header["source"].clone())?;
    let diagnostics: MacroDiagnostics = serde_json::from_value(header["diagnostics"].clone())?;
    let u_arity = header["value_arity"].as_u64().context("value_arity")? as usize;
    let w_arity = header["w_arity"].as_u64().context("w_arity")? as usize;
    let text = std::fs::read_to_string(dir.join("values.csv"))?;
    let count = spec.cell_count();
    let mut u_s = vec![0.0; if u_arity == 1 { count } else { 0 }];
    let mut u_v = vec![[0.0; 3]; if u_arity == 3 { count } else { 0 }];
    let mut w_s = vec![0.0; if w_arity == 1 { count } else { 0 }];
    let mut w_v = vec![[0.0; 3]; if w_arity == 3 { count } else { 0 }];
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let idx: usize = cols[0].parse()?;
        let mut cursor = 1;
        if u_arity == 1 {
            u_s[idx] = cols[cursor].parse()?;
            cursor += 1;
        } else {
            for a in 0..3 {
                u_v[idx][a] = cols[cursor + a].parse()?;
            }
            cursor += 3;
        }
        if w_arity == 1 {
            w_s[idx] = cols[cursor].parse()?;
        } else {
            for a in 0..3 {
                w_v[idx][a] = cols[cursor + a].parse()?;
            }
        }
    }
    Ok(effmed_core::macrosolver::EffectiveField {
        model,
        spec,
        u: if u_arity == 1 {
            FieldValues::Scalar(u_s)
        } else {
            FieldValues::Vector(u_v)
        },
        w: if w_arity == 1 {
            FieldValues::Scalar(w_s)
        } else {
            FieldValues::Vector(w_v)
        },
        coeff,
        source,
        diagnostics,
    })
}
