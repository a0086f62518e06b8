//! Command-line runner: single configured runs, benchmark grids, and
//! derivative checking.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use opthim::benchmarks::{derivative_report, registry, SUITE};
use opthim::harness::{
    emit_contour_grid, emit_history_csv, emit_summary, emit_trajectory, load_config, run,
    summary_table, GridSpec, LineSearchKind, Method, RunRecord, SolverConfig, SummaryRow,
    SEED_ENV_VAR,
};
use opthim::trustregion::TrModelKind;

#[derive(Parser)]
#[command(
    name = "opthim",
    version,
    about = "Line-search and trust-region solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a single run from a YAML config and write its outputs.
    Run {
        /// Path to the YAML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: config's out_dir, else the current directory).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run a problems × methods grid and write the summary table.
    Bench {
        /// `all` or a comma-separated list of problem names.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Comma-separated method tokens: gd, newton, bfgs, dfp, lbfgs
        /// (each expands to armijo and wolfe variants), tr (expands to all
        /// model/solver pairs), or qualified forms like bfgs:wolfe and
        /// tr:sr1:cg.
        #[arg(long)]
        methods: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Check analytic gradients and Hessians against the finite-difference
    /// oracles.
    CheckDerivatives {
        /// Restrict the check to one problem.
        #[arg(long)]
        problem: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { config, out_dir } => cmd_run(&config, out_dir),
        Command::Bench {
            suite,
            methods,
            out_dir,
        } => cmd_bench(&suite, &methods, &out_dir),
        Command::CheckDerivatives { problem } => cmd_check_derivatives(problem.as_deref()),
    }
}

fn cmd_run(config_path: &Path, out_dir: Option<PathBuf>) -> Result<ExitCode> {
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("cannot read config {}", config_path.display()))?;
    let config = load_config(&text)?;
    let out_dir = out_dir
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let stem = config_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("run")
        .to_string();

    let record = run(&config)?;
    print_run_line(&record);

    emit_history_csv(&record, &out_dir.join(format!("{stem}_history.csv")))?;
    emit_summary(
        std::slice::from_ref(&record),
        &out_dir.join(format!("{stem}_summary.json")),
    )?;
    if let Some(traj) = &record.trajectory {
        emit_trajectory(&record, &out_dir.join(format!("{stem}_trajectory.csv")))?;
        if record.final_point.len() >= 2 {
            let spec = registry(&config.problem)?;
            let grid = GridSpec::covering(traj, 50);
            emit_contour_grid(
                &spec.objective,
                &grid,
                &out_dir.join(format!("{stem}_contour.csv")),
            )?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_run_line(record: &RunRecord) {
    let flag = if record.converged { "T" } else { "F" };
    println!(
        "{} {}/{}: converged={} iterations={} fev={} gev={} f={:.6e} |g|={:.3e} time={:.3}s{}",
        record.config.problem,
        record.config.method_label(),
        record.config.variant_label(),
        flag,
        record.iterations,
        record.func_evals,
        record.grad_evals,
        record.final_f,
        record.final_grad_norm,
        record.wall_time,
        record
            .error
            .as_deref()
            .map(|e| format!(" [{e}]"))
            .unwrap_or_default(),
    );
}

fn cmd_bench(suite: &str, methods: &str, out_dir: &Path) -> Result<ExitCode> {
    let problems: Vec<String> = if suite == "all" {
        SUITE.iter().map(|s| s.to_string()).collect()
    } else {
        suite.split(',').map(|s| s.trim().to_string()).collect()
    };
    for name in &problems {
        registry(name).map_err(|e| anyhow!(e))?;
    }
    let variants = parse_method_tokens(methods)?;

    let mut configs = Vec::new();
    for problem in &problems {
        for template in &variants {
            let mut config = template.clone();
            config.problem = problem.clone();
            if let Ok(env_seed) = std::env::var(SEED_ENV_VAR) {
                config.seed = env_seed
                    .trim()
                    .parse()
                    .map_err(|_| anyhow!("invalid {SEED_ENV_VAR} value `{env_seed}`"))?;
            }
            configs.push(config);
        }
    }

    let records: Result<Vec<RunRecord>> = configs
        .par_iter()
        .map(|config| run(config).map_err(|e| anyhow!(e)))
        .collect();
    let records = records?;
    for record in &records {
        print_run_line(record);
    }

    fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    emit_summary(&records, &out_dir.join("summary.json"))?;
    let rows: Vec<SummaryRow> = records.iter().map(SummaryRow::from_record).collect();
    println!("\n{}", summary_table(&rows));
    Ok(ExitCode::SUCCESS)
}

/// Expands method tokens into run-config templates.
fn parse_method_tokens(methods: &str) -> Result<Vec<SolverConfig>> {
    let mut out = Vec::new();
    for token in methods.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let parts: Vec<&str> = token.split(':').collect();
        match parts.as_slice() {
            [m] if *m != "tr" => {
                let method = parse_ls_method(m)?;
                out.push(SolverConfig::line_search(
                    method,
                    LineSearchKind::Armijo,
                    "",
                ));
                out.push(SolverConfig::line_search(method, LineSearchKind::Wolfe, ""));
            }
            ["tr"] => {
                for model in [
                    TrModelKind::Newton,
                    TrModelKind::Sr1,
                    TrModelKind::Bfgs,
                    TrModelKind::Dfp,
                ] {
                    for solver in [
                        opthim::harness::TrSolver::Cg,
                        opthim::harness::TrSolver::Cauchy,
                    ] {
                        out.push(SolverConfig::trust_region(model, solver, ""));
                    }
                }
            }
            [m, ls] => {
                let method = parse_ls_method(m)?;
                let kind = match *ls {
                    "armijo" => LineSearchKind::Armijo,
                    "wolfe" => LineSearchKind::Wolfe,
                    other => bail!("unknown line search `{other}` in token `{token}`"),
                };
                out.push(SolverConfig::line_search(method, kind, ""));
            }
            ["tr", model, solver] => {
                let model = match *model {
                    "newton" => TrModelKind::Newton,
                    "sr1" => TrModelKind::Sr1,
                    "bfgs" => TrModelKind::Bfgs,
                    "dfp" => TrModelKind::Dfp,
                    other => bail!("unknown trust-region model `{other}` in token `{token}`"),
                };
                let solver = match *solver {
                    "cg" => opthim::harness::TrSolver::Cg,
                    "cauchy" => opthim::harness::TrSolver::Cauchy,
                    other => bail!("unknown subproblem solver `{other}` in token `{token}`"),
                };
                out.push(SolverConfig::trust_region(model, solver, ""));
            }
            _ => bail!("cannot parse method token `{token}`"),
        }
    }
    if out.is_empty() {
        bail!("no methods given");
    }
    Ok(out)
}

fn parse_ls_method(name: &str) -> Result<Method> {
    Ok(match name {
        "gd" => Method::Gd,
        "newton" => Method::Newton,
        "bfgs" => Method::Bfgs,
        "dfp" => Method::Dfp,
        "lbfgs" => Method::Lbfgs,
        other => bail!("unknown method `{other}`"),
    })
}

fn cmd_check_derivatives(problem: Option<&str>) -> Result<ExitCode> {
    let names: Vec<&str> = match problem {
        Some(name) => vec![name],
        None => SUITE.to_vec(),
    };
    let mut all_pass = true;
    for name in names {
        let spec = registry(name).map_err(|e| anyhow!(e))?;
        let report = derivative_report(&spec, 10, 5, 1e-6);
        let pass = report.passes(1e-5, 1e-4);
        all_pass &= pass;
        let hess = report
            .max_hess_err
            .map(|e| format!("{e:.3e}"))
            .unwrap_or_else(|| "n/a".to_string());
        println!(
            "{name}: grad err {:.3e}, hess err {hess} ... {}",
            report.max_grad_err,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if all_pass {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(anyhow!("derivative checks failed"))
    }
}
