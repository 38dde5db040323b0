//! Command-line frontend: configuration ingestion, run execution and
//! artifact persistence.
//!
//! Exit-code contract: 0 on success with artifacts written, 1 on
//! validation failure (bad config, infeasible lambda), 2 on mathematical
//! check failure with a structured `failure.json`.

use crate::domain::GridFn;
use crate::error::{Error, Result};
use crate::galerkin::{solve_in_ball, weak_residual, ApproxProblem, SolveOptions};
use crate::pipeline::{outer_limit, LambdaSpec, RunConfig};
use crate::reference::solve_reference_on;
use crate::strauss::family_report;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "subgal",
    about = "Certified spectral Galerkin solver for sublinear elliptic problems",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute and print the solvability certificate
    Constants(CommonArgs),
    /// Sweep the Lipschitz approximation family checks and emit a CSV
    VerifyLemmas(CommonArgs),
    /// Solve a single regularized Galerkin problem
    Solve(CommonArgs),
    /// Compute the pure sublinear reference solution
    Reference(CommonArgs),
    /// Run the full double-limit pipeline and verify the final solution
    Pipeline(CommonArgs),
    /// Run the pipeline over a lambda grid
    Sweep(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Path to the JSON run configuration
    #[arg(short, long)]
    pub config: PathBuf,
    /// Directory for output artifacts
    #[arg(short, long)]
    pub out: PathBuf,
    /// Override the seed from the configuration
    #[arg(long)]
    pub seed: Option<u64>,
    /// Increase verbosity
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

/// Collects artifacts plus their manifest (path, size, sha256); timestamps
/// go to a separate metadata file so run records stay byte-reproducible.
struct ArtifactWriter {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize)]
struct ManifestEntry {
    path: String,
    size: usize,
    sha256: String,
}

impl ArtifactWriter {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            size: bytes.len(),
            sha256: format!("{:x}", hasher.finalize()),
        });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    fn finish(mut self) -> Result<()> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let mut manifest = serde_json::to_vec_pretty(&self.entries)?;
        manifest.push(b'\n');
        fs::write(self.dir.join("manifest.json"), manifest)?;
        let metadata = serde_json::json!({
            "created_unix_seconds": std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            "tool": format!("subgal {}", env!("CARGO_PKG_VERSION")),
        });
        fs::write(
            self.dir.join("metadata.json"),
            serde_json::to_vec_pretty(&metadata)?,
        )?;
        Ok(())
    }
}

fn load_config(path: &Path, seed_override: Option<u64>) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut config: RunConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("config does not match the schema: {e}")))?;
    if let Some(seed) = seed_override {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn grid_csv(disc: &crate::domain::Discretization, v: &GridFn) -> String {
    let dim = disc.basis.domain.dim();
    let mut out = String::new();
    out.push_str(if dim == 1 { "x,v\n" } else { "x,y,v\n" });
    for t in 0..disc.quad.len() {
        let p = disc.quad.node(t);
        if dim == 1 {
            out.push_str(&format!("{},{}\n", p[0], v.0[t]));
        } else {
            out.push_str(&format!("{},{},{}\n", p[0], p[1], v.0[t]));
        }
    }
    out
}

/// Run a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (args, result) = match &cli.command {
        Command::Constants(a) => (a, run_constants(a)),
        Command::VerifyLemmas(a) => (a, run_verify_lemmas(a)),
        Command::Solve(a) => (a, run_solve(a)),
        Command::Reference(a) => (a, run_reference(a)),
        Command::Pipeline(a) => (a, run_pipeline(a)),
        Command::Sweep(a) => (a, run_sweep(a)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if args.verbose > 0 {
                eprintln!("(validation failure; no artifacts were finalized)");
            }
            EXIT_VALIDATION
        }
    }
}

fn run_constants(args: &CommonArgs) -> Result<i32> {
    let config = load_config(&args.config, args.seed)?;
    let cert = config.certificate()?;
    let mut writer = ArtifactWriter::new(&args.out)?;
    writer.write_json("certificate.json", &cert)?;
    writer.finish()?;
    println!("{}", serde_json::to_string_pretty(&cert)?);
    Ok(EXIT_OK)
}

fn run_verify_lemmas(args: &CommonArgs) -> Result<i32> {
    let config = load_config(&args.config, args.seed)?;
    let f = config.f.build()?;
    let ks: Vec<u32> = (0..=8).map(|j| 1u32 << j).collect();
    let rows = family_report(&f, &ks)?;
    let mut csv = String::from("k,breakpoint_gap,sign_violation,lemma2_violation,sup_error\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.k, row.breakpoint_gap, row.sign_violation, row.growth_violation, row.sup_error
        ));
    }
    let mut writer = ArtifactWriter::new(&args.out)?;
    writer.write_bytes("lemmas.csv", csv.as_bytes())?;
    let violations: Vec<&crate::strauss::FamilyRow> = rows
        .iter()
        .filter(|r| r.breakpoint_gap > 1e-12 || r.sign_violation > 1e-14 || r.growth_violation > 1e-12)
        .collect();
    if !violations.is_empty() {
        writer.write_json(
            "failure.json",
            &serde_json::json!({
                "command": "verify-lemmas",
                "violating_rows": violations,
            }),
        )?;
        writer.finish()?;
        eprintln!("lemma checks failed for {} of {} indices", violations.len(), rows.len());
        return Ok(EXIT_CHECK_FAILED);
    }
    writer.finish()?;
    if args.verbose > 0 {
        println!("all family checks passed for k in {ks:?}");
    }
    Ok(EXIT_OK)
}

fn run_solve(args: &CommonArgs) -> Result<i32> {
    let config = load_config(&args.config, args.seed)?;
    let lambda = config.resolve_lambda()?;
    let cert = config.certificate()?;
    cert.require_feasible()?;
    let f = config.f.build()?;
    let m = config.m.unwrap_or(*config.m_schedule.last().unwrap());
    let n = config.n.unwrap_or(*config.n_schedule.last().unwrap());
    let disc = Arc::new(crate::domain::Discretization::standard(config.domain, m)?);
    let prob = ApproxProblem::new(disc.clone(), &f, lambda, config.q, n, cert.clone())?;
    let opts = SolveOptions {
        tol: config.tolerances.solver_tol,
        ..SolveOptions::default()
    };
    let sol = solve_in_ball(&prob, &opts, None)?;
    let weak = weak_residual(&prob, &sol.xi, 8, config.seed)?;
    let v = disc.expand(&sol.xi)?;

    let mut writer = ArtifactWriter::new(&args.out)?;
    writer.write_json(
        "run_record.json",
        &serde_json::json!({
            "config": config,
            "lambda": lambda,
            "certificate": cert,
            "m": m,
            "n": n,
            "solution": sol,
            "weak_residual": weak,
        }),
    )?;
    writer.write_bytes("solution.csv", grid_csv(&disc, &v).as_bytes())?;
    writer.finish()?;
    if args.verbose > 0 {
        println!(
            "solved (m = {m}, n = {n}): |F| = {:.3e}, |xi| = {:.6}, min v = {:.3e}",
            sol.residual_norm, sol.h10_norm, sol.min_value
        );
    }
    Ok(EXIT_OK)
}

fn run_reference(args: &CommonArgs) -> Result<i32> {
    let config = load_config(&args.config, args.seed)?;
    let m = config.m.unwrap_or(*config.m_schedule.last().unwrap());
    let disc = crate::domain::Discretization::standard(config.domain, m)?;
    let sol = solve_reference_on(&disc, config.q, None)?;
    let mut writer = ArtifactWriter::new(&args.out)?;
    writer.write_json(
        "reference.json",
        &serde_json::json!({
            "domain": config.domain,
            "q": config.q,
            "m": m,
            "iterations": sol.iterations,
            "residual_sup_interior": sol.residual_sup_interior,
            "fixed_point_defect": sol.fixed_point_defect,
            "min_interior": sol.min_interior,
            "supersolution_scale": sol.supersolution_scale,
        }),
    )?;
    writer.write_bytes("reference.csv", grid_csv(&disc, &sol.w_tilde).as_bytes())?;
    writer.finish()?;
    if args.verbose > 0 {
        println!(
            "reference converged in {} iterations, interior residual {:.3e}",
            sol.iterations, sol.residual_sup_interior
        );
    }
    Ok(EXIT_OK)
}

fn convergence_csv(report: &crate::pipeline::ConvergenceReport) -> String {
    let mut csv = String::from(
        "n,m,h10_norm,cauchy_h10,l1_nonlin_gap,strong_residual,min_v,lower_bound_margin\n",
    );
    let final_n = report.per_n.last().map(|s| s.n);
    let final_m = report.stages.iter().map(|s| s.m).max();
    for stage in &report.stages {
        let is_final_m = Some(stage.m) == final_m;
        let summary = report.per_n.iter().find(|s| s.n == stage.n);
        let cauchy = stage
            .cauchy_h10
            .map(|d| d.to_string())
            .unwrap_or_default();
        let (l1_gap, margin) = match (is_final_m, summary) {
            (true, Some(s)) => (
                s.l1_nonlinearity_gap.to_string(),
                s.lower_bound_margin.to_string(),
            ),
            _ => (String::new(), String::new()),
        };
        let strong = if is_final_m && Some(stage.n) == final_n {
            report.final_check.checks[0].value.to_string()
        } else {
            String::new()
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            stage.n, stage.m, stage.h10_norm, cauchy, l1_gap, strong, stage.min_value, margin
        ));
    }
    csv
}

fn run_pipeline(args: &CommonArgs) -> Result<i32> {
    let config = load_config(&args.config, args.seed)?;
    let outcome = outer_limit(&config)?;
    let report = &outcome.report;

    let mut writer = ArtifactWriter::new(&args.out)?;
    for stage in &report.stages {
        writer.write_json(&format!("records/stage_n{}_m{}.json", stage.n, stage.m), stage)?;
    }
    writer.write_json(
        "report.json",
        &serde_json::json!({ "config": config, "report": report }),
    )?;
    let v = outcome.final_disc.expand(&outcome.final_xi)?;
    writer.write_bytes(
        "solution.csv",
        grid_csv(&outcome.final_disc, &v).as_bytes(),
    )?;
    writer.write_bytes("convergence.csv", convergence_csv(report).as_bytes())?;

    let failed: Vec<&crate::pipeline::CheckResult> = report
        .final_check
        .checks
        .iter()
        .filter(|c| !c.pass)
        .collect();
    let flags_ok = report.uniform_bound_ok && report.pairing_bounded_ok;
    if !failed.is_empty() || !flags_ok {
        writer.write_json(
            "failure.json",
            &serde_json::json!({
                "command": "pipeline",
                "failed_checks": failed,
                "uniform_bound_ok": report.uniform_bound_ok,
                "pairing_bounded_ok": report.pairing_bounded_ok,
            }),
        )?;
        writer.finish()?;
        for c in &report.final_check.checks {
            if !c.pass {
                eprintln!(
                    "check `{}` failed: value {:.6e} vs tolerance {:.6e}",
                    c.name, c.value, c.tolerance
                );
            }
        }
        return Ok(EXIT_CHECK_FAILED);
    }
    writer.finish()?;
    if args.verbose > 0 {
        println!(
            "pipeline done: max |v| = {:.6}, final L1 gap = {:.3e}",
            report.max_h10_norm, report.final_l1_gap
        );
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct SweepRow {
    lambda: f64,
    status: String,
    h10_norm: Option<f64>,
    min_v: Option<f64>,
    residual: Option<f64>,
}

fn run_sweep(args: &CommonArgs) -> Result<i32> {
    let config = load_config(&args.config, args.seed)?;
    let grid = config
        .lambda_grid
        .clone()
        .ok_or_else(|| Error::Config("sweep requires `lambda_grid`".into()))?;
    let lambdas: Vec<f64> = grid
        .iter()
        .map(|&spec| config.resolve_lambda_spec(spec))
        .collect::<Result<_>>()?;

    let rows: Vec<SweepRow> = lambdas
        .par_iter()
        .map(|&lambda| {
            let mut row_config = config.clone();
            row_config.lambda = Some(LambdaSpec::Value(lambda));
            row_config.lambda_grid = None;
            let cert = match row_config.certificate() {
                Ok(c) => c,
                Err(e) => {
                    return SweepRow {
                        lambda,
                        status: format!("rejected: {e}"),
                        h10_norm: None,
                        min_v: None,
                        residual: None,
                    }
                }
            };
            if !cert.feasible {
                return SweepRow {
                    lambda,
                    status: format!(
                        "rejected: lambda {} not below lambda_star {}",
                        lambda, cert.lambda_star
                    ),
                    h10_norm: None,
                    min_v: None,
                    residual: None,
                };
            }
            match outer_limit(&row_config) {
                Ok(outcome) => {
                    let last = outcome.report.per_n.last().unwrap();
                    SweepRow {
                        lambda,
                        status: "ok".into(),
                        h10_norm: Some(last.h10_norm),
                        min_v: Some(last.min_value),
                        residual: Some(outcome.report.final_check.checks[0].value),
                    }
                }
                Err(e) => SweepRow {
                    lambda,
                    status: format!("failed: {e}"),
                    h10_norm: None,
                    min_v: None,
                    residual: None,
                },
            }
        })
        .collect();

    let mut csv = String::from("lambda,h10_norm,min_v,residual,status\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.lambda,
            row.h10_norm.map(|v| v.to_string()).unwrap_or_default(),
            row.min_v.map(|v| v.to_string()).unwrap_or_default(),
            row.residual.map(|v| v.to_string()).unwrap_or_default(),
            row.status
        ));
    }
    let mut writer = ArtifactWriter::new(&args.out)?;
    writer.write_bytes("sweep.csv", csv.as_bytes())?;
    writer.write_json("sweep.json", &rows)?;
    writer.finish()?;
    if args.verbose > 0 {
        println!("sweep finished: {} rows", rows.len());
    }
    Ok(EXIT_OK)
}
