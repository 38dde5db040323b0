//! Double-limit orchestration: for each regularization index n in the
//! schedule, solve the Galerkin problems along the basis-dimension schedule
//! (inner limit, warm-started by zero-padding), then compare solutions
//! across n (outer limit) and verify the final function against the
//! original equation and the comparison lower bound.

use crate::certificate::{build_certificate, Certificate};
use crate::domain::{Discretization, ModelDomain};
use crate::error::{Error, Result};
use crate::galerkin::{solve_in_ball, ApproxProblem, GalerkinSolution, SolveOptions};
use crate::nonlinearity::Nonlinearity;
use crate::reference::{comparison_lower_bound, solve_reference_on, ReferenceSolution};
use crate::strauss::StraussApprox;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Nonlinearity selector in run configurations.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
}

impl FSpec {
    pub fn build(&self) -> Result<Nonlinearity> {
        if self.name == "zero" {
            return Ok(Nonlinearity::zero());
        }
        let p = self
            .p
            .ok_or_else(|| Error::Config(format!("nonlinearity `{}` requires p", self.name)))?;
        let c = self.c.unwrap_or(1.0);
        Nonlinearity::from_catalog(&self.name, p, c, self.m)
    }
}

/// Lambda either as an explicit value or as a fraction of lambda_star.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum LambdaSpec {
    Fraction { fraction_of_lambda_star: f64 },
    Value(f64),
}

/// Convergence tolerances of the two limits.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Tolerances {
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
    #[serde(default = "default_outer_l1_tol")]
    pub outer_l1_tol: f64,
}

fn default_solver_tol() -> f64 {
    1e-10
}
fn default_inner_tol() -> f64 {
    1e-8
}
fn default_outer_l1_tol() -> f64 {
    1e-4
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            solver_tol: default_solver_tol(),
            inner_tol: default_inner_tol(),
            outer_l1_tol: default_outer_l1_tol(),
        }
    }
}

/// Full run configuration (also the CLI JSON schema).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    pub domain: ModelDomain,
    pub f: FSpec,
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<LambdaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<LambdaSpec>>,
    pub m_schedule: Vec<usize>,
    pub n_schedule: Vec<u32>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    /// Optional single-solve overrides; default to the schedule ends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if !(0.0 < self.q && self.q < 1.0) {
            return Err(Error::InvalidSublinearExponent(self.q));
        }
        self.f.build()?;
        if self.m_schedule.is_empty() || self.n_schedule.is_empty() {
            return Err(Error::InvalidSchedule("schedules must be nonempty".into()));
        }
        if self.m_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSchedule(format!(
                "m_schedule not strictly increasing: {:?}",
                self.m_schedule
            )));
        }
        if self.n_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSchedule(format!(
                "n_schedule not strictly increasing: {:?}",
                self.n_schedule
            )));
        }
        Ok(())
    }

    fn growth_parameters(&self) -> Result<(f64, f64)> {
        let f = self.f.build()?;
        Ok((f.certificate.p, f.certificate.c))
    }

    /// Resolve a lambda spec to a value (lambda_star does not depend on
    /// lambda, so a probe certificate suffices).
    pub fn resolve_lambda_spec(&self, spec: LambdaSpec) -> Result<f64> {
        match spec {
            LambdaSpec::Value(v) => Ok(v),
            LambdaSpec::Fraction {
                fraction_of_lambda_star,
            } => {
                let (p, c) = self.growth_parameters()?;
                let probe = build_certificate(self.domain, self.q, p, c, 1.0)?;
                Ok(fraction_of_lambda_star * probe.lambda_star)
            }
        }
    }

    pub fn resolve_lambda(&self) -> Result<f64> {
        let spec = self
            .lambda
            .ok_or_else(|| Error::Config("config requires a `lambda` entry".into()))?;
        self.resolve_lambda_spec(spec)
    }

    /// Certificate for this configuration at its resolved lambda.
    pub fn certificate(&self) -> Result<Certificate> {
        let (p, c) = self.growth_parameters()?;
        build_certificate(self.domain, self.q, p, c, self.resolve_lambda()?)
    }
}

/// Record of one (n, m) solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub n: u32,
    pub m: usize,
    pub h10_norm: f64,
    pub residual_norm: f64,
    pub min_value: f64,
    pub energy: f64,
    pub newton_iterations: usize,
    pub descent_steps: usize,
    pub path_hash: String,
    /// ||v^(m) - v^(m_next)||_{H^1_0}, exact by zero-padded coefficients.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cauchy_h10: Option<f64>,
}

/// Result of the inner (basis-dimension) limit at fixed n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InnerRun {
    pub n: u32,
    pub records: Vec<StageRecord>,
    pub distances: Vec<f64>,
    pub distances_strictly_decreasing: bool,
    /// Last Cauchy distance at or below the inner tolerance.
    pub converged: bool,
    pub final_m: usize,
    pub final_xi: Vec<f64>,
}

/// Euclidean distance of coefficient vectors after zero-padding; equals the
/// H^1_0 distance of the expansions.
pub fn padded_h10_distance(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let mut sq = 0.0;
    for i in 0..len {
        let x = a.get(i).copied().unwrap_or(0.0);
        let y = b.get(i).copied().unwrap_or(0.0);
        sq += (x - y) * (x - y);
    }
    sq.sqrt()
}

/// L^2 distance of the expansions via eigenvalues of the enclosing basis.
pub fn padded_l2_distance(a: &[f64], b: &[f64], eigenvalues: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    assert!(eigenvalues.len() >= len);
    let mut sq = 0.0;
    for i in 0..len {
        let x = a.get(i).copied().unwrap_or(0.0);
        let y = b.get(i).copied().unwrap_or(0.0);
        sq += (x - y) * (x - y) / eigenvalues[i];
    }
    sq.sqrt()
}

/// Solve along the m-schedule at fixed n, warm-starting each dimension
/// from the zero-padded previous solution.
pub fn inner_limit(
    discs: &[Arc<Discretization>],
    f: &Nonlinearity,
    q: f64,
    lambda: f64,
    n: u32,
    certificate: &Certificate,
    opts: &SolveOptions,
    inner_tol: f64,
) -> Result<InnerRun> {
    assert!(!discs.is_empty());
    let mut records: Vec<StageRecord> = Vec::with_capacity(discs.len());
    let mut solutions: Vec<GalerkinSolution> = Vec::with_capacity(discs.len());
    let mut warm: Option<Vec<f64>> = None;
    for disc in discs {
        let prob = ApproxProblem::new(disc.clone(), f, lambda, q, n, certificate.clone())?;
        let padded = warm.map(|mut w: Vec<f64>| {
            w.resize(disc.dim(), 0.0);
            w
        });
        let sol = solve_in_ball(&prob, opts, padded.as_deref())?;
        warm = Some(sol.xi.clone());
        records.push(StageRecord {
            n,
            m: disc.dim(),
            h10_norm: sol.h10_norm,
            residual_norm: sol.residual_norm,
            min_value: sol.min_value,
            energy: sol.energy,
            newton_iterations: sol.newton_iterations,
            descent_steps: sol.descent_steps,
            path_hash: sol.path_hash.clone(),
            cauchy_h10: None,
        });
        solutions.push(sol);
    }
    let mut distances = Vec::with_capacity(solutions.len().saturating_sub(1));
    for w in solutions.windows(2) {
        distances.push(padded_h10_distance(&w[0].xi, &w[1].xi));
    }
    for (rec, d) in records.iter_mut().zip(distances.iter()) {
        rec.cauchy_h10 = Some(*d);
    }
    let distances_strictly_decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    let converged = distances.last().is_some_and(|d| *d <= inner_tol);
    let last = solutions.last().unwrap();
    Ok(InnerRun {
        n,
        records,
        distances,
        distances_strictly_decreasing,
        converged,
        final_m: discs.last().unwrap().dim(),
        final_xi: last.xi.clone(),
    })
}

/// Per-n summary in the outer limit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NSummary {
    pub n: u32,
    pub h10_norm: f64,
    pub residual_norm: f64,
    pub min_value: f64,
    pub inner_distances: Vec<f64>,
    pub inner_converged: bool,
    pub inner_distances_strictly_decreasing: bool,
    /// integral |f_n(v_n) - f(v_final)| on the final grid.
    pub l1_nonlinearity_gap: f64,
    /// integral f_n(v_n+) v_n+ (uniformly bounded by the certificate).
    pub strauss_pairing_value: f64,
    /// min over the grid of v_n - lambda^{1/(1-q)} w_tilde.
    pub lower_bound_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cauchy_to_next_h10: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cauchy_to_next_l2: Option<f64>,
}

/// One verification check of the final solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_location: Option<Vec<f64>>,
}

/// Verification report for the final solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinalReport {
    pub checks: Vec<CheckResult>,
    pub all_pass: bool,
    /// Strong residual of the regularized equation the final solution
    /// actually solves (-Delta v = lambda v^q + f_n(v) + 1/n); the
    /// discretization-only part of the defect.
    pub regularized_strong_residual: f64,
}

/// Full outer-limit report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub lambda: f64,
    pub certificate: Certificate,
    pub stages: Vec<StageRecord>,
    pub per_n: Vec<NSummary>,
    /// Every solution across all (n, m) satisfies ||v|| <= r.
    pub uniform_bound_ok: bool,
    pub max_h10_norm: f64,
    pub l1_gaps_decreasing: bool,
    pub final_l1_gap: f64,
    /// Certified bound for the strauss pairing values: 2^{p+1} sobolev_p1
    /// r^{p+1} + C 2^p |Omega| / n^2 at the smallest n.
    pub pairing_bound: f64,
    pub pairing_bounded_ok: bool,
    pub outer_converged: bool,
    pub notes: Vec<String>,
    pub final_check: FinalReport,
}

/// Outcome of a full pipeline run.
pub struct PipelineOutcome {
    pub report: ConvergenceReport,
    pub final_xi: Vec<f64>,
    pub final_disc: Arc<Discretization>,
    pub reference: ReferenceSolution,
}

/// Run the full double limit for a configuration.
pub fn outer_limit(config: &RunConfig) -> Result<PipelineOutcome> {
    config.validate()?;
    let lambda = config.resolve_lambda()?;
    let f = config.f.build()?;
    let certificate = config.certificate()?;
    certificate.require_feasible()?;
    let opts = SolveOptions {
        tol: config.tolerances.solver_tol,
        ..SolveOptions::default()
    };

    // Shared discretizations, one per basis dimension.
    let discs: Vec<Arc<Discretization>> = config
        .m_schedule
        .iter()
        .map(|&m| Discretization::standard(config.domain, m).map(Arc::new))
        .collect::<Result<_>>()?;

    // Inner limits for the different n run independently.
    let inner_runs: Vec<InnerRun> = config
        .n_schedule
        .par_iter()
        .map(|&n| {
            inner_limit(
                &discs,
                &f,
                config.q,
                lambda,
                n,
                &certificate,
                &opts,
                config.tolerances.inner_tol,
            )
        })
        .collect::<Result<_>>()?;

    let final_disc = discs.last().unwrap().clone();
    let reference = solve_reference_on(&final_disc, config.q, None)?;

    assemble_outcome(config, lambda, certificate, inner_runs, final_disc, reference, &f)
}

fn assemble_outcome(
    config: &RunConfig,
    lambda: f64,
    certificate: Certificate,
    inner_runs: Vec<InnerRun>,
    final_disc: Arc<Discretization>,
    reference: ReferenceSolution,
    f: &Nonlinearity,
) -> Result<PipelineOutcome> {
    let mut notes = Vec::new();
    let final_run = inner_runs.last().unwrap();
    let final_xi = final_run.final_xi.clone();
    let v_final = final_disc.expand(&final_xi)?;
    let f_of_final: Vec<f64> = v_final.0.iter().map(|&t| f.eval(t.max(0.0))).collect();
    let eigenvalues = final_disc.basis.eigenvalues();

    let mut per_n: Vec<NSummary> = Vec::with_capacity(inner_runs.len());
    let mut stages: Vec<StageRecord> = Vec::new();
    for run in &inner_runs {
        stages.extend(run.records.iter().cloned());
        let prob_n = ApproxProblem::new(
            final_disc.clone(),
            f,
            lambda,
            config.q,
            run.n,
            certificate.clone(),
        )?;
        let mut padded = run.final_xi.clone();
        padded.resize(final_disc.dim(), 0.0);
        let v_n = final_disc.expand(&padded)?;
        let gap_integrand: Vec<f64> = v_n
            .0
            .iter()
            .zip(f_of_final.iter())
            .map(|(&t, &fv)| (prob_n.f_n.eval(t.max(0.0)) - fv).abs())
            .collect();
        let l1_gap = final_disc.quad.integrate(&gap_integrand);
        let pairing_integrand: Vec<f64> = v_n
            .0
            .iter()
            .map(|&t| {
                let tp = t.max(0.0);
                prob_n.f_n.eval(tp) * tp
            })
            .collect();
        let strauss_pairing_value = final_disc.quad.integrate(&pairing_integrand);
        let (lower_bound_margin, _) = comparison_lower_bound(&v_n, &reference, lambda)?;
        let last = run.records.last().unwrap();
        per_n.push(NSummary {
            n: run.n,
            h10_norm: last.h10_norm,
            residual_norm: last.residual_norm,
            min_value: last.min_value,
            inner_distances: run.distances.clone(),
            inner_converged: run.converged,
            inner_distances_strictly_decreasing: run.distances_strictly_decreasing,
            l1_nonlinearity_gap: l1_gap,
            strauss_pairing_value,
            lower_bound_margin,
            cauchy_to_next_h10: None,
            cauchy_to_next_l2: None,
        });
        if !run.converged {
            notes.push(format!(
                "inner limit at n = {} exhausted the m-schedule before reaching tol {:.1e} (last distance {:.3e})",
                run.n,
                config.tolerances.inner_tol,
                run.distances.last().copied().unwrap_or(f64::NAN),
            ));
        }
    }

    for i in 0..inner_runs.len().saturating_sub(1) {
        let a = &inner_runs[i].final_xi;
        let b = &inner_runs[i + 1].final_xi;
        per_n[i].cauchy_to_next_h10 = Some(padded_h10_distance(a, b));
        per_n[i].cauchy_to_next_l2 = Some(padded_l2_distance(a, b, &eigenvalues));
    }

    let max_h10_norm = stages.iter().map(|s| s.h10_norm).fold(0.0, f64::max);
    let uniform_bound_ok = max_h10_norm <= certificate.r + 1e-12;
    let l1_gaps: Vec<f64> = per_n.iter().map(|s| s.l1_nonlinearity_gap).collect();
    let l1_gaps_decreasing = l1_gaps.windows(2).all(|w| w[1] < w[0]);
    let final_l1_gap = *l1_gaps.last().unwrap();

    // Certified bound for integral f_n(v_+) v_+ , uniform in n.
    let p = certificate.p;
    let n_min = config.n_schedule.first().copied().unwrap_or(1) as f64;
    let pairing_bound = 2f64.powf(p + 1.0) * certificate.sobolev_p1 * certificate.r.powf(p + 1.0)
        + certificate.growth_constant * 2f64.powf(p) * certificate.omega_measure / (n_min * n_min);
    let pairing_bounded_ok = per_n
        .iter()
        .all(|s| s.strauss_pairing_value <= pairing_bound);

    let outer_converged = if per_n.len() < 2 {
        notes.push("n-schedule has a single point; no outer Cauchy sequence to assess".into());
        false
    } else {
        l1_gaps_decreasing && final_l1_gap <= config.tolerances.outer_l1_tol
    };

    let n_final = *config.n_schedule.last().unwrap();
    let final_check = verify_final(
        &final_disc,
        &final_xi,
        f,
        lambda,
        config.q,
        n_final,
        &reference,
        config.seed,
    )?;

    let report = ConvergenceReport {
        lambda,
        certificate,
        stages,
        per_n,
        uniform_bound_ok,
        max_h10_norm,
        l1_gaps_decreasing,
        final_l1_gap,
        pairing_bound,
        pairing_bounded_ok,
        outer_converged,
        notes,
        final_check,
    };
    Ok(PipelineOutcome {
        report,
        final_xi,
        final_disc,
        reference,
    })
}

/// Smooth compactly supported bump, and its derivative, on one axis.
fn bump(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

fn bump_derivative(u: f64) -> f64 {
    if u.abs() < 1.0 {
        let d = 1.0 - u * u;
        (-1.0 / d).exp() * (-2.0 * u / (d * d))
    } else {
        0.0
    }
}

/// Verify the final grid function against the original problem:
/// (a) strong residual of -Delta v = lambda v^q + f(v) on interior nodes,
/// (b) positivity against the scaled reference minimum,
/// (c) smallness at boundary-adjacent nodes (allowing the linear ramp),
/// (d) the distributional identity against random smooth bumps.
#[allow(clippy::too_many_arguments)]
pub fn verify_final(
    disc: &Discretization,
    xi: &[f64],
    f: &Nonlinearity,
    lambda: f64,
    q: f64,
    n_final: u32,
    reference: &ReferenceSolution,
    seed: u64,
) -> Result<FinalReport> {
    disc.check_len(xi)?;
    let v = disc.expand(xi)?;
    let neg_lap = disc.neg_laplacian(xi)?;
    let interior = disc.interior_indices();

    // (a) strong residual of the limit equation.
    let mut worst = (0.0f64, 0usize);
    for &t in &interior {
        let tp = v.0[t].max(0.0);
        let defect = (neg_lap.0[t] - lambda * tp.powf(q) - f.eval(tp)).abs();
        if defect > worst.0 {
            worst = (defect, t);
        }
    }
    let strong_residual = CheckResult {
        name: "strong_residual".into(),
        value: worst.0,
        tolerance: 1e-6,
        pass: worst.0 <= 1e-6,
        worst_location: Some(disc.quad.node(worst.1)),
    };

    // Diagnostic: residual of the regularized equation actually solved.
    let f_n = StraussApprox::new(f, n_final)?;
    let inv_n = 1.0 / n_final as f64;
    let regularized_strong_residual = interior
        .iter()
        .map(|&t| {
            let tp = v.0[t].max(0.0);
            (neg_lap.0[t] - lambda * tp.powf(q) - f_n.eval(tp) - inv_n).abs()
        })
        .fold(0.0, f64::max);

    // (b) positivity: min interior v against the scaled reference minimum.
    let scale = lambda.powf(1.0 / (1.0 - q));
    let min_interior_v = interior
        .iter()
        .map(|&t| v.0[t])
        .fold(f64::INFINITY, f64::min);
    let positivity_floor = scale * reference.min_interior - 1e-8;
    let positivity = CheckResult {
        name: "positivity".into(),
        value: min_interior_v,
        tolerance: positivity_floor,
        pass: min_interior_v >= positivity_floor,
        worst_location: None,
    };

    // (c) boundary-adjacent values, allowing the linear ramp |grad v| d.
    let grads = disc.expand_grad(xi)?;
    let mut grad_sup = 0.0f64;
    for t in 0..disc.quad.len() {
        let mut sq = 0.0;
        for g in &grads {
            sq += g.0[t] * g.0[t];
        }
        grad_sup = grad_sup.max(sq.sqrt());
    }
    let mut boundary_worst = (f64::NEG_INFINITY, 0usize);
    for t in disc.boundary_adjacent_indices() {
        let d = disc.quad.node_boundary_distance(t);
        let excess = v.0[t].abs() - grad_sup * d;
        if excess > boundary_worst.0 {
            boundary_worst = (excess, t);
        }
    }
    let boundary = CheckResult {
        name: "boundary_values".into(),
        value: boundary_worst.0.max(0.0),
        tolerance: 1e-8,
        pass: boundary_worst.0 <= 1e-8,
        worst_location: Some(disc.quad.node(boundary_worst.1)),
    };

    // (d) distributional identity against random smooth bumps,
    // normalized to unit H^1_0 norm. Bumps are axis products, so their
    // values and gradients come from per-axis tables.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e57_b0b5);
    let dim = disc.basis.domain.dim();
    let npts = disc.quad.len();
    // The right-hand side of the limit equation, shared by all probes.
    let rhs: Vec<f64> = v
        .0
        .iter()
        .map(|&t| {
            let tp = t.max(0.0);
            lambda * crate::numeric::pow_nonneg(tp, q) + f.eval(tp)
        })
        .collect();
    let mut max_defect = 0.0f64;
    for _ in 0..20 {
        let mut phi_axis: Vec<Vec<f64>> = Vec::with_capacity(dim);
        let mut dphi_axis: Vec<Vec<f64>> = Vec::with_capacity(dim);
        for axis in 0..dim {
            let len = disc.basis.domain.side(axis);
            let c: f64 = rng.gen_range(0.25 * len..0.75 * len);
            let w = c.min(len - c) * rng.gen_range(0.5..0.95);
            let nodes = &disc.quad.axes[axis].nodes;
            phi_axis.push(nodes.iter().map(|&x| bump((x - c) / w)).collect());
            dphi_axis.push(
                nodes
                    .iter()
                    .map(|&x| bump_derivative((x - c) / w) / w)
                    .collect(),
            );
        }
        let mut integrand = vec![0.0; npts];
        let mut grad_sq = vec![0.0; npts];
        match dim {
            1 => {
                for t in 0..npts {
                    let g = dphi_axis[0][t];
                    grad_sq[t] = g * g;
                    integrand[t] = grads[0].0[t] * g - rhs[t] * phi_axis[0][t];
                }
            }
            2 => {
                let ny = disc.quad.axes[1].len();
                for t in 0..npts {
                    let (ix, iy) = (t / ny, t % ny);
                    let gx = dphi_axis[0][ix] * phi_axis[1][iy];
                    let gy = phi_axis[0][ix] * dphi_axis[1][iy];
                    grad_sq[t] = gx * gx + gy * gy;
                    integrand[t] = grads[0].0[t] * gx + grads[1].0[t] * gy
                        - rhs[t] * phi_axis[0][ix] * phi_axis[1][iy];
                }
            }
            _ => unreachable!(),
        }
        let phi_norm = disc.quad.integrate(&grad_sq).sqrt();
        if phi_norm < 1e-12 {
            continue;
        }
        let defect = disc.quad.integrate(&integrand).abs() / phi_norm;
        max_defect = max_defect.max(defect);
    }
    let distributional = CheckResult {
        name: "distributional_identity".into(),
        value: max_defect,
        tolerance: 1e-7,
        pass: max_defect <= 1e-7,
        worst_location: None,
    };

    let checks = vec![strong_residual, positivity, boundary, distributional];
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(FinalReport {
        checks,
        all_pass,
        regularized_strong_residual,
    })
}
