//! The finite-dimensional Galerkin map and its ball-constrained solver.
//!
//! For v = sum_j xi_j w_j in the span of the first m unit-H^1_0 eigenmodes,
//! the map is
//!
//! ```text
//! F_j(xi) = xi_j - lambda integral (v_+)^q w_j - integral f_n(v_+) w_j
//!           - (1/n) integral w_j
//! ```
//!
//! F is the gradient of the energy
//!
//! ```text
//! E(xi) = |xi|^2/2 - lambda/(q+1) integral (v_+)^{q+1}
//!         - integral Fn(v_+) - (1/n) integral v
//! ```
//!
//! where Fn is the antiderivative of f_n. The certificate guarantees
//! <F(xi), xi> >= rho/2 on the sphere |xi| = r, so a zero exists inside the
//! ball; the solver finds it by damped Newton steps kept inside the ball,
//! falling back to energy descent when Newton stagnates.

use crate::certificate::Certificate;
use crate::domain::{Discretization, GridFn};
use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::numeric::pow_nonneg;
use crate::strauss::{StraussAntiderivative, StraussApprox};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::Arc;

/// Regularization added to v_+ inside the Newton Jacobian only; the
/// residual is always evaluated unregularized.
const JACOBIAN_EPS: f64 = 1e-12;

/// The discretized approximate problem at fixed (m, n).
pub struct ApproxProblem {
    pub disc: Arc<Discretization>,
    pub f_n: StraussApprox,
    pub lambda: f64,
    pub q: f64,
    pub n: u32,
    pub certificate: Certificate,
    /// Whether (lambda, n) are inside the certified window.
    pub certified: bool,
    source_projection: Vec<f64>,
    f_n_antiderivative: StraussAntiderivative,
}

impl ApproxProblem {
    pub fn new(
        disc: Arc<Discretization>,
        f: &Nonlinearity,
        lambda: f64,
        q: f64,
        n: u32,
        certificate: Certificate,
    ) -> Result<Self> {
        if q.is_nan() || q <= 0.0 || q >= 1.0 {
            return Err(Error::InvalidSublinearExponent(q));
        }
        if lambda < 0.0 || !lambda.is_finite() {
            return Err(Error::NonPositiveLambda(lambda));
        }
        if n == 0 {
            return Err(Error::InvalidParameter(
                "regularization index n must be positive".into(),
            ));
        }
        let f_n = StraussApprox::new(f, n)?;
        let f_n_antiderivative = StraussAntiderivative::new(&f_n);
        let ones = GridFn(vec![1.0; disc.quad.len()]);
        let source_projection = disc.project(&ones);
        let certified = certificate.feasible
            && lambda > 0.0
            && lambda < certificate.lambda_star
            && certificate.n_star.is_some_and(|ns| n >= ns);
        Ok(Self {
            disc,
            f_n,
            lambda,
            q,
            n,
            certificate,
            certified,
            source_projection,
            f_n_antiderivative,
        })
    }

    pub fn dim(&self) -> usize {
        self.disc.dim()
    }

    /// The zero-nonlinearity minimizer xi0_j = (1/n) integral w_j, the
    /// solver's default initial guess.
    pub fn source_minimizer(&self) -> Vec<f64> {
        let inv_n = 1.0 / self.n as f64;
        self.source_projection.iter().map(|p| p * inv_n).collect()
    }

    /// F(xi).
    pub fn residual(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.disc.check_len(xi)?;
        let v = self.disc.expand(xi)?;
        let g = v.map(|t| {
            let tp = t.max(0.0);
            self.lambda * pow_nonneg(tp, self.q) + self.f_n.eval(tp)
        });
        let proj = self.disc.project(&g);
        let inv_n = 1.0 / self.n as f64;
        Ok(xi
            .iter()
            .zip(proj.iter().zip(self.source_projection.iter()))
            .map(|(x, (p, s))| x - p - inv_n * s)
            .collect())
    }

    /// <F(xi), xi> evaluated through the closed form
    /// |xi|^2 - lambda integral (v_+)^{q+1} - integral f_n(v_+) v_+ - (1/n) integral v.
    pub fn pairing(&self, xi: &[f64]) -> Result<f64> {
        self.disc.check_len(xi)?;
        let v = self.disc.expand(xi)?;
        let norm_sq: f64 = xi.iter().map(|x| x * x).sum();
        let nonlinear = v.map(|t| {
            let tp = t.max(0.0);
            self.lambda * pow_nonneg(tp, self.q + 1.0) + self.f_n.eval(tp) * tp
        });
        let source = self.disc.quad.integrate(&v.0);
        Ok(norm_sq - self.disc.quad.integrate(&nonlinear.0) - source / self.n as f64)
    }

    /// The pairing split over {|v| >= 1/n} and {|v| < 1/n}, with the
    /// gradient term evaluated by masked quadrature.
    pub fn pairing_split(&self, xi: &[f64]) -> Result<(f64, f64)> {
        self.disc.check_len(xi)?;
        let v = self.disc.expand(xi)?;
        let grads = self.disc.expand_grad(xi)?;
        let mut grad_sq = vec![0.0; v.len()];
        for g in &grads {
            for (s, gv) in grad_sq.iter_mut().zip(g.0.iter()) {
                *s += gv * gv;
            }
        }
        let inv_n = 1.0 / self.n as f64;
        let integrand: Vec<f64> = v
            .0
            .iter()
            .zip(grad_sq.iter())
            .map(|(&t, &gsq)| {
                let tp = t.max(0.0);
                gsq - self.lambda * pow_nonneg(tp, self.q + 1.0) - self.f_n.eval(tp) * tp - inv_n * t
            })
            .collect();
        let threshold = inv_n;
        let plus = self
            .disc
            .quad
            .integrate_where(&integrand, |t| v.0[t].abs() >= threshold);
        let minus = self
            .disc
            .quad
            .integrate_where(&integrand, |t| v.0[t].abs() < threshold);
        Ok((plus, minus))
    }

    /// E(xi); F is its exact gradient at the quadrature level.
    pub fn energy(&self, xi: &[f64]) -> Result<f64> {
        self.disc.check_len(xi)?;
        let v = self.disc.expand(xi)?;
        let norm_sq: f64 = xi.iter().map(|x| x * x).sum();
        let nonlinear = v.map(|t| {
            let tp = t.max(0.0);
            self.lambda / (self.q + 1.0) * pow_nonneg(tp, self.q + 1.0)
                + self.f_n_antiderivative.eval(tp)
        });
        let source = self.disc.quad.integrate(&v.0);
        Ok(norm_sq / 2.0 - self.disc.quad.integrate(&nonlinear.0) - source / self.n as f64)
    }

    /// Newton Jacobian of F: identity minus the Gram matrix weighted by
    /// the regularized pointwise derivative of the nonlinear terms.
    pub fn jacobian(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        self.disc.check_len(xi)?;
        let v = self.disc.expand(xi)?;
        let c = v.map(|t| {
            if t > 0.0 {
                self.lambda * self.q * pow_nonneg(t + JACOBIAN_EPS, self.q - 1.0)
                    + self.f_n.derivative(t)
            } else {
                0.0
            }
        });
        let mut j = -self.disc.weighted_gram(&c);
        for d in 0..self.dim() {
            j[(d, d)] += 1.0;
        }
        Ok(j)
    }
}

/// Solver options.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Euclidean residual tolerance on |F(xi)|.
    pub tol: f64,
    pub max_newton: usize,
    pub max_descent: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_newton: 200,
            max_descent: 10_000,
        }
    }
}

/// A converged root of F inside the certified ball.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GalerkinSolution {
    pub xi: Vec<f64>,
    pub residual_norm: f64,
    pub h10_norm: f64,
    /// min over the quadrature grid of v.
    pub min_value: f64,
    pub energy: f64,
    pub picard_steps: usize,
    pub newton_iterations: usize,
    pub descent_steps: usize,
    /// SHA-256 over the accepted iterate path, for reproducibility records.
    pub path_hash: String,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn project_ball(xi: &mut [f64], radius: f64) {
    let n = norm(xi);
    if n > radius {
        let s = radius / n;
        for x in xi.iter_mut() {
            *x *= s;
        }
    }
}

/// Find xi with |F(xi)| <= opts.tol and |xi| <= certificate.r.
///
/// Strategy: a short fixed-point warm-up (the map xi -> xi - F(xi) is the
/// inverse-Laplacian iteration, contractive inside the certified ball),
/// then damped Newton on F with a Levenberg shift escalation when the
/// plain step is rejected, iterates projected onto the ball, and chunks of
/// energy descent as the stagnation fallback. The initial guess is the
/// source-term minimizer unless a warm start is supplied.
pub fn solve_in_ball(
    prob: &ApproxProblem,
    opts: &SolveOptions,
    warm_start: Option<&[f64]>,
) -> Result<GalerkinSolution> {
    let m = prob.dim();
    let radius = prob.certificate.r;
    let mut xi: Vec<f64> = match warm_start {
        Some(w) => {
            prob.disc.check_len(w)?;
            w.to_vec()
        }
        None => prob.source_minimizer(),
    };
    project_ball(&mut xi, radius);

    let mut hasher = Sha256::new();
    let record_iterate = |xi: &[f64], hasher: &mut Sha256| {
        for x in xi {
            hasher.update(x.to_le_bytes());
        }
    };
    record_iterate(&xi, &mut hasher);

    let mut f = prob.residual(&xi)?;
    let mut fnorm = norm(&f);
    let mut best_residual = fnorm;
    let mut picard_steps = 0usize;
    let mut newton_iterations = 0usize;
    let mut descent_steps = 0usize;
    let mut converged = fnorm <= opts.tol;

    // Fixed-point warm-up. The jump sizes of the monotone iteration may
    // grow for a few steps before contracting, so run on a best-iterate
    // checkpoint instead of requiring monotone decrease.
    let mut best_xi = xi.clone();
    let mut best_f = f.clone();
    let mut stalled = 0usize;
    while !converged && picard_steps < 60 {
        let mut cand: Vec<f64> = xi.iter().zip(f.iter()).map(|(x, g)| x - g).collect();
        project_ball(&mut cand, radius);
        let fc = prob.residual(&cand)?;
        let fcnorm = norm(&fc);
        if !fcnorm.is_finite() || fcnorm > 5.0 * best_residual {
            break;
        }
        stalled = if fcnorm >= 0.99 * fnorm { stalled + 1 } else { 0 };
        picard_steps += 1;
        xi = cand;
        f = fc;
        fnorm = fcnorm;
        record_iterate(&xi, &mut hasher);
        if fnorm < best_residual {
            best_residual = fnorm;
            best_xi = xi.clone();
            best_f = f.clone();
        }
        converged = fnorm <= opts.tol;
        if stalled >= 2 {
            break;
        }
    }
    if !converged && fnorm > best_residual {
        xi = best_xi;
        f = best_f;
        fnorm = best_residual;
        record_iterate(&xi, &mut hasher);
    }

    while !converged && newton_iterations < opts.max_newton {
        newton_iterations += 1;
        let jac = prob.jacobian(&xi)?;
        let mut accepted = false;

        // Newton step with Levenberg escalation.
        let diag_scale = 1.0 + jac.diagonal().amax();
        for shift in [0.0, 1e-8, 1e-4, 1e-2, 1.0, 1e2] {
            let mut shifted = jac.clone();
            for d in 0..m {
                shifted[(d, d)] += shift * diag_scale;
            }
            let rhs = DVector::from_iterator(m, f.iter().map(|x| -x));
            let Some(dir) = shifted.lu().solve(&rhs) else {
                continue;
            };
            if dir.iter().any(|d| !d.is_finite()) {
                continue;
            }
            // Backtracking on the residual norm.
            let mut t = 1.0f64;
            while t >= 6e-5 {
                let mut cand: Vec<f64> =
                    xi.iter().zip(dir.iter()).map(|(x, d)| x + t * d).collect();
                project_ball(&mut cand, radius);
                let fc = prob.residual(&cand)?;
                let fcnorm = norm(&fc);
                if fcnorm <= (1.0 - 1e-4 * t) * fnorm {
                    xi = cand;
                    f = fc;
                    fnorm = fcnorm;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if accepted {
                break;
            }
        }

        if accepted {
            record_iterate(&xi, &mut hasher);
            best_residual = best_residual.min(fnorm);
            converged = fnorm <= opts.tol;
            continue;
        }

        // Newton stagnated: descend on the energy (F is its gradient).
        if descent_steps >= opts.max_descent {
            break;
        }
        let mut energy = prob.energy(&xi)?;
        let mut alpha = 1.0f64;
        let chunk = 500.min(opts.max_descent - descent_steps);
        let mut progressed = false;
        for _ in 0..chunk {
            descent_steps += 1;
            let mut cand: Vec<f64> = xi
                .iter()
                .zip(f.iter())
                .map(|(x, g)| x - alpha * g)
                .collect();
            project_ball(&mut cand, radius);
            let cand_energy = prob.energy(&cand)?;
            if cand_energy <= energy - 1e-4 * alpha * fnorm * fnorm {
                xi = cand;
                energy = cand_energy;
                f = prob.residual(&xi)?;
                fnorm = norm(&f);
                best_residual = best_residual.min(fnorm);
                progressed = true;
                alpha = (alpha * 1.5).min(1e3);
                if fnorm <= opts.tol {
                    converged = true;
                    break;
                }
            } else {
                alpha *= 0.5;
                if alpha < 1e-16 {
                    break;
                }
            }
        }
        if progressed {
            record_iterate(&xi, &mut hasher);
        } else {
            break;
        }
    }

    if !converged {
        return Err(Error::SolveFailed {
            best_residual: best_residual.min(fnorm),
        });
    }

    let v = prob.disc.expand(&xi)?;
    let energy = prob.energy(&xi)?;
    let solution = GalerkinSolution {
        h10_norm: norm(&xi),
        residual_norm: fnorm,
        min_value: v.min(),
        energy,
        picard_steps,
        newton_iterations,
        descent_steps,
        path_hash: format!("{:x}", {
            record_iterate(&xi, &mut hasher);
            hasher.finalize()
        }),
        xi,
    };
    Ok(solution)
}

/// Minimum of <F(xi), xi> over sampled points of the sphere |xi| = r.
///
/// The certificate guarantees a margin of rho/2; sampling verifies it on
/// the assembled map. In dimension 1 the sphere is checked exhaustively.
pub fn sphere_margin_check(prob: &ApproxProblem, trials: usize, seed: u64) -> Result<f64> {
    let m = prob.dim();
    let r = prob.certificate.r;
    let mut min_pairing = f64::INFINITY;
    if m == 1 {
        for xi in [[r], [-r]] {
            min_pairing = min_pairing.min(prob.pairing(&xi)?);
        }
        return Ok(min_pairing);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        // Gaussian direction via Box-Muller, normalized to the sphere.
        let mut xi = vec![0.0f64; m];
        for pair in xi.chunks_mut(2) {
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            let mag = (-2.0 * u1.ln()).sqrt();
            pair[0] = mag * (2.0 * std::f64::consts::PI * u2).cos();
            if pair.len() > 1 {
                pair[1] = mag * (2.0 * std::f64::consts::PI * u2).sin();
            }
        }
        let n = norm(&xi);
        if n == 0.0 {
            continue;
        }
        for x in xi.iter_mut() {
            *x *= r / n;
        }
        min_pairing = min_pairing.min(prob.pairing(&xi)?);
    }
    Ok(min_pairing)
}

/// Weak-form defects of a solution against probe test functions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakResidualReport {
    /// max |F_j| over the m basis functions.
    pub max_in_span: f64,
    /// Defect against the single next mode w_{m+1}.
    pub next_mode_defect: f64,
    /// max defect over random unit combinations of modes above m.
    pub max_out_of_span: f64,
    pub out_of_span_defects: Vec<f64>,
}

/// Evaluate the weak identity against all basis functions and against
/// `probe_count` random smooth combinations of modes outside span(W_m).
pub fn weak_residual(
    prob: &ApproxProblem,
    xi: &[f64],
    probe_count: usize,
    seed: u64,
) -> Result<WeakResidualReport> {
    prob.disc.check_len(xi)?;
    let f = prob.residual(xi)?;
    let max_in_span = f.iter().map(|x| x.abs()).fold(0.0, f64::max);

    // Extended space: the probes live in modes m+1 .. m+extra. Gradients of
    // the expansion are orthogonal to those modes, so the defect against a
    // probe w is -lambda integral (v_+)^q w - integral f_n(v_+) w - (1/n) integral w,
    // i.e. minus the projection of the right-hand side.
    let m = prob.dim();
    let extra = probe_count.max(8);
    let ext = Discretization::standard(prob.disc.basis.domain, m + extra)?;
    let mut padded = xi.to_vec();
    padded.resize(m + extra, 0.0);
    let v = ext.expand(&padded)?;
    let g = v.map(|t| {
        let tp = t.max(0.0);
        prob.lambda * pow_nonneg(tp, prob.q) + prob.f_n.eval(tp)
    });
    let mut rhs_proj = ext.project(&g);
    let ones = GridFn(vec![1.0; ext.quad.len()]);
    let source = ext.project(&ones);
    let inv_n = 1.0 / prob.n as f64;
    for (p, s) in rhs_proj.iter_mut().zip(source.iter()) {
        *p += inv_n * s;
    }
    let tail = &rhs_proj[m..];

    let next_mode_defect = tail[0].abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out_of_span_defects = Vec::with_capacity(probe_count);
    for _ in 0..probe_count {
        let mut eta: Vec<f64> = (0..extra).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(&eta);
        if n == 0.0 {
            out_of_span_defects.push(0.0);
            continue;
        }
        for e in eta.iter_mut() {
            *e /= n;
        }
        let defect: f64 = eta.iter().zip(tail.iter()).map(|(e, p)| e * p).sum();
        out_of_span_defects.push(defect.abs());
    }
    let max_out_of_span = out_of_span_defects
        .iter()
        .copied()
        .fold(next_mode_defect, f64::max);
    Ok(WeakResidualReport {
        max_in_span,
        next_mode_defect,
        max_out_of_span,
        out_of_span_defects,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::build_certificate;
    use crate::domain::ModelDomain;
    use approx::assert_abs_diff_eq;

    const PI: f64 = std::f64::consts::PI;

    fn unit_interval_problem(
        f: &Nonlinearity,
        lambda: f64,
        n: u32,
        m: usize,
    ) -> ApproxProblem {
        let domain = ModelDomain::interval(1.0);
        let cert_lambda = if lambda > 0.0 { lambda } else { 1e-6 };
        let cert = build_certificate(domain, 0.5, 3.0, 1.0, cert_lambda).unwrap();
        let disc = Arc::new(Discretization::standard(domain, m).unwrap());
        ApproxProblem::new(disc, f, lambda, 0.5, n, cert).unwrap()
    }

    #[test]
    fn residual_at_zero_is_the_source_term() {
        // F_j(0) = -(1/n) integral w_j; with m = 1, n = 1 this is
        // -integral sqrt(2) sin(pi x) / pi = -2 sqrt(2) / pi^2.
        let prob = unit_interval_problem(&Nonlinearity::zero(), 0.0, 1, 1);
        let f = prob.residual(&[0.0]).unwrap();
        assert_abs_diff_eq!(f[0], -2.0 * 2.0f64.sqrt() / (PI * PI), epsilon = 1e-12);
    }

    #[test]
    fn linear_case_solves_in_one_newton_step() {
        // f = 0, lambda = 0: F(xi) = xi - source, solved exactly from any
        // start; the solver should converge immediately from the minimizer.
        let prob = unit_interval_problem(&Nonlinearity::zero(), 0.0, 10, 8);
        let sol = solve_in_ball(&prob, &SolveOptions::default(), None).unwrap();
        assert!(sol.residual_norm <= 1e-12);
        assert!(sol.newton_iterations <= 1);
        assert_eq!(sol.descent_steps, 0);
        // Coefficients must be exactly the source projections
        // (1/n) sqrt(2) (1 - (-1)^j) / (j^2 pi^2).
        for (a, mode) in prob.disc.basis.modes.iter().enumerate() {
            let j = mode.indices[0] as f64;
            let parity = if mode.indices[0] % 2 == 1 { 2.0 } else { 0.0 };
            let expected = 2.0f64.sqrt() * parity / (j * j * PI * PI * 10.0);
            assert_abs_diff_eq!(sol.xi[a], expected, epsilon = 1e-13);
        }
        // Midpoint value approximates x(1-x)/(2n) up to the Fourier tail
        // of the constant source (~1e-5 at m = 8).
        let v_mid = prob
            .disc
            .basis
            .eval_expansion(&sol.xi, &[vec![0.5]])
            .unwrap()[0];
        assert_abs_diff_eq!(v_mid, 0.125 / 10.0, epsilon = 1e-4);
    }

    #[test]
    fn energy_vanishes_at_zero_and_is_minimized_at_source_term() {
        let prob = unit_interval_problem(&Nonlinearity::zero(), 0.0, 5, 6);
        assert_eq!(prob.energy(&vec![0.0; 6]).unwrap(), 0.0);
        let sol = solve_in_ball(&prob, &SolveOptions::default(), None).unwrap();
        let e_min = prob.energy(&sol.xi).unwrap();
        // Quadratic energy: minimum at the source minimizer.
        let mut perturbed = sol.xi.clone();
        perturbed[0] += 0.01;
        assert!(prob.energy(&perturbed).unwrap() > e_min);
    }

    #[test]
    fn gradient_of_energy_matches_residual() {
        use rand::{Rng, SeedableRng};
        let f = Nonlinearity::pure_power(3.0).unwrap();
        let prob = unit_interval_problem(&f, 0.3, 16, 6);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let h = 1e-5;
        let r = prob.certificate.r;
        for _ in 0..20 {
            let xi: Vec<f64> = (0..6).map(|_| rng.gen_range(-0.3 * r..0.3 * r)).collect();
            let f_val = prob.residual(&xi).unwrap();
            for j in 0..6 {
                let mut plus = xi.clone();
                plus[j] += h;
                let mut minus = xi.clone();
                minus[j] -= h;
                let fd = (prob.energy(&plus).unwrap() - prob.energy(&minus).unwrap()) / (2.0 * h);
                assert!(
                    (fd - f_val[j]).abs() <= 1e-6,
                    "gradient mismatch at j = {j}: fd = {fd}, F = {}",
                    f_val[j]
                );
            }
        }
    }

    #[test]
    fn certified_solve_stays_inside_ball_and_positive() {
        let f = Nonlinearity::pure_power(3.0).unwrap();
        let domain = ModelDomain::interval(1.0);
        let probe = build_certificate(domain, 0.5, 3.0, 1.0, 1.0).unwrap();
        let lambda = probe.lambda_star / 2.0;
        let cert = build_certificate(domain, 0.5, 3.0, 1.0, lambda).unwrap();
        let n = cert.n_star.unwrap().max(4);
        let disc = Arc::new(Discretization::standard(domain, 16).unwrap());
        let prob = ApproxProblem::new(disc, &f, lambda, 0.5, n, cert).unwrap();
        assert!(prob.certified);
        let sol = solve_in_ball(&prob, &SolveOptions::default(), None).unwrap();
        assert!(sol.residual_norm <= 1e-10);
        assert!(sol.h10_norm < prob.certificate.r);
        assert!(sol.min_value > 0.0, "min v = {}", sol.min_value);
    }

    #[test]
    fn pairing_split_partitions_the_pairing() {
        use rand::{Rng, SeedableRng};
        let f = Nonlinearity::pure_power(3.0).unwrap();
        let prob = unit_interval_problem(&f, 0.4, 8, 8);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let xi: Vec<f64> = (0..8).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let direct = prob.pairing(&xi).unwrap();
            let (plus, minus) = prob.pairing_split(&xi).unwrap();
            assert!(
                (plus + minus - direct).abs() <= 1e-10 * (1.0 + direct.abs()),
                "split {plus} + {minus} != direct {direct}"
            );
        }
    }

    #[test]
    fn weak_residual_probes() {
        let f = Nonlinearity::zero();
        let prob = unit_interval_problem(&f, 0.0, 4, 8);
        let sol = solve_in_ball(&prob, &SolveOptions::default(), None).unwrap();
        let report = weak_residual(&prob, &sol.xi, 10, 99).unwrap();
        // In-span defects are the solver residual.
        assert!(report.max_in_span <= 1e-10);
        // For the constant source, the defect against w_j is
        // (1/n) integral w_j = (1/n) sqrt(2) (1 - (-1)^j) / (j^2 pi^2),
        // nonzero for odd j.
        let m1 = 9.0; // mode index m+1 = 9 (odd)
        let expected = 0.25 * 2.0f64.sqrt() * 2.0 / (m1 * m1 * PI * PI);
        assert_abs_diff_eq!(report.next_mode_defect, expected, epsilon = 1e-10);

        // Out-of-span defects shrink when m doubles.
        let prob2 = unit_interval_problem(&f, 0.0, 4, 16);
        let sol2 = solve_in_ball(&prob2, &SolveOptions::default(), None).unwrap();
        let report2 = weak_residual(&prob2, &sol2.xi, 10, 99).unwrap();
        assert!(report2.next_mode_defect < report.next_mode_defect);
    }

    #[test]
    fn residual_stable_under_quadrature_doubling() {
        // The converged root must stay a root when every cell of the
        // quadrature is split: all integrals entering F are resolved.
        use crate::domain::{Basis, Quadrature};
        let f = Nonlinearity::pure_power(3.0).unwrap();
        let domain = ModelDomain::interval(1.0);
        let probe = build_certificate(domain, 0.5, 3.0, 1.0, 1.0).unwrap();
        let lambda = probe.lambda_star / 2.0;
        let cert = build_certificate(domain, 0.5, 3.0, 1.0, lambda).unwrap();
        let disc = Arc::new(Discretization::standard(domain, 32).unwrap());
        let prob = ApproxProblem::new(disc, &f, lambda, 0.5, 4, cert.clone()).unwrap();
        let sol = solve_in_ball(&prob, &SolveOptions::default(), None).unwrap();

        let basis = Basis::build(domain, 32).unwrap();
        let quad = Quadrature::for_basis_refined(&basis, 2);
        let refined = Arc::new(Discretization::new(basis, quad));
        let prob2 = ApproxProblem::new(refined, &f, lambda, 0.5, 4, cert).unwrap();
        let residual = prob2.residual(&sol.xi).unwrap();
        let sup = residual.iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(
            sup <= 1e-10 * (1.0 + sol.h10_norm),
            "root drifts under cell doubling: |F| = {sup:.3e}"
        );
    }

    #[test]
    fn sphere_margin_exhaustive_in_dimension_one() {
        let f = Nonlinearity::zero();
        let prob = unit_interval_problem(&f, 1e-3, 50, 1);
        let min_pairing = sphere_margin_check(&prob, 10, 1).unwrap();
        // r^2 dominates the tiny nonlinear terms.
        assert!(min_pairing > 0.5 * prob.certificate.r * prob.certificate.r);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let domain = ModelDomain::interval(1.0);
        let cert = build_certificate(domain, 0.5, 3.0, 1.0, 0.1).unwrap();
        let disc = Arc::new(Discretization::standard(domain, 4).unwrap());
        let f = Nonlinearity::zero();
        assert!(ApproxProblem::new(disc.clone(), &f, 0.1, 1.5, 4, cert.clone()).is_err());
        assert!(ApproxProblem::new(disc.clone(), &f, -0.5, 0.5, 4, cert.clone()).is_err());
        assert!(ApproxProblem::new(disc, &f, 0.1, 0.5, 0, cert).is_err());
    }
}
