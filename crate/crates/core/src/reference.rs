//! The pure sublinear reference problem -Delta w = w^q, w > 0, w = 0 on
//! the boundary, solved by monotone iteration from a supersolution.
//!
//! The map T(w) = (-Delta)^{-1}(w^q) is order-preserving, so starting from
//! any supersolution the iterates decrease pointwise to the unique positive
//! solution. With the unit-H^1_0 eigenbasis, (-Delta)^{-1} g is simply
//! `expand(project(g))`, a diagonal solve.
//!
//! The scaled reference lambda^{1/(1-q)} w is the certified pointwise lower
//! bound for solutions of the full problem.

use crate::domain::{Discretization, GridFn, ModelDomain};
use crate::error::{Error, Result};
use crate::numeric::pow_nonneg;

/// Converged reference solution on a discretization grid.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub domain: ModelDomain,
    pub q: f64,
    /// Coefficients in the unit-H^1_0 basis.
    pub xi: Vec<f64>,
    /// Grid values on the discretization's quadrature nodes.
    pub w_tilde: GridFn,
    pub iterations: usize,
    /// sup over interior nodes of |-Delta w - w^q| (spectral Laplacian).
    pub residual_sup_interior: f64,
    /// sup change of one extra application of the fixed-point map.
    pub fixed_point_defect: f64,
    /// min of w over interior nodes.
    pub min_interior: f64,
    /// Scalar multiple of the principal eigenfunction used as the
    /// starting supersolution.
    pub supersolution_scale: f64,
}

/// Absolute slack allowed in the pointwise monotonicity assertion,
/// relative to the starting supersolution's sup norm.
const MONOTONE_SLACK: f64 = 1e-12;
const MAX_ITERATIONS: usize = 1000;

/// Solve the reference problem on the given discretization.
///
/// `start_scale`: optional explicit supersolution multiple; by default the
/// scalar condition (c |phi_1|_inf)^{1-q} lambda_1 >= 1 seeds a dyadic
/// upward scan until one application of the map decreases pointwise.
pub fn solve_reference_on(
    disc: &Discretization,
    q: f64,
    start_scale: Option<f64>,
) -> Result<ReferenceSolution> {
    if q.is_nan() || q <= 0.0 || q >= 1.0 {
        return Err(Error::InvalidSublinearExponent(q));
    }
    let m = disc.dim();
    let apply = |w: &GridFn| -> Result<(Vec<f64>, GridFn)> {
        let xi = disc.project(&w.map(|t| pow_nonneg(t.max(0.0), q)));
        let next = disc.expand(&xi)?;
        Ok((xi, next))
    };

    // Principal eigenfunction on the grid.
    let mut e1 = vec![0.0; m];
    e1[0] = 1.0;
    let phi1 = disc.expand(&e1)?;
    let phi1_sup = phi1.sup_norm();
    let lambda1 = disc.basis.domain.lambda1();

    // Starting scale from the scalar sufficient condition, then scan
    // dyadically until c phi1 dominates one application of the map.
    let mut c = start_scale
        .unwrap_or_else(|| lambda1.powf(-1.0 / (1.0 - q)) / phi1_sup)
        .max(f64::MIN_POSITIVE);
    let mut w0 = None;
    for _ in 0..60 {
        let candidate = phi1.map(|t| c * t);
        let (_, image) = apply(&candidate)?;
        let dominated = candidate
            .0
            .iter()
            .zip(image.0.iter())
            .all(|(a, b)| *b <= *a + MONOTONE_SLACK * (1.0 + c * phi1_sup));
        if dominated {
            w0 = Some(candidate);
            break;
        }
        c *= 2.0;
    }
    let w0 = w0.ok_or(Error::SupersolutionScanFailed)?;
    let slack = MONOTONE_SLACK * (1.0 + w0.sup_norm());

    let mut w = w0;
    let mut iterations = 0usize;
    let xi = loop {
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(Error::SolveFailed {
                best_residual: f64::NAN,
            });
        }
        let (next_xi, next) = apply(&w)?;
        let mut delta = 0.0f64;
        for (t, (&a, &b)) in w.0.iter().zip(next.0.iter()).enumerate() {
            if b > a + slack {
                return Err(Error::MonotonicityLost {
                    node: t,
                    violation: b - a,
                });
            }
            delta = delta.max((a - b).abs());
        }
        w = next;
        if delta <= 1e-12 {
            break next_xi;
        }
    };

    // Diagnostics.
    let (_, reapplied) = apply(&w)?;
    let fixed_point_defect = w
        .0
        .iter()
        .zip(reapplied.0.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let neg_lap = disc.neg_laplacian(&xi)?;
    let wq = w.map(|t| pow_nonneg(t.max(0.0), q));
    let interior = disc.interior_indices();
    let residual_sup_interior = interior
        .iter()
        .map(|&t| (neg_lap.0[t] - wq.0[t]).abs())
        .fold(0.0, f64::max);
    let min_interior = interior
        .iter()
        .map(|&t| w.0[t])
        .fold(f64::INFINITY, f64::min);

    Ok(ReferenceSolution {
        domain: disc.basis.domain,
        q,
        xi,
        w_tilde: w,
        iterations,
        residual_sup_interior,
        fixed_point_defect,
        min_interior,
        supersolution_scale: c,
    })
}

/// Convenience constructor with a standard discretization.
pub fn solve_reference(domain: ModelDomain, q: f64, m: usize) -> Result<ReferenceSolution> {
    let disc = Discretization::standard(domain, m)?;
    solve_reference_on(&disc, q, None)
}

/// Pointwise margin of the comparison lower bound: min over the grid of
/// v - lambda^{1/(1-q)} w_tilde, together with the offending node.
pub fn comparison_lower_bound(
    v: &GridFn,
    reference: &ReferenceSolution,
    lambda: f64,
) -> Result<(f64, usize)> {
    if v.len() != reference.w_tilde.len() {
        return Err(Error::DimensionMismatch {
            got: v.len(),
            expected: reference.w_tilde.len(),
        });
    }
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::NonPositiveLambda(lambda));
    }
    let scale = lambda.powf(1.0 / (1.0 - reference.q));
    let mut min_diff = f64::INFINITY;
    let mut argmin = 0usize;
    for (t, (&a, &b)) in v.0.iter().zip(reference.w_tilde.0.iter()).enumerate() {
        let d = a - scale * b;
        if d < min_diff {
            min_diff = d;
            argmin = t;
        }
    }
    Ok((min_diff, argmin))
}
