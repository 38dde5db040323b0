//! Lipschitz approximations f_k of a continuous sign-preserving f, built
//! from difference quotients of the antiderivative G:
//!
//! ```text
//!        -k [G(-k - 1/k) - G(-k)]      s <= -k
//!        -k [G(s - 1/k) - G(s)]        -k <= s <= -1/k
//!        k^2 s [G(-2/k) - G(-1/k)]     -1/k <= s <= 0
//!        k^2 s [G(2/k) - G(1/k)]       0 <= s <= 1/k
//!        k  [G(s + 1/k) - G(s)]        1/k <= s <= k
//!        k  [G(k + 1/k) - G(k)]        s >= k
//! ```
//!
//! Each f_k is globally Lipschitz, keeps the sign property s f_k(s) >= 0,
//! converges to f uniformly on bounded sets, and obeys the k-independent
//! growth bounds s f_k(s) <= C 2^{p+1} |s|^{p+1} (|s| >= 1/k) and
//! s f_k(s) <= C 2^p |s|^2 (|s| <= 1/k).

use crate::error::{Error, Result};
use crate::nonlinearity::{Antiderivative, Nonlinearity};
use crate::quadrature;

/// The k-th Lipschitz approximation of a catalog nonlinearity.
#[derive(Debug, Clone)]
pub struct StraussApprox {
    pub k: u32,
    pub source: Nonlinearity,
    g: Antiderivative,
    /// Constant value on the tail s <= -k.
    tail_neg: f64,
    /// Constant value on the tail s >= k.
    tail_pos: f64,
    /// Slope of the linear piece on [-1/k, 0].
    slope_neg: f64,
    /// Slope of the linear piece on [0, 1/k].
    slope_pos: f64,
    /// Grid-based Lipschitz estimate, filled by `estimate_lipschitz`.
    pub lipschitz_estimate: Option<f64>,
}

impl StraussApprox {
    pub fn new(f: &Nonlinearity, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter(
                "approximation index k must be positive".into(),
            ));
        }
        let g = f.antiderivative();
        if let crate::nonlinearity::AntiderivativeMethod::Quadrature { tol } = g.method() {
            // The difference quotients multiply G-error by k.
            if k as f64 * tol > 1e-9 {
                return Err(Error::ApproximationIndexTooLarge { k, tol });
            }
        }
        let kf = k as f64;
        let tail_neg = -kf * g.integral(-kf, -kf - 1.0 / kf)?;
        let tail_pos = kf * g.integral(kf, kf + 1.0 / kf)?;
        let slope_neg = kf * kf * g.integral(-1.0 / kf, -2.0 / kf)?;
        let slope_pos = kf * kf * g.integral(1.0 / kf, 2.0 / kf)?;
        Ok(Self {
            k,
            source: f.clone(),
            g,
            tail_neg,
            tail_pos,
            slope_neg,
            slope_pos,
            lipschitz_estimate: None,
        })
    }

    pub fn antiderivative_of_source(&self) -> &Antiderivative {
        &self.g
    }

    /// Evaluate f_k(s) by the matching piece.
    pub fn eval(&self, s: f64) -> f64 {
        let k = self.k as f64;
        let inv = 1.0 / k;
        if s <= -k {
            self.tail_neg
        } else if s <= -inv {
            // -k [G(s - 1/k) - G(s)]
            -k * self
                .g
                .integral(s, s - inv)
                .expect("antiderivative evaluation within construction-checked budget")
        } else if s <= 0.0 {
            self.slope_neg * s
        } else if s <= inv {
            self.slope_pos * s
        } else if s <= k {
            k * self
                .g
                .integral(s, s + inv)
                .expect("antiderivative evaluation within construction-checked budget")
        } else {
            self.tail_pos
        }
    }

    /// Derivative of f_k where it exists (pieces are differentiable in
    /// their interiors; at the five breakpoints the adjacent piece value
    /// is returned). Used for Newton Jacobians.
    pub fn derivative(&self, s: f64) -> f64 {
        let k = self.k as f64;
        let inv = 1.0 / k;
        if s <= -k {
            0.0
        } else if s < -inv {
            // d/ds { -k [G(s - 1/k) - G(s)] } = k [f(s) - f(s - 1/k)]
            k * (self.source.eval(s) - self.source.eval(s - inv))
        } else if s < 0.0 {
            self.slope_neg
        } else if s <= inv {
            self.slope_pos
        } else if s <= k {
            k * (self.source.eval(s + inv) - self.source.eval(s))
        } else {
            0.0
        }
    }

    /// The five breakpoints of the piecewise definition.
    pub fn breakpoints(&self) -> [f64; 5] {
        let k = self.k as f64;
        [-k, -1.0 / k, 0.0, 1.0 / k, k]
    }

    /// |left - right| piece disagreement at each breakpoint.
    pub fn breakpoint_gaps(&self) -> [f64; 5] {
        let k = self.k as f64;
        let inv = 1.0 / k;
        let left_right: [(f64, f64); 5] = [
            (self.tail_neg, -k * self.g.integral(-k, -k - inv).unwrap()),
            (
                -k * self.g.integral(-inv, -inv - inv).unwrap(),
                self.slope_neg * -inv,
            ),
            (0.0, 0.0),
            (self.slope_pos * inv, k * self.g.integral(inv, 2.0 * inv).unwrap()),
            (k * self.g.integral(k, k + inv).unwrap(), self.tail_pos),
        ];
        left_right.map(|(l, r)| (l - r).abs())
    }

    /// Max relative breakpoint gap, |left - right| / (1 + |value|).
    pub fn max_breakpoint_gap(&self) -> f64 {
        let gaps = self.breakpoint_gaps();
        let k = self.k as f64;
        let values = [
            self.tail_neg,
            self.slope_neg * (-1.0 / k),
            0.0,
            self.slope_pos * (1.0 / k),
            self.tail_pos,
        ];
        gaps.iter()
            .zip(values.iter())
            .map(|(g, v)| g / (1.0 + v.abs()))
            .fold(0.0, f64::max)
    }
}

/// Max difference quotient |df_k / ds| over adjacent grid pairs; a lower
/// estimate of the true Lipschitz constant c_k, stored on the approximation.
pub fn estimate_lipschitz(a: &mut StraussApprox, grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 || grid.iter().any(|s| !s.is_finite()) {
        return Err(Error::DegenerateGrid);
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut best = 0.0f64;
    let mut prev_s = sorted[0];
    let mut prev_v = a.eval(prev_s);
    for &s in &sorted[1..] {
        let ds = s - prev_s;
        if ds == 0.0 {
            return Err(Error::DegenerateGrid);
        }
        let v = a.eval(s);
        best = best.max(((v - prev_v) / ds).abs());
        prev_s = s;
        prev_v = v;
    }
    a.lipschitz_estimate = Some(best);
    Ok(best)
}

/// sup over the grid of |f_k(s) - f(s)|.
pub fn uniform_error(a: &StraussApprox, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&s| (a.eval(s) - a.source.eval(s)).abs())
        .fold(0.0, f64::max)
}

/// Result of sweeping the two growth bounds of the approximation family.
#[derive(Debug, Clone)]
pub struct GrowthBoundsReport {
    /// C 2^{p+1}: constant of the bound on |s| >= 1/k.
    pub power_bound_constant: f64,
    /// C 2^p: constant of the bound on |s| <= 1/k.
    pub quadratic_bound_constant: f64,
    /// Max relative excess of s f_k(s) over the applicable bound.
    pub max_relative_violation: f64,
    pub violation_arg: f64,
    /// Max of (-s f_k(s))_+ over the grid.
    pub max_sign_violation: f64,
}

/// Verify 0 <= s f_k(s) <= C 2^{p+1} |s|^{p+1} for |s| >= 1/k and
/// 0 <= s f_k(s) <= C 2^p |s|^2 for |s| <= 1/k over the grid.
pub fn check_growth_bounds(a: &StraussApprox, grid: &[f64]) -> GrowthBoundsReport {
    let p = a.source.certificate.p;
    let c = a.source.certificate.c;
    let power_bound_constant = c * 2f64.powf(p + 1.0);
    let quadratic_bound_constant = c * 2f64.powf(p);
    let inv = 1.0 / a.k as f64;

    let mut max_rel = 0.0f64;
    let mut arg = grid.first().copied().unwrap_or(0.0);
    let mut max_sign = 0.0f64;
    for &s in grid {
        let sf = s * a.eval(s);
        max_sign = max_sign.max(-sf);
        let bound = if s.abs() >= inv {
            power_bound_constant * s.abs().powf(p + 1.0)
        } else {
            quadratic_bound_constant * s * s
        };
        if bound > 0.0 {
            let rel = (sf - bound) / bound;
            if rel > max_rel {
                max_rel = rel;
                arg = s;
            }
        }
    }
    GrowthBoundsReport {
        power_bound_constant,
        quadratic_bound_constant,
        max_relative_violation: max_rel,
        violation_arg: arg,
        max_sign_violation: max_sign,
    }
}

/// One row of the approximation-family verification sweep.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FamilyRow {
    pub k: u32,
    /// Max relative piece disagreement at the five breakpoints.
    pub breakpoint_gap: f64,
    /// Max of (-s f_k(s))_+ on the wide grid.
    pub sign_violation: f64,
    /// Max relative excess over the k-independent growth bounds.
    pub growth_violation: f64,
    /// sup |f_k - f| on [-2, 2].
    pub sup_error: f64,
}

/// Sweep the family checks over a set of approximation indices: breakpoint
/// continuity, the sign property and growth bounds on a 10^4-point grid of
/// [-2k, 2k] (with extra points inside (-1/k, 1/k)), and the uniform error
/// on [-2, 2].
pub fn family_report(f: &Nonlinearity, ks: &[u32]) -> Result<Vec<FamilyRow>> {
    let sup_grid = crate::nonlinearity::uniform_grid(-2.0, 2.0, 4001);
    ks.iter()
        .map(|&k| {
            let a = StraussApprox::new(f, k)?;
            let kf = k as f64;
            let mut grid = crate::nonlinearity::uniform_grid(-2.0 * kf, 2.0 * kf, 9_000);
            grid.extend(crate::nonlinearity::uniform_grid(-1.0 / kf, 1.0 / kf, 1_000));
            let bounds = check_growth_bounds(&a, &grid);
            Ok(FamilyRow {
                k,
                breakpoint_gap: a.max_breakpoint_gap(),
                sign_violation: bounds.max_sign_violation,
                growth_violation: bounds.max_relative_violation,
                sup_error: uniform_error(&a, &sup_grid),
            })
        })
        .collect()
}

/// Antiderivative F_k(t) of f_k, evaluated by per-piece Gauss-Legendre
/// panels with cumulative values cached at the piece breakpoints (plus any
/// kinks of the source f mapped into the pieces) and a dense subdivision
/// between them. Inside each sub-segment f_k is as smooth as G, so a
/// fixed-order panel from the nearest cached point is exact to machine
/// precision for the catalog entries.
#[derive(Debug, Clone)]
pub struct StraussAntiderivative {
    approx: StraussApprox,
    /// Sorted segment endpoints covering [-k, k].
    breaks: Vec<f64>,
    /// Cumulative integral of f_k from 0 to each entry of `breaks`.
    cumulative: Vec<f64>,
}

/// Target number of cached subdivisions across [-k, k].
const TABLE_DENSITY: usize = 2048;

impl StraussAntiderivative {
    pub fn new(approx: &StraussApprox) -> Self {
        let k = approx.k as f64;
        let inv = 1.0 / k;
        let mut breaks: Vec<f64> = vec![-k, -inv, 0.0, inv, k];
        for kink in approx.source.kinks() {
            for shift in [-inv, 0.0, inv] {
                let b = kink + shift;
                if b.abs() < k {
                    breaks.push(b);
                }
            }
        }
        // Densify so lookups only ever integrate over a short panel.
        let mut extra = Vec::new();
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let delta = (2.0 * k / TABLE_DENSITY as f64).max(1e-6);
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let n = (((b - a) / delta).ceil() as usize).max(1);
            for j in 1..n {
                extra.push(a + (b - a) * j as f64 / n as f64);
            }
        }
        breaks.append(&mut extra);
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let zero_idx = breaks
            .iter()
            .position(|&b| b == 0.0)
            .expect("0 is always a breakpoint");
        let mut cumulative = vec![0.0; breaks.len()];
        for i in zero_idx + 1..breaks.len() {
            let seg = quadrature::panel(&|s| approx.eval(s), breaks[i - 1], breaks[i], 32);
            cumulative[i] = cumulative[i - 1] + seg;
        }
        for i in (0..zero_idx).rev() {
            let seg = quadrature::panel(&|s| approx.eval(s), breaks[i], breaks[i + 1], 32);
            cumulative[i] = cumulative[i + 1] - seg;
        }
        Self {
            approx: approx.clone(),
            breaks,
            cumulative,
        }
    }

    /// F_k(t) = integral of f_k over [0, t].
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.approx.k as f64;
        if t > k {
            // Constant tail: F_k(k) + tail * (t - k).
            return *self.cumulative.last().unwrap() + self.approx.tail_pos * (t - k);
        }
        if t < -k {
            return self.cumulative[0] + self.approx.tail_neg * (t + k);
        }
        // Closest cached breakpoint at or below t; the remaining panel is
        // short and smooth, so a low-order rule is exact.
        let idx = match self
            .breaks
            .binary_search_by(|b| b.partial_cmp(&t).unwrap())
        {
            Ok(i) => return self.cumulative[i],
            Err(i) => i.saturating_sub(1),
        };
        self.cumulative[idx] + quadrature::panel(&|s| self.approx.eval(s), self.breaks[idx], t, 8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::uniform_grid;
    use approx::assert_abs_diff_eq;

    fn pure_power3() -> Nonlinearity {
        Nonlinearity::pure_power(3.0).unwrap()
    }

    #[test]
    fn middle_piece_closed_form_value() {
        // k = 2, s = 1: f_2(1) = 2 [G(1.5) - G(1)] = 2 (1.265625 - 0.25).
        let a = StraussApprox::new(&pure_power3(), 2).unwrap();
        assert_abs_diff_eq!(a.eval(1.0), 2.03125, epsilon = 1e-14);
    }

    #[test]
    fn tail_piece_closed_form_value() {
        // k = 2, s >= 2: f_2 = 2 [G(2.5) - G(2)] = 2 (9.765625 - 4).
        let a = StraussApprox::new(&pure_power3(), 2).unwrap();
        assert_abs_diff_eq!(a.eval(3.0), 11.53125, epsilon = 1e-14);
        assert_abs_diff_eq!(a.eval(100.0), 11.53125, epsilon = 1e-14);
        // Odd symmetry of the construction for odd f.
        assert_abs_diff_eq!(a.eval(-3.0), -11.53125, epsilon = 1e-14);
    }

    #[test]
    fn zero_at_origin_and_zero_source() {
        let a = StraussApprox::new(&pure_power3(), 2).unwrap();
        assert_eq!(a.eval(0.0), 0.0);
        let z = StraussApprox::new(&Nonlinearity::zero(), 5).unwrap();
        for s in [-10.0, -0.1, 0.0, 0.3, 4.0, 50.0] {
            assert_eq!(z.eval(s), 0.0);
        }
    }

    #[test]
    fn breakpoints_are_continuous_for_catalog() {
        for f in [
            pure_power3(),
            Nonlinearity::zero(),
            Nonlinearity::truncated_power(3.0, 1.0).unwrap(),
            Nonlinearity::oscillatory(3.0).unwrap(),
        ] {
            for k in [1u32, 2, 4, 8, 16, 32, 64, 128, 256] {
                let a = StraussApprox::new(&f, k).unwrap();
                assert!(
                    a.max_breakpoint_gap() <= 1e-12,
                    "gap too large for {:?} at k = {k}: {}",
                    f.kind,
                    a.max_breakpoint_gap()
                );
            }
        }
    }

    #[test]
    fn sign_property_on_wide_grid() {
        for f in [
            pure_power3(),
            Nonlinearity::truncated_power(3.0, 1.0).unwrap(),
            Nonlinearity::oscillatory(3.0).unwrap(),
        ] {
            for k in [1u32, 4, 32, 256] {
                let a = StraussApprox::new(&f, k).unwrap();
                let kf = k as f64;
                let grid = uniform_grid(-2.0 * kf, 2.0 * kf, 10_000);
                for &s in &grid {
                    assert!(s * a.eval(s) >= -1e-14, "sign violated at s = {s}, k = {k}");
                }
            }
        }
    }

    #[test]
    fn growth_bounds_with_lemma_constants() {
        // C1 = C 2^{p+1} = 16 and C2 = C 2^p = 8 for p = 3, C = 1.
        for f in [
            pure_power3(),
            Nonlinearity::zero(),
            Nonlinearity::truncated_power(3.0, 1.0).unwrap(),
            Nonlinearity::oscillatory(3.0).unwrap(),
        ] {
            for k in [1u32, 2, 4, 8, 16, 32, 64, 128, 256] {
                let a = StraussApprox::new(&f, k).unwrap();
                let kf = k as f64;
                let mut grid = uniform_grid(-2.0 * kf, 2.0 * kf, 9_000);
                grid.extend(uniform_grid(-1.0 / kf, 1.0 / kf, 1_000));
                let report = check_growth_bounds(&a, &grid);
                assert_eq!(report.power_bound_constant, 16.0);
                assert_eq!(report.quadratic_bound_constant, 8.0);
                assert!(
                    report.max_relative_violation <= 1e-12,
                    "{:?} k = {k}: violation {} at {}",
                    f.kind,
                    report.max_relative_violation,
                    report.violation_arg
                );
                assert!(report.max_sign_violation <= 1e-14);
            }
        }
    }

    #[test]
    fn specific_growth_check_from_middle_piece() {
        // s f_2(s) at s = 1 is 2.03125 <= 16 = C1 |1|^4.
        let a = StraussApprox::new(&pure_power3(), 2).unwrap();
        assert!(1.0 * a.eval(1.0) <= 16.0);
    }

    #[test]
    fn lipschitz_estimate_examples() {
        let mut z = StraussApprox::new(&Nonlinearity::zero(), 3).unwrap();
        let grid = uniform_grid(-5.0, 5.0, 2000);
        assert_eq!(estimate_lipschitz(&mut z, &grid).unwrap(), 0.0);

        // k = 1: slope of the linear piece on [0, 1] is G(2) - G(1) = 3.75.
        let mut a = StraussApprox::new(&pure_power3(), 1).unwrap();
        let grid = uniform_grid(-3.0, 3.0, 4000);
        let c1 = estimate_lipschitz(&mut a, &grid).unwrap();
        assert!(c1 >= 3.75 - 1e-9, "c_1 = {c1}");
        assert_eq!(a.lipschitz_estimate, Some(c1));
    }

    #[test]
    fn lipschitz_estimates_grow_with_k_for_superlinear_f() {
        let mut prev = 0.0;
        for k in [1u32, 2, 4, 8] {
            let mut a = StraussApprox::new(&pure_power3(), k).unwrap();
            let kf = k as f64;
            let grid = uniform_grid(-kf - 2.0, kf + 2.0, 20_000);
            let ck = estimate_lipschitz(&mut a, &grid).unwrap();
            assert!(ck > prev, "c_k not increasing at k = {k}: {ck} <= {prev}");
            prev = ck;
        }
    }

    #[test]
    fn lipschitz_estimate_rejects_degenerate_grids() {
        let mut a = StraussApprox::new(&pure_power3(), 2).unwrap();
        assert!(estimate_lipschitz(&mut a, &[1.0]).is_err());
        assert!(estimate_lipschitz(&mut a, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn random_pair_difference_quotients_bounded_by_fine_grid_estimate() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for k in [1u32, 2, 4, 8] {
            let mut a = StraussApprox::new(&pure_power3(), k).unwrap();
            let kf = k as f64;
            let fine = uniform_grid(-kf - 2.0, kf + 2.0, 100_000);
            let ck = estimate_lipschitz(&mut a, &fine).unwrap();
            for _ in 0..10_000 {
                let x = rng.gen_range(-kf - 2.0..kf + 2.0);
                let y = rng.gen_range(-kf - 2.0..kf + 2.0);
                if (x - y).abs() < 1e-12 {
                    continue;
                }
                let dq = ((a.eval(x) - a.eval(y)) / (x - y)).abs();
                assert!(dq <= 1.01 * ck, "quotient {dq} exceeds 1.01 * {ck}");
            }
        }
    }

    #[test]
    fn uniform_error_pointwise_example() {
        // |f_k(1) - f(1)| at k = 2 is 1.03125 and decreases towards 0.
        let grid = [1.0];
        let mut prev = f64::INFINITY;
        for k in [2u32, 8, 32, 128] {
            let a = StraussApprox::new(&pure_power3(), k).unwrap();
            let err = uniform_error(&a, &grid);
            if k == 2 {
                assert_abs_diff_eq!(err, 1.03125, epsilon = 1e-13);
            }
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 0.02, "error at k = 128 should be ~ f'(1)/(2k)");
    }

    #[test]
    fn uniform_convergence_on_bounded_sets() {
        // sup |f_k - f| on [-M, M] drops below 1e-2 for all k >= some k0
        // and the last value of the dyadic sequence is the smallest.
        for f in [pure_power3(), Nonlinearity::truncated_power(3.0, 0.5).unwrap()] {
            for m_bound in [1.0f64, 2.0, 10.0] {
                let grid = uniform_grid(-m_bound, m_bound, 4001);
                let errs: Vec<f64> = (1..=14)
                    .map(|j| {
                        let a = StraussApprox::new(&f, 1u32 << j).unwrap();
                        uniform_error(&a, &grid)
                    })
                    .collect();
                let last = *errs.last().unwrap();
                assert!(
                    errs.iter().all(|&e| e >= last),
                    "last value not minimal for M = {m_bound}"
                );
                assert!(last <= 1e-2, "M = {m_bound}: final error {last}");
                // Tail of the sequence sits below 1e-2 from some j0 onward.
                let j0 = errs.iter().position(|&e| e <= 1e-2).unwrap();
                assert!(errs[j0..].iter().all(|&e| e <= 1e-2));
            }
        }
        // Oscillatory G is quadrature-backed, so k is capped by the k*tol
        // guard; use the window where construction is legal.
        let f = Nonlinearity::oscillatory(3.0).unwrap();
        for m_bound in [1.0f64, 2.0] {
            let grid = uniform_grid(-m_bound, m_bound, 2001);
            let errs: Vec<f64> = (1..=9)
                .map(|j| {
                    let a = StraussApprox::new(&f, 1u32 << j).unwrap();
                    uniform_error(&a, &grid)
                })
                .collect();
            let last = *errs.last().unwrap();
            assert!(last <= 1e-2 && errs.iter().all(|&e| e >= last));
        }
    }

    #[test]
    fn quadrature_backed_construction_enforces_index_budget() {
        let f = Nonlinearity::oscillatory(3.0).unwrap();
        assert!(StraussApprox::new(&f, 1000).is_ok());
        assert!(matches!(
            StraussApprox::new(&f, 1001),
            Err(Error::ApproximationIndexTooLarge { .. })
        ));
    }

    #[test]
    fn antiderivative_table_matches_direct_quadrature() {
        for f in [pure_power3(), Nonlinearity::truncated_power(3.0, 0.8).unwrap()] {
            let a = StraussApprox::new(&f, 4).unwrap();
            let table = StraussAntiderivative::new(&a);
            for t in [-6.0, -3.9, -1.0, -0.2, 0.0, 0.13, 1.0, 2.5, 4.0, 7.5] {
                let direct = quadrature::integrate_adaptive(&|s| a.eval(s), 0.0, t, 1e-13).unwrap();
                assert_abs_diff_eq!(table.eval(t), direct, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences_inside_pieces() {
        let a = StraussApprox::new(&pure_power3(), 4).unwrap();
        let h = 1e-7;
        for s in [-3.0, -1.0, -0.1, 0.1, 0.7, 2.0, 3.9, 5.0] {
            let fd = (a.eval(s + h) - a.eval(s - h)) / (2.0 * h);
            assert_abs_diff_eq!(a.derivative(s), fd, epsilon = 1e-5);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sign_and_bounds_hold_for_random_k_and_s(
                k in 1u32..200,
                t in -1.0f64..1.0,
            ) {
                let f = Nonlinearity::pure_power(3.0).unwrap();
                let a = StraussApprox::new(&f, k).unwrap();
                let s = 2.0 * k as f64 * t;
                let sf = s * a.eval(s);
                prop_assert!(sf >= -1e-14);
                let bound = if s.abs() >= 1.0 / k as f64 {
                    16.0 * s.abs().powi(4)
                } else {
                    8.0 * s * s
                };
                prop_assert!(sf <= bound * (1.0 + 1e-12) + 1e-300);
            }
        }
    }
}
