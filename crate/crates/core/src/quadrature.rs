//! One-dimensional Gauss-Legendre rules: node generation, composite axes,
//! and an adaptive integrator for antiderivatives without closed form.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Computed by Newton iteration on the Legendre recurrence and cached
/// per order; accurate to machine precision for the orders used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule order must be positive");
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&n) {
        return rule.clone();
    }
    let rule = compute_gauss_legendre(n);
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess for the i-th positive root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        // One final refinement so the weight formula sees the converged root.
        let (p, d) = legendre_with_derivative(n, x);
        x -= p / d;
        let dp = legendre_with_derivative(n, x).1;
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_with_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial P_n via the three-term
/// recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrate `f` over [a, b] with a single n-point Gauss-Legendre panel.
pub fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for (x, w) in nodes.iter().zip(weights.iter()) {
        sum += w * f(mid + half * x);
    }
    sum * half
}

/// Adaptive Gauss-Legendre integration of `f` over [a, b] to absolute
/// tolerance `tol`. Error is estimated by comparing one panel against its
/// bisection; intervals are split until the local estimates pass.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let budget = 100_000usize;
    let mut used = 0usize;
    let whole = panel(f, a, b, 15);
    let value = adapt(f, a, b, tol, whole, &mut used, budget, 0)?;
    Ok(value)
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    whole: f64,
    used: &mut usize,
    budget: usize,
    depth: usize,
) -> Result<f64> {
    *used += 1;
    if *used > budget || depth > 60 {
        return Err(Error::QuadratureBudget { a, b, tol });
    }
    let mid = 0.5 * (a + b);
    let left = panel(f, a, mid, 15);
    let right = panel(f, mid, b, 15);
    let refined = left + right;
    if (refined - whole).abs() <= tol.max(1e-18) {
        return Ok(refined);
    }
    let lv = adapt(f, a, mid, 0.5 * tol, left, used, budget, depth + 1)?;
    let rv = adapt(f, mid, b, 0.5 * tol, right, used, budget, depth + 1)?;
    Ok(lv + rv)
}

/// Neumaier-compensated accumulator for long weighted sums.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// A composite Gauss-Legendre rule along one coordinate axis of (0, L).
///
/// The axis is split into `cells` uniform cells; the first and last cell are
/// further refined geometrically towards the boundary so that integrands
/// with endpoint singularities of |x|^q type (q > 0) are resolved to
/// near machine precision.
#[derive(Debug, Clone)]
pub struct QuadratureAxis {
    pub length: f64,
    pub cells: usize,
    pub points_per_cell: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Default number of geometric refinement levels applied to each boundary
/// cell. 22 levels push the quadrature error of x^q-type boundary
/// singularities (q >= 1/2) below 1e-15 relative.
pub const BOUNDARY_LEVELS: usize = 22;

impl QuadratureAxis {
    pub fn new(length: f64, cells: usize, points_per_cell: usize) -> Self {
        Self::with_grading(length, cells, points_per_cell, BOUNDARY_LEVELS)
    }

    pub fn with_grading(
        length: f64,
        cells: usize,
        points_per_cell: usize,
        boundary_levels: usize,
    ) -> Self {
        assert!(length > 0.0 && cells >= 1 && points_per_cell >= 1);
        let (gl_nodes, gl_weights) = gauss_legendre(points_per_cell);
        let h = length / cells as f64;

        // Cell boundaries: uniform partition with the first/last cell split
        // geometrically (ratio 1/2) towards the endpoint.
        let mut edges: Vec<f64> = Vec::new();
        edges.push(0.0);
        let mut graded: Vec<f64> = (1..=boundary_levels)
            .map(|j| h * 0.5f64.powi((boundary_levels - j) as i32))
            .collect();
        edges.append(&mut graded);
        for c in 2..cells {
            edges.push(h * c as f64);
        }
        if cells >= 2 {
            for j in (1..=boundary_levels).rev() {
                edges.push(length - h * 0.5f64.powi((boundary_levels - j) as i32));
            }
        }
        edges.push(length);
        edges.dedup_by(|a, b| (*a - *b).abs() < 1e-300);

        let mut nodes = Vec::with_capacity((edges.len() - 1) * points_per_cell);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            for (x, gw) in gl_nodes.iter().zip(gl_weights.iter()) {
                nodes.push(mid + half * x);
                weights.push(gw * half);
            }
        }
        Self {
            length,
            cells,
            points_per_cell,
            nodes,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate a function given by its values at the axis nodes
    /// (compensated summation, fixed order).
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.len());
        let mut sum = KahanSum::default();
        for (v, w) in values.iter().zip(self.weights.iter()) {
            sum.add(v * w);
        }
        sum.value()
    }
}
