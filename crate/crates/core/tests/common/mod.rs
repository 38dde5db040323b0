//! Shared test oracles, independent of the library's solver path:
//! a second-order finite-difference damped-Newton solver for
//! -v'' = g(v) on (0, L) with homogeneous Dirichlet conditions, and a
//! closed-form evaluator for the Lipschitz approximations of the cubic
//! power nonlinearity.

/// Solve -v'' = g(v), v(0) = v(L) = 0 on a uniform grid with `nodes`
/// points (endpoints included) by damped Newton with a tridiagonal solve.
/// Returns all node values including the zero endpoints.
pub fn fd_solve_1d<G, DG, I>(length: f64, nodes: usize, g: G, dg: DG, init: I) -> Vec<f64>
where
    G: Fn(f64) -> f64,
    DG: Fn(f64) -> f64,
    I: Fn(f64) -> f64,
{
    assert!(nodes >= 3);
    let n = nodes - 2;
    let h = length / (nodes - 1) as f64;
    let x = |i: usize| (i + 1) as f64 * h;
    let mut v: Vec<f64> = (0..n).map(|i| init(x(i))).collect();

    let residual = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let left = if i > 0 { v[i - 1] } else { 0.0 };
                let right = if i + 1 < n { v[i + 1] } else { 0.0 };
                (2.0 * v[i] - left - right) / (h * h) - g(v[i])
            })
            .collect()
    };
    let sup = |r: &[f64]| r.iter().map(|t| t.abs()).fold(0.0f64, f64::max);

    let mut r = residual(&v);
    let mut rnorm = sup(&r);
    for _ in 0..200 {
        if rnorm <= 1e-12 {
            break;
        }
        // Tridiagonal Jacobian: diag 2/h^2 - dg(v_i), off-diagonals -1/h^2.
        let diag: Vec<f64> = (0..n).map(|i| 2.0 / (h * h) - dg(v[i])).collect();
        let off = -1.0 / (h * h);
        // Thomas algorithm for J d = -r.
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        c_prime[0] = off / diag[0];
        d_prime[0] = -r[0] / diag[0];
        for i in 1..n {
            let m = diag[i] - off * c_prime[i - 1];
            c_prime[i] = off / m;
            d_prime[i] = (-r[i] - off * d_prime[i - 1]) / m;
        }
        let mut d = vec![0.0; n];
        d[n - 1] = d_prime[n - 1];
        for i in (0..n - 1).rev() {
            d[i] = d_prime[i] - c_prime[i] * d[i + 1];
        }
        // Backtracking on the sup residual.
        let mut t = 1.0;
        let mut accepted = false;
        while t >= 1e-12 {
            let cand: Vec<f64> = v.iter().zip(d.iter()).map(|(a, b)| a + t * b).collect();
            let rc = residual(&cand);
            let rcn = sup(&rc);
            if rcn < rnorm {
                v = cand;
                r = rc;
                rnorm = rcn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    assert!(
        rnorm <= 1e-10,
        "finite-difference oracle did not converge: residual {rnorm:.3e}"
    );

    let mut full = Vec::with_capacity(nodes);
    full.push(0.0);
    full.extend(v);
    full.push(0.0);
    full
}

/// Closed-form k-th Lipschitz approximation of f(s) = s^3 for s >= 0,
/// written out from G(s) = s^4/4 independently of the library.
pub fn cubic_fk(s: f64, k: f64) -> f64 {
    let gq = |a: f64, b: f64| (b * b * b * b - a * a * a * a) / 4.0;
    let inv = 1.0 / k;
    if s <= 0.0 {
        -cubic_fk(-s, k)
    } else if s <= inv {
        k * k * s * gq(inv, 2.0 * inv)
    } else if s <= k {
        k * gq(s, s + inv)
    } else {
        k * gq(k, k + inv)
    }
}

/// Derivative of `cubic_fk` where smooth (s >= 0 branch).
pub fn cubic_fk_derivative(s: f64, k: f64) -> f64 {
    let inv = 1.0 / k;
    if s < 0.0 {
        cubic_fk_derivative(-s, k)
    } else if s <= inv {
        let gq = ((2.0 * inv).powi(4) - inv.powi(4)) / 4.0;
        k * k * gq
    } else if s <= k {
        k * ((s + inv).powi(3) - s.powi(3))
    } else {
        0.0
    }
}

/// Evaluate a spectral interval expansion at the uniform FD grid nodes.
pub fn eval_on_fd_grid(
    basis: &subgal::domain::Basis,
    xi: &[f64],
    length: f64,
    nodes: usize,
) -> Vec<f64> {
    let points: Vec<Vec<f64>> = (0..nodes)
        .map(|i| vec![length * i as f64 / (nodes - 1) as f64])
        .collect();
    basis.eval_expansion(xi, &points).unwrap()
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
