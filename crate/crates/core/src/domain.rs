//! Model domains with explicit Dirichlet-Laplacian eigenbases.
//!
//! Supported domains are the interval (0, L) and the rectangle
//! (0, L1) x (0, L2), where the eigenfunctions are sine products. Basis
//! functions are scaled to unit H^1_0 norm, which turns the stiffness Gram
//! matrix into the identity and makes the H^1_0 norm of an expansion equal
//! to the Euclidean norm of its coefficient vector.

use crate::error::{Error, Result};
use crate::quadrature::{KahanSum, QuadratureAxis};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Hard cap on basis dimension.
pub const MAX_BASIS_DIM: usize = 4096;

/// Fraction of the shortest side treated as the boundary band when
/// selecting "interior" nodes for strong-residual checks.
pub const INTERIOR_BAND_FRACTION: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelDomain {
    Interval {
        #[serde(rename = "L")]
        length: f64,
    },
    Rectangle {
        #[serde(rename = "L1")]
        l1: f64,
        #[serde(rename = "L2")]
        l2: f64,
    },
}

impl ModelDomain {
    pub fn interval(length: f64) -> Self {
        assert!(length > 0.0);
        Self::Interval { length }
    }

    pub fn rectangle(l1: f64, l2: f64) -> Self {
        assert!(l1 > 0.0 && l2 > 0.0);
        Self::Rectangle { l1, l2 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelDomain::Interval { length } if length > 0.0 && length.is_finite() => Ok(()),
            ModelDomain::Rectangle { l1, l2 }
                if l1 > 0.0 && l2 > 0.0 && l1.is_finite() && l2.is_finite() =>
            {
                Ok(())
            }
            _ => Err(Error::Config("domain sides must be positive".into())),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelDomain::Interval { .. } => 1,
            ModelDomain::Rectangle { .. } => 2,
        }
    }

    /// |Omega|: length or area.
    pub fn measure(&self) -> f64 {
        match *self {
            ModelDomain::Interval { length } => length,
            ModelDomain::Rectangle { l1, l2 } => l1 * l2,
        }
    }

    /// Principal Dirichlet eigenvalue.
    pub fn lambda1(&self) -> f64 {
        let pi = std::f64::consts::PI;
        match *self {
            ModelDomain::Interval { length } => (pi / length).powi(2),
            ModelDomain::Rectangle { l1, l2 } => pi * pi * (1.0 / (l1 * l1) + 1.0 / (l2 * l2)),
        }
    }

    pub fn side(&self, axis: usize) -> f64 {
        match *self {
            ModelDomain::Interval { length } => {
                assert_eq!(axis, 0);
                length
            }
            ModelDomain::Rectangle { l1, l2 } => match axis {
                0 => l1,
                1 => l2,
                _ => unreachable!(),
            },
        }
    }

    pub fn min_side(&self) -> f64 {
        match *self {
            ModelDomain::Interval { length } => length,
            ModelDomain::Rectangle { l1, l2 } => l1.min(l2),
        }
    }
}

/// One eigenmode: per-axis sine indices and the eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// Sine indices; `indices[1]` is 0 on intervals.
    pub indices: [usize; 2],
    pub eigenvalue: f64,
}

/// The first m Dirichlet eigenfunctions ordered by eigenvalue (ties broken
/// by lexicographic mode index), each scaled to unit H^1_0 norm.
#[derive(Debug, Clone)]
pub struct Basis {
    pub domain: ModelDomain,
    pub modes: Vec<Mode>,
    /// Largest sine index per axis.
    pub max_index: [usize; 2],
}

impl Basis {
    pub fn build(domain: ModelDomain, m: usize) -> Result<Self> {
        domain.validate()?;
        if m == 0 {
            return Err(Error::EmptyBasis);
        }
        if m > MAX_BASIS_DIM {
            return Err(Error::BasisTooLarge {
                requested: m,
                max: MAX_BASIS_DIM,
            });
        }
        let pi = std::f64::consts::PI;
        let modes = match domain {
            ModelDomain::Interval { length } => (1..=m)
                .map(|j| Mode {
                    indices: [j, 0],
                    eigenvalue: (j as f64 * pi / length).powi(2),
                })
                .collect::<Vec<_>>(),
            ModelDomain::Rectangle { l1, l2 } => {
                // Grow the candidate box until every excluded index pair has a
                // larger eigenvalue than the m-th smallest inside the box.
                let mu = |i: usize, j: usize| {
                    pi * pi * ((i * i) as f64 / (l1 * l1) + (j * j) as f64 / (l2 * l2))
                };
                let mut k = (2.0 * (m as f64).sqrt()).ceil() as usize + 2;
                loop {
                    let mut candidates: Vec<Mode> = Vec::with_capacity(k * k);
                    for i in 1..=k {
                        for j in 1..=k {
                            candidates.push(Mode {
                                indices: [i, j],
                                eigenvalue: mu(i, j),
                            });
                        }
                    }
                    candidates.sort_by(|a, b| {
                        a.eigenvalue
                            .partial_cmp(&b.eigenvalue)
                            .unwrap()
                            .then(a.indices.cmp(&b.indices))
                    });
                    let mth = candidates[m - 1].eigenvalue;
                    let outside_min = mu(k + 1, 1).min(mu(1, k + 1));
                    if outside_min > mth {
                        candidates.truncate(m);
                        break candidates;
                    }
                    k *= 2;
                }
            }
        };
        let mut max_index = [0usize; 2];
        for mode in &modes {
            max_index[0] = max_index[0].max(mode.indices[0]);
            max_index[1] = max_index[1].max(mode.indices[1]);
        }
        Ok(Self {
            domain,
            modes,
            max_index,
        })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.eigenvalue).collect()
    }

    /// L^2 normalization factor of the raw sine product.
    fn l2_norm_factor(&self) -> f64 {
        match self.domain {
            ModelDomain::Interval { length } => (2.0 / length).sqrt(),
            ModelDomain::Rectangle { l1, l2 } => 2.0 / (l1 * l2).sqrt(),
        }
    }

    /// Scaling of mode `a` so that its H^1_0 norm is 1.
    pub fn mode_scale(&self, a: usize) -> f64 {
        self.l2_norm_factor() / self.modes[a].eigenvalue.sqrt()
    }

    /// Evaluate basis function `a` at a point.
    pub fn eval_mode(&self, a: usize, point: &[f64]) -> f64 {
        let pi = std::f64::consts::PI;
        let mode = &self.modes[a];
        let mut v = self.mode_scale(a);
        for (axis, &x) in point.iter().enumerate() {
            let idx = mode.indices[axis];
            if idx > 0 {
                v *= (idx as f64 * pi * x / self.domain.side(axis)).sin();
            }
        }
        v
    }

    /// Evaluate an expansion at arbitrary points.
    pub fn eval_expansion(&self, xi: &[f64], points: &[Vec<f64>]) -> Result<Vec<f64>> {
        if xi.len() != self.len() {
            return Err(Error::DimensionMismatch {
                got: xi.len(),
                expected: self.len(),
            });
        }
        Ok(points
            .iter()
            .map(|p| {
                (0..self.len())
                    .map(|a| xi[a] * self.eval_mode(a, p))
                    .sum::<f64>()
            })
            .collect())
    }
}

/// Tensor-product composite Gauss-Legendre rule over the domain.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub axes: Vec<QuadratureAxis>,
}

impl Quadrature {
    /// Default rule for a basis: cell count scales with the largest mode
    /// index per axis (8x with 10-point cells on intervals, 4x with 6-point
    /// cells on rectangles).
    pub fn for_basis(basis: &Basis) -> Self {
        Self::for_basis_refined(basis, 1)
    }

    /// Same layout with `factor`-times more cells, for refinement checks.
    ///
    /// Cell counts have a floor (1024 cells on intervals, 16 per axis on
    /// rectangles) so that integrands with interior kinks, such as
    /// |v|^{q+1} for sign-changing v, are integrated to high relative
    /// accuracy even at small basis dimensions. Rectangles use a shallower
    /// boundary grading: their tolerances are orders looser than the 1D
    /// ones and the extra cells enter squared.
    pub fn for_basis_refined(basis: &Basis, factor: usize) -> Self {
        match basis.domain {
            ModelDomain::Interval { length } => Quadrature {
                axes: vec![QuadratureAxis::new(
                    length,
                    (8 * basis.max_index[0]).max(1024) * factor,
                    10,
                )],
            },
            ModelDomain::Rectangle { l1, l2 } => Quadrature {
                axes: vec![
                    QuadratureAxis::with_grading(
                        l1,
                        (4 * basis.max_index[0]).max(16) * factor,
                        6,
                        12,
                    ),
                    QuadratureAxis::with_grading(
                        l2,
                        (4 * basis.max_index[1]).max(16) * factor,
                        6,
                        12,
                    ),
                ],
            },
        }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of node `t` (flattened x-major).
    pub fn node(&self, t: usize) -> Vec<f64> {
        match self.axes.len() {
            1 => vec![self.axes[0].nodes[t]],
            2 => {
                let ny = self.axes[1].len();
                vec![self.axes[0].nodes[t / ny], self.axes[1].nodes[t % ny]]
            }
            _ => unreachable!(),
        }
    }

    /// Distance from node `t` to the boundary.
    pub fn node_boundary_distance(&self, t: usize) -> f64 {
        let p = self.node(t);
        p.iter()
            .enumerate()
            .map(|(axis, &x)| x.min(self.axes[axis].length - x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Integrate values given on the flattened grid (compensated summation,
    /// fixed order).
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.integrate_where(values, |_| true)
    }

    /// Integrate only over nodes where `mask` holds.
    pub fn integrate_where<F: Fn(usize) -> bool>(&self, values: &[f64], mask: F) -> f64 {
        assert_eq!(values.len(), self.len());
        match self.axes.len() {
            1 => {
                let mut total = KahanSum::default();
                for (t, w) in self.axes[0].weights.iter().enumerate() {
                    if mask(t) {
                        total.add(w * values[t]);
                    }
                }
                total.value()
            }
            2 => {
                let ny = self.axes[1].len();
                let mut total = KahanSum::default();
                for (ix, wx) in self.axes[0].weights.iter().enumerate() {
                    let mut row = KahanSum::default();
                    for (iy, wy) in self.axes[1].weights.iter().enumerate() {
                        let t = ix * ny + iy;
                        if mask(t) {
                            row.add(wy * values[t]);
                        }
                    }
                    total.add(wx * row.value());
                }
                total.value()
            }
            _ => unreachable!(),
        }
    }
}

/// A function sampled on the quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn(pub Vec<f64>);

impl GridFn {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> GridFn {
        GridFn(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn positive_part(&self) -> GridFn {
        self.map(|v| v.max(0.0))
    }
}

/// A basis paired with a quadrature rule and precomputed per-axis sine and
/// cosine tables. All integrals of the Galerkin map are evaluated through
/// this object.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub basis: Basis,
    pub quad: Quadrature,
    /// sin tables per axis: entry [idx-1][node].
    sin: Vec<Vec<Vec<f64>>>,
    /// cos tables per axis, same layout.
    cos: Vec<Vec<Vec<f64>>>,
    /// The sin tables as (max_index x nodes) matrices, for tensor products.
    sin_mat: Vec<DMatrix<f64>>,
}

impl Discretization {
    pub fn new(basis: Basis, quad: Quadrature) -> Self {
        let pi = std::f64::consts::PI;
        let mut sin = Vec::new();
        let mut cos = Vec::new();
        for (axis, qaxis) in quad.axes.iter().enumerate() {
            let max_idx = basis.max_index[axis].max(1);
            let length = qaxis.length;
            let mut sin_axis = Vec::with_capacity(max_idx);
            let mut cos_axis = Vec::with_capacity(max_idx);
            for idx in 1..=max_idx {
                let freq = idx as f64 * pi / length;
                sin_axis.push(qaxis.nodes.iter().map(|&x| (freq * x).sin()).collect());
                cos_axis.push(qaxis.nodes.iter().map(|&x| (freq * x).cos()).collect());
            }
            sin.push(sin_axis);
            cos.push(cos_axis);
        }
        let sin_mat = sin
            .iter()
            .map(|axis_table: &Vec<Vec<f64>>| {
                let rows = axis_table.len();
                let cols = axis_table.first().map_or(0, |r| r.len());
                DMatrix::from_fn(rows, cols, |i, t| axis_table[i][t])
            })
            .collect();
        Self {
            basis,
            quad,
            sin,
            cos,
            sin_mat,
        }
    }

    /// Basis with the default quadrature layout.
    pub fn standard(domain: ModelDomain, m: usize) -> Result<Self> {
        let basis = Basis::build(domain, m)?;
        let quad = Quadrature::for_basis(&basis);
        Ok(Self::new(basis, quad))
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn check_len(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                got: xi.len(),
                expected: self.dim(),
            });
        }
        Ok(())
    }

    /// v = sum_a xi_a w_a on the quadrature grid. By H^1_0 orthonormality
    /// the expansion satisfies ||v||_{H^1_0} = |xi|.
    pub fn expand(&self, xi: &[f64]) -> Result<GridFn> {
        self.check_len(xi)?;
        match self.quad.axes.len() {
            1 => {
                let n = self.quad.axes[0].len();
                let mut values = vec![0.0; n];
                for (a, mode) in self.basis.modes.iter().enumerate() {
                    let coeff = xi[a] * self.basis.mode_scale(a);
                    if coeff == 0.0 {
                        continue;
                    }
                    let row = &self.sin[0][mode.indices[0] - 1];
                    for (v, s) in values.iter_mut().zip(row.iter()) {
                        *v += coeff * s;
                    }
                }
                Ok(GridFn(values))
            }
            2 => {
                // V = Sx^T A Sy with A the (scaled) coefficient matrix.
                let (imax, jmax) = (self.basis.max_index[0], self.basis.max_index[1]);
                let mut coeff = DMatrix::<f64>::zeros(imax, jmax);
                for (a, mode) in self.basis.modes.iter().enumerate() {
                    coeff[(mode.indices[0] - 1, mode.indices[1] - 1)] =
                        xi[a] * self.basis.mode_scale(a);
                }
                let v = self.sin_mat[0].transpose() * coeff * &self.sin_mat[1];
                Ok(GridFn(v.transpose().as_slice().to_vec()))
            }
            _ => unreachable!(),
        }
    }

    /// Gradient components of the expansion on the grid.
    pub fn expand_grad(&self, xi: &[f64]) -> Result<Vec<GridFn>> {
        self.check_len(xi)?;
        let pi = std::f64::consts::PI;
        match self.quad.axes.len() {
            1 => {
                let n = self.quad.axes[0].len();
                let length = self.quad.axes[0].length;
                let mut values = vec![0.0; n];
                for (a, mode) in self.basis.modes.iter().enumerate() {
                    let freq = mode.indices[0] as f64 * pi / length;
                    let coeff = xi[a] * self.basis.mode_scale(a) * freq;
                    if coeff == 0.0 {
                        continue;
                    }
                    let row = &self.cos[0][mode.indices[0] - 1];
                    for (v, c) in values.iter_mut().zip(row.iter()) {
                        *v += coeff * c;
                    }
                }
                Ok(vec![GridFn(values)])
            }
            2 => {
                let nx = self.quad.axes[0].len();
                let ny = self.quad.axes[1].len();
                let (lx, ly) = (self.quad.axes[0].length, self.quad.axes[1].length);
                let mut dx = vec![0.0; nx * ny];
                let mut dy = vec![0.0; nx * ny];
                for (a, mode) in self.basis.modes.iter().enumerate() {
                    let scale = xi[a] * self.basis.mode_scale(a);
                    if scale == 0.0 {
                        continue;
                    }
                    let (i, j) = (mode.indices[0], mode.indices[1]);
                    let fx = i as f64 * pi / lx;
                    let fy = j as f64 * pi / ly;
                    let sin_x = &self.sin[0][i - 1];
                    let cos_x = &self.cos[0][i - 1];
                    let sin_y = &self.sin[1][j - 1];
                    let cos_y = &self.cos[1][j - 1];
                    for ix in 0..nx {
                        let base = ix * ny;
                        let cxs = scale * fx * cos_x[ix];
                        let sxs = scale * fy * sin_x[ix];
                        for iy in 0..ny {
                            dx[base + iy] += cxs * sin_y[iy];
                            dy[base + iy] += sxs * cos_y[iy];
                        }
                    }
                }
                Ok(vec![GridFn(dx), GridFn(dy)])
            }
            _ => unreachable!(),
        }
    }

    /// Projections p_a = integral of g * w_a for all basis functions.
    pub fn project(&self, g: &GridFn) -> Vec<f64> {
        assert_eq!(g.len(), self.quad.len());
        match self.quad.axes.len() {
            1 => {
                let weights = &self.quad.axes[0].weights;
                let gw: Vec<f64> = g.0.iter().zip(weights.iter()).map(|(v, w)| v * w).collect();
                self.basis
                    .modes
                    .iter()
                    .enumerate()
                    .map(|(a, mode)| {
                        let row = &self.sin[0][mode.indices[0] - 1];
                        let dot: f64 = gw.iter().zip(row.iter()).map(|(x, s)| x * s).sum();
                        dot * self.basis.mode_scale(a)
                    })
                    .collect()
            }
            2 => {
                let nx = self.quad.axes[0].len();
                let ny = self.quad.axes[1].len();
                let wx = &self.quad.axes[0].weights;
                let wy = &self.quad.axes[1].weights;
                let mut gw = DMatrix::<f64>::zeros(nx, ny);
                for ix in 0..nx {
                    for iy in 0..ny {
                        gw[(ix, iy)] = g.0[ix * ny + iy] * wx[ix] * wy[iy];
                    }
                }
                let p = &self.sin_mat[0] * gw * self.sin_mat[1].transpose();
                self.basis
                    .modes
                    .iter()
                    .enumerate()
                    .map(|(a, mode)| {
                        p[(mode.indices[0] - 1, mode.indices[1] - 1)] * self.basis.mode_scale(a)
                    })
                    .collect()
            }
            _ => unreachable!(),
        }
    }

    /// Weighted Gram matrix A[a][b] = integral of c * w_a * w_b.
    pub fn weighted_gram(&self, c: &GridFn) -> DMatrix<f64> {
        assert_eq!(c.len(), self.quad.len());
        let m = self.dim();
        match self.quad.axes.len() {
            1 => {
                let weights = &self.quad.axes[0].weights;
                let cw: Vec<f64> = c.0.iter().zip(weights.iter()).map(|(v, w)| v * w).collect();
                let mut a = DMatrix::<f64>::zeros(m, m);
                let rows: Vec<Vec<f64>> = (0..m)
                    .into_par_iter()
                    .map(|i| {
                        let row_i = &self.sin[0][self.basis.modes[i].indices[0] - 1];
                        let scale_i = self.basis.mode_scale(i);
                        (i..m)
                            .map(|j| {
                                let row_j = &self.sin[0][self.basis.modes[j].indices[0] - 1];
                                let dot: f64 = cw
                                    .iter()
                                    .zip(row_i.iter().zip(row_j.iter()))
                                    .map(|(x, (si, sj))| x * si * sj)
                                    .sum();
                                dot * scale_i * self.basis.mode_scale(j)
                            })
                            .collect()
                    })
                    .collect();
                for (i, row) in rows.into_iter().enumerate() {
                    for (off, val) in row.into_iter().enumerate() {
                        let j = i + off;
                        a[(i, j)] = val;
                        a[(j, i)] = val;
                    }
                }
                a
            }
            2 => {
                let nx = self.quad.axes[0].len();
                let ny = self.quad.axes[1].len();
                let wx = &self.quad.axes[0].weights;
                let wy = &self.quad.axes[1].weights;
                let imax = self.basis.max_index[0];

                // cw(x, y) with both weights folded in.
                let cw: Vec<f64> = (0..nx * ny)
                    .map(|t| c.0[t] * wx[t / ny] * wy[t % ny])
                    .collect();

                // P[(ia, ib)][y] = sum_x cw(x, y) Sx[ia][x] Sx[ib][x],
                // for ordered pairs ia <= ib (0-based axis indices).
                let pair_index = |ia: usize, ib: usize| ia * imax + ib - ia * (ia + 1) / 2;
                let n_pairs = imax * (imax + 1) / 2;
                let pair_table: Vec<Vec<f64>> = (0..n_pairs)
                    .into_par_iter()
                    .map(|pi| {
                        // Invert the pair index.
                        let mut ia = 0usize;
                        let mut rem = pi;
                        while rem >= imax - ia {
                            rem -= imax - ia;
                            ia += 1;
                        }
                        let ib = ia + rem;
                        let sa = &self.sin[0][ia];
                        let sb = &self.sin[0][ib];
                        let mut row = vec![0.0; ny];
                        for ix in 0..nx {
                            let s = sa[ix] * sb[ix];
                            let base = ix * ny;
                            for (iy, r) in row.iter_mut().enumerate() {
                                *r += s * cw[base + iy];
                            }
                        }
                        row
                    })
                    .collect();

                let mut a = DMatrix::<f64>::zeros(m, m);
                let entries: Vec<Vec<f64>> = (0..m)
                    .into_par_iter()
                    .map(|ia_mode| {
                        let mode_a = &self.basis.modes[ia_mode];
                        let scale_a = self.basis.mode_scale(ia_mode);
                        (ia_mode..m)
                            .map(|ib_mode| {
                                let mode_b = &self.basis.modes[ib_mode];
                                let (i0, i1) = (mode_a.indices[0] - 1, mode_b.indices[0] - 1);
                                let p = &pair_table[pair_index(i0.min(i1), i0.max(i1))];
                                let sja = &self.sin[1][mode_a.indices[1] - 1];
                                let sjb = &self.sin[1][mode_b.indices[1] - 1];
                                let mut dot = 0.0;
                                for iy in 0..ny {
                                    dot += p[iy] * sja[iy] * sjb[iy];
                                }
                                dot * scale_a * self.basis.mode_scale(ib_mode)
                            })
                            .collect()
                    })
                    .collect();
                for (i, row) in entries.into_iter().enumerate() {
                    for (off, val) in row.into_iter().enumerate() {
                        let j = i + off;
                        a[(i, j)] = val;
                        a[(j, i)] = val;
                    }
                }
                a
            }
            _ => unreachable!(),
        }
    }

    /// Stiffness Gram matrix by quadrature (identity up to quadrature
    /// error, by the unit-H^1_0 scaling). Used for validation.
    pub fn gradient_gram(&self) -> DMatrix<f64> {
        let m = self.dim();
        let pi = std::f64::consts::PI;
        let mut a = DMatrix::<f64>::zeros(m, m);
        match self.quad.axes.len() {
            1 => {
                let weights = &self.quad.axes[0].weights;
                let length = self.quad.axes[0].length;
                for i in 0..m {
                    for j in i..m
                    {
                        let (mi, mj) = (self.basis.modes[i].indices[0], self.basis.modes[j].indices[0]);
                        let fi = mi as f64 * pi / length;
                        let fj = mj as f64 * pi / length;
                        let ci = &self.cos[0][mi - 1];
                        let cj = &self.cos[0][mj - 1];
                        let dot: f64 = weights
                            .iter()
                            .zip(ci.iter().zip(cj.iter()))
                            .map(|(w, (a, b))| w * a * b)
                            .sum();
                        let val =
                            dot * fi * fj * self.basis.mode_scale(i) * self.basis.mode_scale(j);
                        a[(i, j)] = val;
                        a[(j, i)] = val;
                    }
                }
            }
            2 => {
                // Per-axis product integrals; the 2D integral factorizes.
                let (lx, ly) = (self.quad.axes[0].length, self.quad.axes[1].length);
                let ss_x = self.axis_products(0, false);
                let cc_x = self.axis_products(0, true);
                let ss_y = self.axis_products(1, false);
                let cc_y = self.axis_products(1, true);
                for i in 0..m {
                    for j in i..m {
                        let (ia, ja) = (
                            self.basis.modes[i].indices[0] - 1,
                            self.basis.modes[i].indices[1] - 1,
                        );
                        let (ib, jb) = (
                            self.basis.modes[j].indices[0] - 1,
                            self.basis.modes[j].indices[1] - 1,
                        );
                        let fxa = (ia + 1) as f64 * pi / lx;
                        let fxb = (ib + 1) as f64 * pi / lx;
                        let fya = (ja + 1) as f64 * pi / ly;
                        let fyb = (jb + 1) as f64 * pi / ly;
                        let term_x = fxa * fxb * cc_x[(ia, ib)] * ss_y[(ja, jb)];
                        let term_y = fya * fyb * ss_x[(ia, ib)] * cc_y[(ja, jb)];
                        let val = (term_x + term_y)
                            * self.basis.mode_scale(i)
                            * self.basis.mode_scale(j);
                        a[(i, j)] = val;
                        a[(j, i)] = val;
                    }
                }
            }
            _ => unreachable!(),
        }
        a
    }

    /// Mass Gram matrix by quadrature: integral of w_a w_b
    /// (= delta_ab / mu_a up to quadrature error).
    pub fn mass_gram(&self) -> DMatrix<f64> {
        let m = self.dim();
        let mut a = DMatrix::<f64>::zeros(m, m);
        match self.quad.axes.len() {
            1 => {
                let ss = self.axis_products(0, false);
                for i in 0..m {
                    for j in i..m {
                        let (ia, ib) = (
                            self.basis.modes[i].indices[0] - 1,
                            self.basis.modes[j].indices[0] - 1,
                        );
                        let val =
                            ss[(ia, ib)] * self.basis.mode_scale(i) * self.basis.mode_scale(j);
                        a[(i, j)] = val;
                        a[(j, i)] = val;
                    }
                }
            }
            2 => {
                let ss_x = self.axis_products(0, false);
                let ss_y = self.axis_products(1, false);
                for i in 0..m {
                    for j in i..m {
                        let (ia, ja) = (
                            self.basis.modes[i].indices[0] - 1,
                            self.basis.modes[i].indices[1] - 1,
                        );
                        let (ib, jb) = (
                            self.basis.modes[j].indices[0] - 1,
                            self.basis.modes[j].indices[1] - 1,
                        );
                        let val = ss_x[(ia, ib)]
                            * ss_y[(ja, jb)]
                            * self.basis.mode_scale(i)
                            * self.basis.mode_scale(j);
                        a[(i, j)] = val;
                        a[(j, i)] = val;
                    }
                }
            }
            _ => unreachable!(),
        }
        a
    }

    /// Per-axis weighted products of sin (or cos) rows.
    fn axis_products(&self, axis: usize, use_cos: bool) -> DMatrix<f64> {
        let table = if use_cos { &self.cos[axis] } else { &self.sin[axis] };
        let k = table.len();
        let weights = &self.quad.axes[axis].weights;
        let mut out = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let dot: f64 = weights
                    .iter()
                    .zip(table[i].iter().zip(table[j].iter()))
                    .map(|(w, (a, b))| w * a * b)
                    .sum();
                out[(i, j)] = dot;
                out[(j, i)] = dot;
            }
        }
        out
    }

    /// -Laplacian of an expansion, evaluated spectrally on the grid.
    pub fn neg_laplacian(&self, xi: &[f64]) -> Result<GridFn> {
        let scaled: Vec<f64> = xi
            .iter()
            .zip(self.basis.modes.iter())
            .map(|(c, mode)| c * mode.eigenvalue)
            .collect();
        self.expand(&scaled)
    }

    /// Node indices at boundary distance >= INTERIOR_BAND_FRACTION of the
    /// shortest side.
    pub fn interior_indices(&self) -> Vec<usize> {
        let band = self.basis.domain.min_side() * INTERIOR_BAND_FRACTION;
        (0..self.quad.len())
            .filter(|&t| self.quad.node_boundary_distance(t) >= band)
            .collect()
    }

    /// Node indices inside the first uniform cell next to the boundary.
    pub fn boundary_adjacent_indices(&self) -> Vec<usize> {
        let h: Vec<f64> = self
            .quad
            .axes
            .iter()
            .map(|a| a.length / a.cells as f64)
            .collect();
        (0..self.quad.len())
            .filter(|&t| {
                let p = self.quad.node(t);
                p.iter()
                    .enumerate()
                    .any(|(axis, &x)| x.min(self.quad.axes[axis].length - x) < h[axis])
            })
            .collect()
    }
}

/// Max absolute entry of (A - B).
pub fn max_matrix_deviation(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).iter().map(|v| v.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn interval_eigenvalues_and_normalization() {
        let basis = Basis::build(ModelDomain::interval(1.0), 3).unwrap();
        let mu = basis.eigenvalues();
        assert_abs_diff_eq!(mu[0], PI * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(mu[1], 4.0 * PI * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(mu[2], 9.0 * PI * PI, epsilon = 1e-12);
        // w_1(1/2) = sqrt(2) sin(pi/2) / pi.
        assert_abs_diff_eq!(
            basis.eval_mode(0, &[0.5]),
            2.0f64.sqrt() / PI,
            epsilon = 1e-14
        );
    }

    #[test]
    fn rectangle_mode_ordering_breaks_ties_lexicographically() {
        let basis = Basis::build(ModelDomain::rectangle(1.0, 1.0), 4).unwrap();
        let mu = basis.eigenvalues();
        assert_abs_diff_eq!(mu[0], 2.0 * PI * PI, epsilon = 1e-10);
        assert_abs_diff_eq!(mu[1], 5.0 * PI * PI, epsilon = 1e-10);
        assert_abs_diff_eq!(mu[2], 5.0 * PI * PI, epsilon = 1e-10);
        assert_abs_diff_eq!(mu[3], 8.0 * PI * PI, epsilon = 1e-10);
        assert_eq!(basis.modes[1].indices, [1, 2]);
        assert_eq!(basis.modes[2].indices, [2, 1]);
    }

    #[test]
    fn basis_size_limits() {
        assert!(matches!(
            Basis::build(ModelDomain::interval(1.0), 0),
            Err(Error::EmptyBasis)
        ));
        assert!(matches!(
            Basis::build(ModelDomain::interval(1.0), MAX_BASIS_DIM + 1),
            Err(Error::BasisTooLarge { .. })
        ));
    }

    #[test]
    fn expansion_point_values() {
        let disc = Discretization::standard(ModelDomain::interval(1.0), 4).unwrap();
        let mut xi = vec![0.0; 4];
        xi[0] = 1.0;
        let vals = disc.basis.eval_expansion(&xi, &[vec![0.5]]).unwrap();
        assert_abs_diff_eq!(vals[0], 2.0f64.sqrt() / PI, epsilon = 1e-14);
        let zero = disc.expand(&vec![0.0; 4]).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
        assert!(disc.expand(&vec![0.0; 3]).is_err());
    }

    #[test]
    fn parseval_identity_on_quadrature_grid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for domain in [ModelDomain::interval(1.0), ModelDomain::rectangle(1.0, 1.5)] {
            let disc = Discretization::standard(domain, 8).unwrap();
            let xi: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let grads = disc.expand_grad(&xi).unwrap();
            let mut sq = vec![0.0; disc.quad.len()];
            for g in &grads {
                for (s, v) in sq.iter_mut().zip(g.0.iter()) {
                    *s += v * v;
                }
            }
            let quad_norm = disc.quad.integrate(&sq);
            let exact: f64 = xi.iter().map(|c| c * c).sum();
            assert!(
                (quad_norm - exact).abs() <= 1e-10 * exact.max(1.0),
                "Parseval violated for {domain:?}: {quad_norm} vs {exact}"
            );
        }
    }

    #[test]
    fn gram_matrices_are_orthonormal_to_quadrature_tolerance() {
        for domain in [ModelDomain::interval(1.0), ModelDomain::rectangle(1.0, 1.0)] {
            let disc = Discretization::standard(domain, 6).unwrap();
            let grad = disc.gradient_gram();
            let eye = DMatrix::<f64>::identity(6, 6);
            assert!(max_matrix_deviation(&grad, &eye) <= 1e-12);

            let mass = disc.mass_gram();
            let mut expected = DMatrix::<f64>::zeros(6, 6);
            for (a, mode) in disc.basis.modes.iter().enumerate() {
                expected[(a, a)] = 1.0 / mode.eigenvalue;
            }
            assert!(max_matrix_deviation(&mass, &expected) <= 1e-12);
        }
    }

    #[test]
    fn eigen_residual_of_basis_functions() {
        // integral(grad w_j . grad w_i) - mu_j integral(w_j w_i) = 0.
        let disc = Discretization::standard(ModelDomain::interval(1.0), 5).unwrap();
        let grad = disc.gradient_gram();
        let mass = disc.mass_gram();
        for j in 0..5 {
            let mu = disc.basis.modes[j].eigenvalue;
            for i in 0..5 {
                assert!((grad[(i, j)] - mu * mass[(i, j)]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn integrate_known_functions() {
        let disc = Discretization::standard(ModelDomain::interval(1.0), 4).unwrap();
        let ones = GridFn(vec![1.0; disc.quad.len()]);
        assert_abs_diff_eq!(disc.quad.integrate(&ones.0), 1.0, epsilon = 1e-13);

        let sine = GridFn(
            disc.quad.axes[0]
                .nodes
                .iter()
                .map(|&x| (PI * x).sin())
                .collect(),
        );
        assert_abs_diff_eq!(disc.quad.integrate(&sine.0), 2.0 / PI, epsilon = 1e-13);
    }

    #[test]
    fn fractional_power_integrand_matches_refined_quadrature() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let basis = Basis::build(ModelDomain::interval(1.0), 4).unwrap();
        let xi: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let coarse = Discretization::new(basis.clone(), Quadrature::for_basis(&basis));
        let fine = Discretization::new(basis.clone(), Quadrature::for_basis_refined(&basis, 10));

        let g_coarse = coarse.expand(&xi).unwrap().map(|v| v.abs().powf(1.5));
        let g_fine = fine.expand(&xi).unwrap().map(|v| v.abs().powf(1.5));
        let i_coarse = coarse.quad.integrate(&g_coarse.0);
        let i_fine = fine.quad.integrate(&g_fine.0);
        assert!(
            (i_coarse - i_fine).abs() <= 1e-10 * i_fine.abs().max(1.0),
            "coarse {i_coarse} vs refined {i_fine}"
        );
    }

    #[test]
    fn weighted_gram_matches_mass_for_unit_weight() {
        for domain in [ModelDomain::interval(1.0), ModelDomain::rectangle(1.0, 0.7)] {
            let disc = Discretization::standard(domain, 5).unwrap();
            let ones = GridFn(vec![1.0; disc.quad.len()]);
            let wg = disc.weighted_gram(&ones);
            let mass = disc.mass_gram();
            assert!(max_matrix_deviation(&wg, &mass) <= 1e-12);
        }
    }

    #[test]
    fn projection_recovers_coefficients_scaled_by_eigenvalue() {
        // project(expand(xi))_a = xi_a / mu_a by the basis scaling.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for domain in [ModelDomain::interval(1.0), ModelDomain::rectangle(1.0, 1.0)] {
            let disc = Discretization::standard(domain, 6).unwrap();
            let xi: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v = disc.expand(&xi).unwrap();
            let p = disc.project(&v);
            for (a, mode) in disc.basis.modes.iter().enumerate() {
                assert_abs_diff_eq!(p[a], xi[a] / mode.eigenvalue, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn masked_integration_partitions_the_domain() {
        let disc = Discretization::standard(ModelDomain::interval(1.0), 4).unwrap();
        let v = GridFn(disc.quad.axes[0].nodes.iter().map(|&x| x * x).collect());
        let total = disc.quad.integrate(&v.0);
        let left = disc.quad.integrate_where(&v.0, |t| disc.quad.node(t)[0] < 0.5);
        let right = disc.quad.integrate_where(&v.0, |t| disc.quad.node(t)[0] >= 0.5);
        assert_abs_diff_eq!(left + right, total, epsilon = 1e-15);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn h10_norm_equals_coefficient_norm(
                xi in proptest::collection::vec(-2.0f64..2.0, 8),
            ) {
                let disc = Discretization::standard(ModelDomain::interval(1.0), 8).unwrap();
                let grads = disc.expand_grad(&xi).unwrap();
                let sq: Vec<f64> = grads[0].0.iter().map(|v| v * v).collect();
                let quad_norm = disc.quad.integrate(&sq);
                let exact: f64 = xi.iter().map(|c| c * c).sum();
                prop_assert!((quad_norm - exact).abs() <= 1e-10 * exact.max(1.0));
            }
        }
    }
}
