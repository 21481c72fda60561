//! Five-point finite differences for the Laplace equation with Dirichlet data.
//!
//! The interior unknowns satisfy `4 u_C - u_E - u_W - u_N - u_S = 0`, i.e. the
//! discrete Laplacian scaled by `h²`. All residuals reported here use that
//! scaling. The system is symmetric positive definite, so it is solved either
//! matrix-free by conjugate gradients or by a banded Cholesky factorization
//! that can be reused across many right-hand sides.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryPartition, GammaQuadrature, Grid2D};

/// Values on every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                what: "field values",
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutOfRange("field contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let (x, y) = grid.coords(idx);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Restriction to a sub-grid sharing the node lattice.
    pub fn restrict(&self, sub: &Grid2D) -> Result<ScalarField> {
        let (di, dj) = sub.offset_in(&self.grid)?;
        let mut values = Vec::with_capacity(sub.len());
        for j in 0..sub.ny {
            for i in 0..sub.nx {
                values.push(self.at(i + di, j + dj));
            }
        }
        Ok(ScalarField { grid: *sub, values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        let (a, b) = (&self.grid, &other.grid);
        if a.nx != b.nx || a.ny != b.ny || (a.h - b.h).abs() > 1e-12 * a.h {
            return Err(Error::Misaligned(format!(
                "{}x{} grid vs {}x{} grid",
                a.nx, a.ny, b.nx, b.ny
            )));
        }
        Ok(())
    }
}

/// Backend used for the interior linear system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolver {
    #[default]
    ConjugateGradient,
    BandedCholesky,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Max-norm target for the `h²`-scaled residual, relative to
    /// `max(1, max |boundary data|)`.
    pub tol: f64,
    pub backend: LinearSolver,
    /// CG iteration cap; `None` picks a size-dependent default.
    pub max_iter: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            backend: LinearSolver::ConjugateGradient,
            max_iter: None,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Dirichlet solver bound to one grid. Holds the banded factorization when
/// that backend is selected, so repeated solves only pay for substitution.
#[derive(Debug, Clone)]
pub struct DirichletSolver {
    grid: Grid2D,
    boundary: Vec<usize>,
    options: SolveOptions,
    cholesky: Option<BandedCholesky>,
}

impl DirichletSolver {
    pub fn new(grid: &Grid2D, options: SolveOptions) -> Result<Self> {
        if grid.nx < 3 || grid.ny < 3 {
            return Err(Error::GridTooSmall {
                nx: grid.nx,
                ny: grid.ny,
                reason: "need at least one interior node per axis".into(),
            });
        }
        if !(options.tol.is_finite() && options.tol > 0.0) {
            return Err(Error::OutOfRange(format!(
                "solver tolerance must be positive, got {}",
                options.tol
            )));
        }
        let (boundary, _) = grid.boundary_loop();
        let cholesky = match options.backend {
            LinearSolver::BandedCholesky => Some(BandedCholesky::factor_laplacian(grid.nx - 2, grid.ny - 2)?),
            LinearSolver::ConjugateGradient => None,
        };
        Ok(Self {
            grid: *grid,
            boundary,
            options,
            cholesky,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn options(&self) -> &SolveOptions {
        &self.options
    }

    /// Solves with `boundary_values` given in boundary-loop order.
    pub fn solve(&self, boundary_values: &[f64]) -> Result<ScalarField> {
        if boundary_values.len() != self.boundary.len() {
            return Err(Error::LengthMismatch {
                what: "boundary values",
                expected: self.boundary.len(),
                actual: boundary_values.len(),
            });
        }
        if boundary_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutOfRange("boundary data must be finite".into()));
        }
        let g = &self.grid;
        let mut values = vec![0.0; g.len()];
        for (&idx, &v) in self.boundary.iter().zip(boundary_values) {
            values[idx] = v;
        }
        let (mx, my) = (g.nx - 2, g.ny - 2);
        let mut rhs = vec![0.0; mx * my];
        for q in 0..my {
            for p in 0..mx {
                let (i, j) = (p + 1, q + 1);
                let mut s = 0.0;
                if i == 1 {
                    s += values[g.index(0, j)];
                }
                if i == g.nx - 2 {
                    s += values[g.index(g.nx - 1, j)];
                }
                if j == 1 {
                    s += values[g.index(i, 0)];
                }
                if j == g.ny - 2 {
                    s += values[g.index(i, g.ny - 1)];
                }
                rhs[q * mx + p] = s;
            }
        }
        let scale = boundary_values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let target = self.options.tol * scale;
        let interior = match &self.cholesky {
            Some(chol) => chol.solve(&rhs),
            None => {
                let cap = self
                    .options
                    .max_iter
                    .unwrap_or_else(|| 50 * (mx + my) + 20 * (mx * my).min(20_000));
                conjugate_gradient(mx, my, &rhs, target, cap)?
            }
        };
        for q in 0..my {
            for p in 0..mx {
                values[g.index(p + 1, q + 1)] = interior[q * mx + p];
            }
        }
        let field = ScalarField { grid: *g, values };
        let achieved = laplacian_residual(&field);
        if achieved > target {
            return Err(Error::NoConvergence {
                iterations: 0,
                residual: achieved,
                target,
            });
        }
        Ok(field)
    }
}

/// One-shot Dirichlet solve; boundary data in boundary-loop order.
pub fn solve_dirichlet(grid: &Grid2D, boundary_values: &[f64], tol: f64) -> Result<ScalarField> {
    DirichletSolver::new(grid, SolveOptions::with_tol(tol))?.solve(boundary_values)
}

/// `y = K x` for the interior operator `K = 4I - (neighbors)`.
fn apply_laplacian(mx: usize, my: usize, x: &[f64], y: &mut [f64]) {
    for q in 0..my {
        for p in 0..mx {
            let k = q * mx + p;
            let mut s = 4.0 * x[k];
            if p > 0 {
                s -= x[k - 1];
            }
            if p + 1 < mx {
                s -= x[k + 1];
            }
            if q > 0 {
                s -= x[k - mx];
            }
            if q + 1 < my {
                s -= x[k + mx];
            }
            y[k] = s;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Plain CG on the interior system, stopping on the max-norm of the true
/// residual. The recursive residual drifts from the true one near machine
/// precision, so convergence is confirmed by recomputing `b - K x`.
fn conjugate_gradient(mx: usize, my: usize, rhs: &[f64], target: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = mx * my;
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut kp = vec![0.0; n];
    let mut iterations = 0;
    // Restarts guard against the recursive residual underestimating the true one.
    for _ in 0..4 {
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        while max_norm(&r) > 0.5 * target && iterations < max_iter {
            apply_laplacian(mx, my, &p, &mut kp);
            let alpha = rr / dot(&p, &kp);
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * kp[k];
            }
            let rr_next = dot(&r, &r);
            let beta = rr_next / rr;
            rr = rr_next;
            for k in 0..n {
                p[k] = r[k] + beta * p[k];
            }
            iterations += 1;
        }
        apply_laplacian(mx, my, &x, &mut kp);
        for k in 0..n {
            r[k] = rhs[k] - kp[k];
        }
        let true_res = max_norm(&r);
        if true_res <= target {
            return Ok(x);
        }
        if iterations >= max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual: true_res,
                target,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations,
        residual: max_norm(&r),
        target,
    })
}

/// Cholesky factor of the banded interior operator, stored by rows:
/// `band[k * (bw + 1) + d]` is `L[k, k - d]`.
#[derive(Debug, Clone)]
struct BandedCholesky {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandedCholesky {
    fn factor_laplacian(mx: usize, my: usize) -> Result<Self> {
        let n = mx * my;
        let bw = mx;
        let w = bw + 1;
        let mut band = vec![0.0_f64; n * w];
        for k in 0..n {
            band[k * w] = 4.0;
            if k % mx != 0 {
                band[k * w + 1] = -1.0;
            }
            if k >= mx {
                band[k * w + mx] = -1.0;
            }
        }
        for k in 0..n {
            let lo = k.saturating_sub(bw);
            for c in lo..=k {
                let c_lo = c.saturating_sub(bw).max(lo);
                let mut s = band[k * w + (k - c)];
                for t in c_lo..c {
                    s -= band[k * w + (k - t)] * band[c * w + (c - t)];
                }
                if c == k {
                    if s <= 0.0 {
                        return Err(Error::Numerical {
                            message: "banded Cholesky hit a nonpositive pivot".into(),
                            condition: f64::INFINITY,
                        });
                    }
                    band[k * w] = s.sqrt();
                } else {
                    band[k * w + (k - c)] = s / band[c * w];
                }
            }
        }
        Ok(Self { n, bw, band })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y = rhs.to_vec();
        for k in 0..n {
            let mut s = y[k];
            for t in k.saturating_sub(bw)..k {
                s -= self.band[k * w + (k - t)] * y[t];
            }
            y[k] = s / self.band[k * w];
        }
        for k in (0..n).rev() {
            let mut s = y[k];
            for t in k + 1..(k + bw + 1).min(n) {
                s -= self.band[t * w + (t - k)] * y[t];
            }
            y[k] = s / self.band[k * w];
        }
        y
    }
}

/// Max over interior nodes of `|u_E + u_W + u_N + u_S - 4 u_C|`, the
/// five-point Laplacian scaled by `h²`.
pub fn laplacian_residual(field: &ScalarField) -> f64 {
    let g = &field.grid;
    if g.nx < 3 || g.ny < 3 {
        return 0.0;
    }
    let mut worst = 0.0_f64;
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let r = field.at(i + 1, j) + field.at(i - 1, j) + field.at(i, j + 1) + field.at(i, j - 1)
                - 4.0 * field.at(i, j);
            worst = worst.max(r.abs());
        }
    }
    worst
}

/// Accuracy of the one-sided normal difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffOrder {
    First,
    #[default]
    Second,
}

impl DiffOrder {
    pub fn from_int(order: u8) -> Result<Self> {
        match order {
            1 => Ok(DiffOrder::First),
            2 => Ok(DiffOrder::Second),
            other => Err(Error::OutOfRange(format!(
                "difference order must be 1 or 2, got {other}"
            ))),
        }
    }

    fn points(self) -> usize {
        match self {
            DiffOrder::First => 2,
            DiffOrder::Second => 3,
        }
    }
}

/// Outward normal derivative at each Γ node of `partition`, in measurement order.
pub fn normal_derivative(field: &ScalarField, partition: &BoundaryPartition, order: DiffOrder) -> Result<Vec<f64>> {
    normal_derivative_on(field, &partition.gamma_quadrature(), order)
}

/// Same as [`normal_derivative`] with a precomputed Γ quadrature.
pub fn normal_derivative_on(field: &ScalarField, quad: &GammaQuadrature, order: DiffOrder) -> Result<Vec<f64>> {
    let g = &field.grid;
    if g.nx < order.points() || g.ny < order.points() {
        return Err(Error::GridTooSmall {
            nx: g.nx,
            ny: g.ny,
            reason: format!("{order:?} normal difference needs {} nodes per axis", order.points()),
        });
    }
    let h = g.h;
    quad.nodes
        .iter()
        .zip(&quad.normal_sides)
        .map(|(&idx, &side)| {
            let (i, j) = g.ij(idx);
            let (di, dj) = side.inward_step();
            let step = |k: isize| {
                let ii = i as isize + k * di;
                let jj = j as isize + k * dj;
                if ii < 0 || jj < 0 || ii as usize >= g.nx || jj as usize >= g.ny {
                    return Err(Error::Misaligned(format!(
                        "node ({i}, {j}) is not on the {side} side of this grid"
                    )));
                }
                Ok(field.at(ii as usize, jj as usize))
            };
            let u0 = step(0)?;
            let u1 = step(1)?;
            Ok(match order {
                DiffOrder::First => (u0 - u1) / h,
                DiffOrder::Second => (3.0 * u0 - 4.0 * u1 + step(2)?) / (2.0 * h),
            })
        })
        .collect()
}

/// Boundary values of `f` in boundary-loop order.
pub fn sample_boundary(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let (nodes, _) = grid.boundary_loop();
    nodes
        .into_iter()
        .map(|idx| {
            let (x, y) = grid.coords(idx);
            f(x, y)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{boundary_partition, build_grid, Rect, Side};

    fn unit(h: f64) -> Grid2D {
        build_grid(Rect::unit(), h).unwrap()
    }

    fn max_err(field: &ScalarField, exact: impl Fn(f64, f64) -> f64) -> f64 {
        (0..field.grid.len())
            .map(|idx| {
                let (x, y) = field.grid.coords(idx);
                (field.values[idx] - exact(x, y)).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn quadratic_harmonic_is_reproduced() {
        let g = unit(1.0 / 32.0);
        let u = |x: f64, y: f64| x * x - y * y;
        let field = solve_dirichlet(&g, &sample_boundary(&g, u), 1e-12).unwrap();
        assert!(max_err(&field, u) < 1e-10);
    }

    #[test]
    fn constant_data_gives_constant_field() {
        let g = unit(1.0 / 16.0);
        let field = solve_dirichlet(&g, &vec![1.0; g.boundary_len()], 1e-12).unwrap();
        assert!(field.values.iter().all(|v| (v - 1.0).abs() < 1e-11));
    }

    #[test]
    fn second_order_convergence() {
        let u = |x: f64, y: f64| x.exp() * y.sin();
        let e32 = {
            let g = unit(1.0 / 32.0);
            max_err(&solve_dirichlet(&g, &sample_boundary(&g, u), 1e-12).unwrap(), u)
        };
        let e64 = {
            let g = unit(1.0 / 64.0);
            max_err(&solve_dirichlet(&g, &sample_boundary(&g, u), 1e-12).unwrap(), u)
        };
        let ratio = e32 / e64;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn banded_backend_matches_cg() {
        let g = build_grid(Rect::new(0.0, 0.0, 1.0, 0.75).unwrap(), 1.0 / 16.0).unwrap();
        let data = sample_boundary(&g, |x, y| (3.0 * x).sin() + y * y * x);
        let cg = DirichletSolver::new(&g, SolveOptions::with_tol(1e-12)).unwrap();
        let chol = DirichletSolver::new(
            &g,
            SolveOptions {
                backend: LinearSolver::BandedCholesky,
                ..SolveOptions::with_tol(1e-12)
            },
        )
        .unwrap();
        let a = cg.solve(&data).unwrap();
        let b = chol.solve(&data).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() < 1e-10);
    }

    #[test]
    fn residual_postcondition_and_stencil() {
        let g = unit(1.0 / 16.0);
        let data = sample_boundary(&g, |x, y| (x * 7.0).cos() * y);
        let field = solve_dirichlet(&g, &data, 1e-10).unwrap();
        assert!(laplacian_residual(&field) <= 1e-10);

        let quad = ScalarField::from_fn(g, |x, y| x * x - y * y);
        assert!(laplacian_residual(&quad) <= 1e-12);

        // (x+h)^4 + (x-h)^4 - 2x^4 = 12 x² h² + 2 h⁴ at the node next to x = 0.
        let quartic = ScalarField::from_fn(g, |x, _| x.powi(4));
        let h = g.h;
        let expected = 12.0 * (15.0 * h).powi(2) * h * h + 2.0 * h.powi(4);
        assert!((laplacian_residual(&quartic) - expected).abs() < 1e-12);
        assert!(laplacian_residual(&quartic) > 0.0);
    }

    #[test]
    fn no_convergence_reports_residual() {
        let g = unit(1.0 / 32.0);
        let data = sample_boundary(&g, |x, y| x + y * y);
        let solver = DirichletSolver::new(
            &g,
            SolveOptions {
                max_iter: Some(3),
                ..SolveOptions::with_tol(1e-12)
            },
        )
        .unwrap();
        match solver.solve(&data) {
            Err(Error::NoConvergence { residual, .. }) => assert!(residual > 1e-12),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn normal_derivative_of_linear_field() {
        let g = unit(0.125);
        let p = boundary_partition(&g, &[Side::Bottom]).unwrap();
        let field = ScalarField::from_fn(g, |_, y| y);
        for order in [DiffOrder::First, DiffOrder::Second] {
            let d = normal_derivative(&field, &p, order).unwrap();
            assert_eq!(d.len(), 9);
            assert!(d.iter().all(|&v| v == -1.0), "{d:?}");
        }
        let c = ScalarField::from_fn(g, |_, _| 3.5);
        assert!(normal_derivative(&c, &p, DiffOrder::Second)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn normal_derivative_orders() {
        let u = |x: f64, y: f64| (4.0 * x).exp() * (4.0 * (y + 0.2)).cos();
        let g_exact = |x: f64| 4.0 * (4.0 * x).exp() * 0.8_f64.sin();
        let err = |h: f64, order| {
            let g = unit(h);
            let p = boundary_partition(&g, &[Side::Bottom]).unwrap();
            let d = normal_derivative(&ScalarField::from_fn(g, u), &p, order).unwrap();
            p.gamma_quadrature()
                .points
                .iter()
                .zip(d)
                .map(|(&(x, _), v)| (v - g_exact(x)).abs())
                .fold(0.0, f64::max)
        };
        let r2 = err(1.0 / 32.0, DiffOrder::Second) / err(1.0 / 64.0, DiffOrder::Second);
        assert!((3.5..4.5).contains(&r2), "order-2 ratio {r2}");
        let r1 = err(1.0 / 32.0, DiffOrder::First) / err(1.0 / 64.0, DiffOrder::First);
        assert!((1.8..2.2).contains(&r1), "order-1 ratio {r1}");
    }

    #[test]
    fn normal_derivative_needs_room() {
        let g = build_grid(Rect::new(0.0, 0.0, 1.0, 0.5).unwrap(), 0.5).unwrap();
        let p = boundary_partition(&g, &[Side::Bottom]).unwrap();
        let f = ScalarField::zeros(g);
        assert!(normal_derivative(&f, &p, DiffOrder::Second).is_err());
        assert!(normal_derivative(&f, &p, DiffOrder::First).is_ok());
    }

    #[test]
    fn symmetric_data_gives_symmetric_field() {
        let g = unit(1.0 / 32.0);
        let data = sample_boundary(&g, |x, y| (x - 0.5).powi(2) + y.sin());
        let f = solve_dirichlet(&g, &data, 1e-12).unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx {
                assert!((f.at(i, j) - f.at(g.nx - 1 - i, j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn restriction_to_subgrid() {
        let outer = build_grid(Rect::unit().padded(0.25).unwrap(), 0.25).unwrap();
        let f = ScalarField::from_fn(outer, |x, y| x + 10.0 * y);
        let inner = unit(0.25);
        let r = f.restrict(&inner).unwrap();
        for idx in 0..inner.len() {
            let (x, y) = inner.coords(idx);
            assert!((r.values[idx] - (x + 10.0 * y)).abs() < 1e-12);
        }
    }
}
