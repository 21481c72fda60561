//! Boundary basis on the enlarged rectangle, its discrete harmonic extensions
//! (base solutions), discrete boundary norms, and assembly of the linear
//! system the Tikhonov functional is built from.
//!
//! A candidate reconstruction is `u = Σ b_i w_i` where `w_i` is the discrete
//! harmonic function on the enlarged grid with boundary data `φ_i`. Fitting
//! happens on Γ ⊂ ∂Ω, strictly inside the enlarged domain, so every column of
//! the system comes from sampling the base solutions there.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdm::{normal_derivative_on, DiffOrder, DirichletSolver, ScalarField, SolveOptions};
use crate::grid::{build_grid, BoundaryPartition, GammaQuadrature, Grid2D, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisKind {
    /// Piecewise-linear hats in arc length centered every `stride` boundary nodes.
    Hat { stride: usize },
    /// Characteristic functions of `arcs` equal, disjoint boundary arcs.
    Indicator { arcs: usize },
}

impl Default for BasisKind {
    fn default() -> Self {
        BasisKind::Hat { stride: 1 }
    }
}

/// Basis functions on the boundary of the enlarged grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryBasis {
    pub tilde_grid: Grid2D,
    pub kind: BasisKind,
    pub n: usize,
    /// Nonzero values of each basis function as `(boundary loop position, value)`.
    pub support: Vec<Vec<(usize, f64)>>,
}

impl BoundaryBasis {
    /// Dense boundary data of basis function `i`, in boundary-loop order.
    pub fn boundary_values(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.tilde_grid.boundary_len()];
        for &(k, w) in &self.support[i] {
            v[k] = w;
        }
        v
    }

    /// Coefficients that interpolate `f` at the hat centers (hat kind) or
    /// average it over each arc (indicator kind).
    pub fn project(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let (nodes, _) = self.tilde_grid.boundary_loop();
        let at = |k: usize| {
            let (x, y) = self.tilde_grid.coords(nodes[k]);
            f(x, y)
        };
        match self.kind {
            BasisKind::Hat { stride } => (0..self.n).map(|i| at(i * stride)).collect(),
            BasisKind::Indicator { .. } => self
                .support
                .iter()
                .map(|s| s.iter().map(|&(k, _)| at(k)).sum::<f64>() / s.len() as f64)
                .collect(),
        }
    }
}

/// Builds the basis on the grid of spacing `h` over `tilde_rect`, which must
/// strictly contain `omega`.
pub fn build_basis(omega: &Rect, tilde_rect: Rect, h: f64, kind: BasisKind) -> Result<BoundaryBasis> {
    if !tilde_rect.strictly_contains(omega) {
        return Err(Error::InvalidBasis(
            "the enlarged domain must strictly contain the closure of Ω".into(),
        ));
    }
    let tilde_grid = build_grid(tilde_rect, h)?;
    let len = tilde_grid.boundary_len();
    let support = match kind {
        BasisKind::Hat { stride } => {
            let (sx, sy) = (tilde_grid.nx - 1, tilde_grid.ny - 1);
            if stride == 0 || sx % stride != 0 || sy % stride != 0 {
                return Err(Error::InvalidBasis(format!(
                    "hat stride {stride} must divide the side node counts {sx} and {sy}"
                )));
            }
            (0..len / stride)
                .map(|i| {
                    let center = i * stride;
                    let mut s = vec![(center, 1.0)];
                    for d in 1..stride {
                        let w = 1.0 - d as f64 / stride as f64;
                        s.push(((center + d) % len, w));
                        s.push(((center + len - d) % len, w));
                    }
                    s.sort_by_key(|&(k, _)| k);
                    s
                })
                .collect::<Vec<_>>()
        }
        BasisKind::Indicator { arcs } => {
            if arcs == 0 || len % arcs != 0 {
                return Err(Error::InvalidBasis(format!(
                    "{arcs} arcs do not evenly divide {len} boundary nodes"
                )));
            }
            let per = len / arcs;
            (0..arcs)
                .map(|i| (i * per..(i + 1) * per).map(|k| (k, 1.0)).collect())
                .collect()
        }
    };
    Ok(BoundaryBasis {
        tilde_grid,
        kind,
        n: support.len(),
        support,
    })
}

/// Discrete harmonic extensions `w_i` of every basis function.
#[derive(Debug, Clone)]
pub struct BaseSolutionSet {
    pub basis: BoundaryBasis,
    pub fields: Vec<ScalarField>,
    pub solver_tol: f64,
}

impl BaseSolutionSet {
    pub fn n(&self) -> usize {
        self.fields.len()
    }
}

/// Solves one Dirichlet problem per basis function, in parallel.
pub fn compute_base_solutions(basis: &BoundaryBasis, options: &SolveOptions) -> Result<BaseSolutionSet> {
    let solver = DirichletSolver::new(&basis.tilde_grid, *options)?;
    let fields = (0..basis.n)
        .into_par_iter()
        .map(|i| {
            solver
                .solve(&basis.boundary_values(i))
                .map_err(|e| Error::BaseSolution {
                    index: i,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BaseSolutionSet {
        basis: basis.clone(),
        fields,
        solver_tol: options.tol,
    })
}

/// Discrete `L²(Γ)` and `H¹(Γ)` norms of one sampled function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteNorms {
    pub h1: f64,
    pub l2: f64,
}

/// `L² = sqrt(Σ σ_j v_j²)`, `H¹ = sqrt(L² ² + Σ σ_j (D1 v)_j²)`.
pub fn discrete_norms(values: &[f64], quad: &GammaQuadrature) -> Result<DiscreteNorms> {
    if values.len() != quad.len() {
        return Err(Error::LengthMismatch {
            what: "values on Γ",
            expected: quad.len(),
            actual: values.len(),
        });
    }
    let l2sq: f64 = quad.sigma.iter().zip(values).map(|(s, v)| s * v * v).sum();
    let dv = quad.tangential_difference(values);
    let d1sq: f64 = quad.sigma.iter().zip(&dv).map(|(s, v)| s * v * v).sum();
    Ok(DiscreteNorms {
        h1: (l2sq + d1sq).sqrt(),
        l2: l2sq.sqrt(),
    })
}

/// Rows of the weighted `H²(∂Ω)` operator on a closed boundary loop of
/// spacing `h`: stacked `sqrt(σ)·[v; D1 v; D2 v]` with periodic central
/// differences (corners included, no smoothing).
fn h2_rows(values: &[f64], h: f64, out: &mut [f64]) {
    let n = values.len();
    let w = h.sqrt();
    for k in 0..n {
        let prev = values[(k + n - 1) % n];
        let next = values[(k + 1) % n];
        out[k] = w * values[k];
        out[n + k] = w * (next - prev) / (2.0 * h);
        out[2 * n + k] = w * (next - 2.0 * values[k] + prev) / (h * h);
    }
}

/// Discrete `H²` norm of values on a closed boundary loop of uniform spacing `h`.
pub fn boundary_h2_norm(values: &[f64], h: f64) -> f64 {
    let mut rows = vec![0.0; 3 * values.len()];
    h2_rows(values, h, &mut rows);
    rows.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Regularizer representations: `gram = factorᵀ factor`, `diag_k = sqrt(gram_kk)`.
#[derive(Debug, Clone)]
pub struct Regularizer {
    pub factor: DMatrix<f64>,
    pub gram: DMatrix<f64>,
    pub diag: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegMode {
    /// `Σ (C_k b_k)²` with `C_k = ‖w_k‖_{H²(∂Ω)}`.
    Diagonal,
    /// `‖Σ b_k w_k‖²_{H²(∂Ω)}`.
    #[default]
    Gram,
}

/// Sampled base solutions on Γ and ∂Ω.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    /// `A[j, i] = w_i(x_j)` on Γ.
    pub a: DMatrix<f64>,
    /// `B[j, i] = ∂_ν w_i(x_j)` on Γ.
    pub b: DMatrix<f64>,
    /// Tangential difference operator on Γ.
    pub d1: DMatrix<f64>,
    /// Γ arc-length weights.
    pub sigma: DVector<f64>,
    pub reg: Regularizer,
    pub quadrature: GammaQuadrature,
    pub omega_grid: Grid2D,
    pub order: DiffOrder,
    /// Tolerance the base solutions were solved to.
    pub solver_tol: f64,
}

impl DiscreteSystem {
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// `bᵀ C b` under the given mode.
    pub fn reg_norm(&self, coeffs: &DVector<f64>, mode: RegMode) -> f64 {
        match mode {
            RegMode::Gram => (&self.reg.factor * coeffs).norm(),
            RegMode::Diagonal => self.reg.diag.component_mul(coeffs).norm(),
        }
    }
}

/// Samples every base solution on the measurement nodes and ∂Ω.
pub fn assemble_system(
    set: &BaseSolutionSet,
    omega_partition: &BoundaryPartition,
    order: DiffOrder,
) -> Result<DiscreteSystem> {
    let omega = omega_partition.grid;
    let tilde = set.basis.tilde_grid;
    omega.offset_in(&tilde)?;
    if !tilde.rect.strictly_contains(&omega.rect) {
        return Err(Error::Misaligned("Ω must lie strictly inside the enlarged grid".into()));
    }
    let quad = omega_partition.gamma_quadrature();
    let (m, n) = (quad.len(), set.n());
    let loop_len = omega_partition.nodes.len();

    let columns = set
        .fields
        .par_iter()
        .map(|w| {
            let local = w.restrict(&omega)?;
            let a_col: Vec<f64> = quad.nodes.iter().map(|&idx| local.values[idx]).collect();
            let b_col = normal_derivative_on(&local, &quad, order)?;
            let boundary: Vec<f64> = omega_partition.nodes.iter().map(|&idx| local.values[idx]).collect();
            let mut reg_col = vec![0.0; 3 * loop_len];
            h2_rows(&boundary, omega.h, &mut reg_col);
            Ok((a_col, b_col, reg_col))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut a = DMatrix::zeros(m, n);
    let mut b = DMatrix::zeros(m, n);
    let mut factor = DMatrix::zeros(3 * loop_len, n);
    for (i, (a_col, b_col, reg_col)) in columns.into_iter().enumerate() {
        a.set_column(i, &DVector::from_vec(a_col));
        b.set_column(i, &DVector::from_vec(b_col));
        factor.set_column(i, &DVector::from_vec(reg_col));
    }
    let gram = factor.transpose() * &factor;
    let diag = DVector::from_iterator(n, (0..n).map(|k| gram[(k, k)].max(0.0).sqrt()));
    Ok(DiscreteSystem {
        a,
        b,
        d1: quad.difference_matrix(),
        sigma: DVector::from_vec(quad.sigma.clone()),
        reg: Regularizer { factor, gram, diag },
        quadrature: quad,
        omega_grid: omega,
        order,
        solver_tol: set.solver_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{boundary_partition, Side};

    fn omega() -> Rect {
        Rect::unit()
    }

    #[test]
    fn hat_count_on_fine_grid() {
        let h = 1.0 / 64.0;
        let b = build_basis(&omega(), omega().padded(h).unwrap(), h, BasisKind::Hat { stride: 1 }).unwrap();
        assert_eq!(b.tilde_grid.nx, 67);
        assert_eq!(b.n, 264);
        let b = build_basis(
            &omega(),
            omega().padded(4.0 * h).unwrap(),
            h,
            BasisKind::Hat { stride: 2 },
        )
        .unwrap();
        assert_eq!(b.n, 144);
    }

    #[test]
    fn rejects_non_containing_domain() {
        let err = build_basis(&omega(), omega(), 0.25, BasisKind::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidBasis(_)));
        let err = build_basis(
            &omega(),
            omega().padded(0.25).unwrap(),
            0.25,
            BasisKind::Hat { stride: 4 },
        );
        assert!(err.is_err());
    }

    #[test]
    fn hats_form_partition_of_unity() {
        for stride in [1, 2, 3] {
            let b = build_basis(
                &omega(),
                omega().padded(0.25).unwrap(),
                0.125,
                BasisKind::Hat { stride },
            )
            .unwrap();
            let len = b.tilde_grid.boundary_len();
            let mut sum = vec![0.0; len];
            for i in 0..b.n {
                for (k, v) in b.boundary_values(i).into_iter().enumerate() {
                    sum[k] += v;
                }
            }
            assert!(sum.iter().all(|s| (s - 1.0).abs() < 1e-14), "stride {stride}");
            assert_eq!(b.boundary_values(0)[0], 1.0);
            assert_eq!(b.boundary_values(0)[stride], 0.0);
        }
    }

    #[test]
    fn indicator_sides_cover_boundary() {
        let b = build_basis(
            &omega(),
            omega().padded(0.25).unwrap(),
            0.25,
            BasisKind::Indicator { arcs: 4 },
        )
        .unwrap();
        assert_eq!(b.n, 4);
        let (_, labels) = b.tilde_grid.boundary_loop();
        for (i, side) in Side::ALL.iter().enumerate() {
            for &(k, v) in &b.support[i] {
                assert_eq!(v, 1.0);
                assert_eq!(labels[k], *side);
            }
        }
    }

    #[test]
    fn single_indicator_gives_constant() {
        let b = build_basis(
            &omega(),
            omega().padded(0.25).unwrap(),
            0.125,
            BasisKind::Indicator { arcs: 1 },
        )
        .unwrap();
        let set = compute_base_solutions(&b, &SolveOptions::with_tol(1e-12)).unwrap();
        assert!(set.fields[0].values.iter().all(|v| (v - 1.0).abs() < 1e-11));

        let grid = build_grid(omega(), 0.125).unwrap();
        let p = boundary_partition(&grid, &[Side::Bottom]).unwrap();
        let sys = assemble_system(&set, &p, DiffOrder::Second).unwrap();
        assert_eq!((sys.m(), sys.n()), (9, 1));
        assert!(sys.a.iter().all(|v| (v - 1.0).abs() < 1e-11));
        assert!(sys.b.iter().all(|v| v.abs() < 1e-11 / 0.125 * 4.0));
    }

    #[test]
    fn base_solutions_obey_max_principle_and_sum_to_one() {
        let tol = 1e-11;
        let b = build_basis(
            &omega(),
            omega().padded(0.125).unwrap(),
            0.0625,
            BasisKind::Hat { stride: 2 },
        )
        .unwrap();
        let set = compute_base_solutions(&b, &SolveOptions::with_tol(tol)).unwrap();
        let n = set.n() as f64;
        let len = b.tilde_grid.len();
        let mut sum = vec![0.0; len];
        for w in &set.fields {
            for (s, v) in sum.iter_mut().zip(&w.values) {
                assert!(*v >= -tol && *v <= 1.0 + tol);
                *s += v;
            }
        }
        assert!(sum.iter().all(|s| (s - 1.0).abs() <= n * tol));
    }

    #[test]
    fn system_shape_and_row_sums() {
        let h = 1.0 / 16.0;
        let b = build_basis(&omega(), omega().padded(h).unwrap(), h, BasisKind::default()).unwrap();
        let tol = 1e-11;
        let set = compute_base_solutions(&b, &SolveOptions::with_tol(tol)).unwrap();
        let grid = build_grid(omega(), h).unwrap();
        let p = boundary_partition(&grid, &[Side::Bottom]).unwrap();
        let sys = assemble_system(&set, &p, DiffOrder::Second).unwrap();
        assert_eq!((sys.m(), sys.n()), (17, 72));
        for row in sys.a.row_iter() {
            assert!((row.sum() - 1.0).abs() <= sys.n() as f64 * tol);
        }
        // Gram matrix is symmetric positive semidefinite.
        let eig = sys.reg.gram.clone().symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-10));
        assert!(sys.reg.diag.iter().all(|&c| c >= 0.0));
    }

    #[test]
    fn assembly_is_linear_in_basis_data() {
        let h = 0.125;
        let tilde = omega().padded(h).unwrap();
        let b = build_basis(&omega(), tilde, h, BasisKind::default()).unwrap();
        let tol = 1e-12;
        let set = compute_base_solutions(&b, &SolveOptions::with_tol(tol)).unwrap();
        // A combined basis function φ_0 + φ_5 must give the sum of the two columns.
        let mut merged = b.clone();
        let mut s = b.support[0].clone();
        s.extend(b.support[5].iter().copied());
        merged.support = vec![s];
        merged.n = 1;
        let merged_set = compute_base_solutions(&merged, &SolveOptions::with_tol(tol)).unwrap();
        let grid = build_grid(omega(), h).unwrap();
        let p = boundary_partition(&grid, &[Side::Bottom, Side::Left]).unwrap();
        let full = assemble_system(&set, &p, DiffOrder::Second).unwrap();
        let one = assemble_system(&merged_set, &p, DiffOrder::Second).unwrap();
        let a_sum = full.a.column(0) + full.a.column(5);
        let b_sum = full.b.column(0) + full.b.column(5);
        assert!((a_sum - one.a.column(0)).amax() < 1e-10);
        assert!((b_sum - one.b.column(0)).amax() < 1e-9);
    }

    #[test]
    fn misaligned_grids_rejected() {
        let b = build_basis(&omega(), omega().padded(0.3).unwrap(), 0.2, BasisKind::default()).unwrap();
        let set = compute_base_solutions(&b, &SolveOptions::with_tol(1e-10)).unwrap();
        let grid = build_grid(omega(), 0.25).unwrap();
        let p = boundary_partition(&grid, &[Side::Bottom]).unwrap();
        assert!(assemble_system(&set, &p, DiffOrder::First).is_err());
    }

    #[test]
    fn norms_of_simple_functions() {
        let grid = build_grid(omega(), 1.0 / 64.0).unwrap();
        let q = boundary_partition(&grid, &[Side::Bottom]).unwrap().gamma_quadrature();
        let c = discrete_norms(&vec![2.5; q.len()], &q).unwrap();
        assert!((c.l2 - 2.5).abs() < 1e-12 && (c.h1 - 2.5).abs() < 1e-12);
        let z = discrete_norms(&vec![0.0; q.len()], &q).unwrap();
        assert_eq!((z.h1, z.l2), (0.0, 0.0));
        let s: Vec<f64> = q
            .points
            .iter()
            .map(|&(x, _)| (std::f64::consts::PI * x).sin())
            .collect();
        let n = discrete_norms(&s, &q).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        let exact = 0.5 + pi2 / 2.0;
        assert!((n.h1 * n.h1 - exact).abs() / exact < 1e-3, "{}", n.h1 * n.h1);
        assert!(discrete_norms(&[1.0], &q).is_err());
    }

    #[test]
    fn h2_norm_of_constant_loop() {
        let v = vec![3.0; 40];
        let h = 0.1;
        // Only the value term survives: sqrt(Σ h 9) = 3 sqrt(4).
        assert!((boundary_h2_norm(&v, h) - 6.0).abs() < 1e-12);
    }
}
