//! Tikhonov-regularized fitting of base-solution coefficients to Cauchy data.
//!
//! The discrete cost is
//!
//! ```text
//! w_f ‖A b - f‖²_{H¹(Γ)} + w_g ‖B b - g‖²_{L²(Γ)} + α ‖b‖²_C
//! ```
//!
//! with the σ-weighted discrete norms of [`crate::basis`]. It is minimized as
//! one stacked least-squares problem `min ‖K b - r‖`. The default backend
//! factors `K = QR` and then takes the SVD of the small triangular factor;
//! directions whose singular value is below what the base-solution solves
//! can resolve are discarded. That picks the minimum-norm minimizer when the
//! basis has components that are invisible on Ω (hats on the corners of the
//! enlarged grid never enter a stencil, for instance).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{BaseSolutionSet, DiscreteSystem, RegMode};
use crate::error::{Error, Result};
use crate::fdm::ScalarField;
use crate::forward::CauchyData;
use crate::grid::Grid2D;

/// How the regularization parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum AlphaRule {
    /// `α = c (ε² + h²)`.
    APriori {
        c: f64,
    },
    Fixed {
        alpha: f64,
    },
}

impl Default for AlphaRule {
    fn default() -> Self {
        AlphaRule::APriori { c: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LsqBackend {
    #[default]
    Qr,
    NormalEquations,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TikhonovConfig {
    pub alpha_rule: AlphaRule,
    pub reg_mode: RegMode,
    /// `(w_f, w_g)`.
    pub data_weights: (f64, f64),
    pub backend: LsqBackend,
}

impl Default for TikhonovConfig {
    fn default() -> Self {
        Self {
            alpha_rule: AlphaRule::default(),
            reg_mode: RegMode::default(),
            data_weights: (1.0, 1.0),
            backend: LsqBackend::default(),
        }
    }
}

impl TikhonovConfig {
    pub fn validate(&self) -> Result<()> {
        let (wf, wg) = self.data_weights;
        if !(wf >= 0.0 && wg >= 0.0 && wf.is_finite() && wg.is_finite()) || wf + wg == 0.0 {
            return Err(Error::OutOfRange(format!(
                "data weights must be nonnegative and not both zero, got ({wf}, {wg})"
            )));
        }
        Ok(())
    }
}

/// Resolves the regularization parameter for noise level `eps` on a grid of spacing `h`.
pub fn select_alpha(eps: f64, h: f64, rule: AlphaRule) -> Result<f64> {
    if !(eps >= 0.0) || !(h > 0.0) {
        return Err(Error::OutOfRange(format!(
            "need ε ≥ 0 and h > 0, got ε = {eps}, h = {h}"
        )));
    }
    let alpha = match rule {
        AlphaRule::APriori { c } => c * (eps * eps + h * h),
        AlphaRule::Fixed { alpha } => alpha,
    };
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::OutOfRange(format!(
            "regularization parameter must be positive, got {alpha}"
        )));
    }
    Ok(alpha)
}

/// Singular values below `NULL_MARGIN * solver_tol` relative to the largest
/// are treated as null directions.
pub const NULL_MARGIN: f64 = 1e4;

/// Output of [`minimize`].
#[derive(Debug, Clone)]
pub struct Minimizer {
    pub coeffs: DVector<f64>,
    pub alpha: f64,
    /// Ratio of extreme retained singular values of the stacked matrix.
    pub condition_estimate: f64,
    /// Number of discarded null directions.
    pub null_dim: usize,
}

/// The stacked least-squares problem `(K, r)`.
pub fn stacked_system(
    sys: &DiscreteSystem,
    data: &CauchyData,
    cfg: &TikhonovConfig,
    alpha: f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (m, n) = (sys.m(), sys.n());
    if data.len() != m {
        return Err(Error::LengthMismatch {
            what: "Cauchy data vs measurement nodes",
            expected: m,
            actual: data.len(),
        });
    }
    let (wf, wg) = cfg.data_weights;
    let f = DVector::from_column_slice(&data.f);
    let g = DVector::from_column_slice(&data.g);
    let reg_rows = match cfg.reg_mode {
        RegMode::Gram => sys.reg.factor.nrows(),
        RegMode::Diagonal => n,
    };
    let rows = 3 * m + reg_rows;
    let mut k = DMatrix::zeros(rows, n);
    let mut r = DVector::zeros(rows);

    let wts_f = sys.sigma.map(|s| (wf * s).sqrt());
    let wts_g = sys.sigma.map(|s| (wg * s).sqrt());
    let da = &sys.d1 * &sys.a;
    let df = &sys.d1 * &f;
    for j in 0..m {
        for i in 0..n {
            k[(j, i)] = wts_f[j] * sys.a[(j, i)];
            k[(m + j, i)] = wts_f[j] * da[(j, i)];
            k[(2 * m + j, i)] = wts_g[j] * sys.b[(j, i)];
        }
        r[j] = wts_f[j] * f[j];
        r[m + j] = wts_f[j] * df[j];
        r[2 * m + j] = wts_g[j] * g[j];
    }
    let sa = alpha.sqrt();
    match cfg.reg_mode {
        RegMode::Gram => {
            k.view_mut((3 * m, 0), (reg_rows, n)).copy_from(&(&sys.reg.factor * sa));
        }
        RegMode::Diagonal => {
            for i in 0..n {
                k[(3 * m + i, i)] = sa * sys.reg.diag[i];
            }
        }
    }
    Ok((k, r))
}

/// Pseudo-inverse solve of `min ‖K b - r‖` given an SVD-able square factor.
fn truncated_solve(
    svd: nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    rhs: &DVector<f64>,
    rel_cutoff: f64,
) -> Result<(DVector<f64>, f64, usize)> {
    let sv = &svd.singular_values;
    let smax = sv.max();
    if !(smax > 0.0 && smax.is_finite()) {
        return Err(Error::Numerical {
            message: "stacked matrix is zero or non-finite".into(),
            condition: f64::INFINITY,
        });
    }
    let cutoff = smax * rel_cutoff;
    let u = svd.u.as_ref().expect("U requested");
    let vt = svd.v_t.as_ref().expect("Vᵀ requested");
    let mut coeffs = DVector::zeros(vt.ncols());
    let mut smin = smax;
    let mut null_dim = 0;
    for (k, &s) in sv.iter().enumerate() {
        if s <= cutoff {
            null_dim += 1;
            continue;
        }
        smin = smin.min(s);
        let proj = u.column(k).dot(rhs) / s;
        coeffs.axpy(proj, &vt.row(k).transpose(), 1.0);
    }
    Ok((coeffs, smax / smin, null_dim))
}

/// Minimizes the discrete cost with an explicitly given `α` (may be zero).
pub fn minimize_with_alpha(
    sys: &DiscreteSystem,
    data: &CauchyData,
    cfg: &TikhonovConfig,
    alpha: f64,
) -> Result<Minimizer> {
    cfg.validate()?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::OutOfRange(format!("α must be nonnegative, got {alpha}")));
    }
    let (k, r) = stacked_system(sys, data, cfg, alpha)?;
    let rows = k.nrows();
    // Base solutions carry errors of roughly the solver tolerance, so singular
    // values far below it cannot be told apart from exact zeros.
    let rel_cutoff = (rows as f64 * f64::EPSILON).max(NULL_MARGIN * sys.solver_tol);
    let (coeffs, condition, null_dim) = match cfg.backend {
        LsqBackend::Qr => {
            if rows < k.ncols() {
                return Err(Error::RankDeficient {
                    condition: f64::INFINITY,
                });
            }
            let qr = k.qr();
            let mut qtr = r.clone();
            qr.q_tr_mul(&mut qtr);
            let n = qr.r().ncols();
            let qtr = qtr.rows(0, n).into_owned();
            let svd = qr.r().svd(true, true);
            truncated_solve(svd, &qtr, rel_cutoff)?
        }
        LsqBackend::NormalEquations => {
            let ktk = k.transpose() * &k;
            let ktr = k.transpose() * &r;
            let eig = ktk.symmetric_eigen();
            let lmax = eig.eigenvalues.max();
            // Eigenvalues of KᵀK are only accurate to about ε λ_max.
            let cutoff = lmax * (rel_cutoff * rel_cutoff).max(rows as f64 * f64::EPSILON);
            let mut coeffs = DVector::zeros(k.ncols());
            let mut lmin = lmax;
            let mut null_dim = 0;
            for (idx, &l) in eig.eigenvalues.iter().enumerate() {
                if l <= cutoff {
                    null_dim += 1;
                    continue;
                }
                lmin = lmin.min(l);
                let v = eig.eigenvectors.column(idx);
                coeffs.axpy(v.dot(&ktr) / l, &v, 1.0);
            }
            (coeffs, (lmax / lmin).sqrt(), null_dim)
        }
    };
    if alpha == 0.0 && null_dim > 0 {
        return Err(Error::RankDeficient { condition });
    }
    if coeffs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            message: "non-finite coefficients".into(),
            condition,
        });
    }
    Ok(Minimizer {
        coeffs,
        alpha,
        condition_estimate: condition,
        null_dim,
    })
}

/// Minimizes the discrete cost with `α` resolved from the data's noise level.
pub fn minimize(sys: &DiscreteSystem, data: &CauchyData, cfg: &TikhonovConfig) -> Result<Minimizer> {
    let alpha = select_alpha(data.noise_level, sys.omega_grid.h, cfg.alpha_rule)?;
    minimize_with_alpha(sys, data, cfg, alpha)
}

/// `Σ b_i w_i` restricted to the Ω grid.
pub fn reconstruct_field(coeffs: &DVector<f64>, set: &BaseSolutionSet, omega_grid: &Grid2D) -> Result<ScalarField> {
    if coeffs.len() != set.n() {
        return Err(Error::LengthMismatch {
            what: "coefficients",
            expected: set.n(),
            actual: coeffs.len(),
        });
    }
    let (di, dj) = omega_grid.offset_in(&set.basis.tilde_grid)?;
    let tilde = set.basis.tilde_grid;
    let mut values = vec![0.0; omega_grid.len()];
    for (w, &c) in set.fields.iter().zip(coeffs.iter()) {
        if c == 0.0 {
            continue;
        }
        for j in 0..omega_grid.ny {
            let row = (j + dj) * tilde.nx + di;
            let src = &w.values[row..row + omega_grid.nx];
            let dst = &mut values[j * omega_grid.nx..(j + 1) * omega_grid.nx];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += c * s;
            }
        }
    }
    ScalarField::new(*omega_grid, values)
}

/// Residual norms of a coefficient vector against the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `‖A b - f‖_{H¹(Γ)}`.
    pub f: f64,
    /// `‖B b - g‖_{L²(Γ)}`.
    pub g: f64,
    pub reg_norm: f64,
}

pub fn residuals(sys: &DiscreteSystem, data: &CauchyData, coeffs: &DVector<f64>, mode: RegMode) -> Result<Residuals> {
    let rf = &sys.a * coeffs - DVector::from_column_slice(&data.f);
    let rg = &sys.b * coeffs - DVector::from_column_slice(&data.g);
    let nf = crate::basis::discrete_norms(rf.as_slice(), &sys.quadrature)?;
    let ng = crate::basis::discrete_norms(rg.as_slice(), &sys.quadrature)?;
    Ok(Residuals {
        f: nf.h1,
        g: ng.l2,
        reg_norm: sys.reg_norm(coeffs, mode),
    })
}

/// Full reconstruction output.
#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub coeffs: DVector<f64>,
    pub u_star: ScalarField,
    pub residual_f: f64,
    pub residual_g: f64,
    pub reg_norm: f64,
    pub alpha_used: f64,
    pub condition_estimate: f64,
    pub null_dim: usize,
}

/// Minimizes, reconstructs on Ω and reports residuals.
pub fn reconstruct(
    sys: &DiscreteSystem,
    set: &BaseSolutionSet,
    data: &CauchyData,
    cfg: &TikhonovConfig,
) -> Result<ReconstructionResult> {
    let min = minimize(sys, data, cfg)?;
    let u_star = reconstruct_field(&min.coeffs, set, &sys.omega_grid)?;
    let res = residuals(sys, data, &min.coeffs, cfg.reg_mode)?;
    Ok(ReconstructionResult {
        coeffs: min.coeffs,
        u_star,
        residual_f: res.f,
        residual_g: res.g,
        reg_norm: res.reg_norm,
        alpha_used: min.alpha,
        condition_estimate: min.condition_estimate,
        null_dim: min.null_dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{assemble_system, build_basis, compute_base_solutions, BasisKind, Regularizer};
    use crate::fdm::{DiffOrder, SolveOptions};
    use crate::forward::{trace_cauchy, ExactSolution, NoiseModel};
    use crate::grid::{boundary_partition, build_grid, GammaQuadrature, Rect, Side};

    /// One measurement node, one unknown: `A = 1, B = 0, C = 1, σ = 1`.
    fn scalar_system() -> (DiscreteSystem, CauchyData) {
        let quad = GammaQuadrature {
            nodes: vec![0],
            positions: vec![0],
            points: vec![(0.0, 0.0)],
            sigma: vec![1.0],
            arcs: vec![0..1],
            cyclic: false,
            spacing: 1.0,
            normal_sides: vec![Side::Bottom],
        };
        let grid = build_grid(Rect::unit(), 0.5).unwrap();
        let sys = DiscreteSystem {
            a: DMatrix::from_element(1, 1, 1.0),
            b: DMatrix::zeros(1, 1),
            d1: DMatrix::zeros(1, 1),
            sigma: DVector::from_element(1, 1.0),
            reg: Regularizer {
                factor: DMatrix::from_element(1, 1, 1.0),
                gram: DMatrix::from_element(1, 1, 1.0),
                diag: DVector::from_element(1, 1.0),
            },
            quadrature: quad.clone(),
            omega_grid: grid,
            order: DiffOrder::Second,
            solver_tol: 1e-14,
        };
        let data = CauchyData {
            points: vec![(0.0, 0.0)],
            f: vec![1.0],
            g: vec![0.0],
            noise_level: 0.0,
            seed: 0,
            model: NoiseModel::Uniform,
            realized_eps: 0.0,
            quadrature: quad,
        };
        (sys, data)
    }

    #[test]
    fn alpha_rules() {
        let a = select_alpha(0.01, 1.0 / 64.0, AlphaRule::APriori { c: 1.0 }).unwrap();
        assert!((a - (1e-4 + 1.0 / 4096.0)).abs() < 1e-18);
        assert!((a - 3.4414e-4).abs() < 1e-8);
        assert_eq!(select_alpha(0.5, 0.1, AlphaRule::Fixed { alpha: 1e-6 }).unwrap(), 1e-6);
        let tiny = select_alpha(0.0, 1e-6, AlphaRule::APriori { c: 1.0 }).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-11);
        assert!(select_alpha(0.1, 0.1, AlphaRule::Fixed { alpha: 0.0 }).is_err());
        assert!(select_alpha(0.1, 0.1, AlphaRule::APriori { c: -1.0 }).is_err());
        assert!(select_alpha(-0.1, 0.1, AlphaRule::Fixed { alpha: 1.0 }).is_err());
    }

    #[test]
    fn scalar_ridge_closed_form() {
        let (sys, data) = scalar_system();
        for backend in [LsqBackend::Qr, LsqBackend::NormalEquations] {
            for mode in [RegMode::Gram, RegMode::Diagonal] {
                for alpha in [1e-6, 0.1, 1.0, 7.5] {
                    let cfg = TikhonovConfig {
                        alpha_rule: AlphaRule::Fixed { alpha },
                        reg_mode: mode,
                        backend,
                        ..Default::default()
                    };
                    let b = minimize(&sys, &data, &cfg).unwrap().coeffs[0];
                    assert!((b - 1.0 / (1.0 + alpha)).abs() < 1e-12, "{backend:?} {alpha}: {b}");
                }
            }
        }
    }

    #[test]
    fn zero_data_gives_zero_coefficients() {
        let (sys, mut data) = scalar_system();
        data.f = vec![0.0];
        let cfg = TikhonovConfig {
            alpha_rule: AlphaRule::Fixed { alpha: 0.3 },
            ..Default::default()
        };
        assert!(minimize(&sys, &data, &cfg).unwrap().coeffs[0].abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_weights_and_lengths() {
        let (sys, mut data) = scalar_system();
        let cfg = TikhonovConfig {
            data_weights: (0.0, 0.0),
            alpha_rule: AlphaRule::Fixed { alpha: 1.0 },
            ..Default::default()
        };
        assert!(minimize(&sys, &data, &cfg).is_err());
        data.f.push(1.0);
        data.g.push(1.0);
        data.points.push((0.5, 0.0));
        let cfg = TikhonovConfig {
            alpha_rule: AlphaRule::Fixed { alpha: 1.0 },
            ..Default::default()
        };
        assert!(matches!(minimize(&sys, &data, &cfg), Err(Error::LengthMismatch { .. })));
    }

    fn small_problem(h: f64, pad: f64) -> (DiscreteSystem, BaseSolutionSet, Grid2D, BoundaryPartitionOwned) {
        let omega = Rect::unit();
        let basis = build_basis(&omega, omega.padded(pad).unwrap(), h, BasisKind::default()).unwrap();
        let set = compute_base_solutions(&basis, &SolveOptions::with_tol(1e-12)).unwrap();
        let grid = build_grid(omega, h).unwrap();
        let p = boundary_partition(&grid, &[Side::Bottom]).unwrap();
        let sys = assemble_system(&set, &p, DiffOrder::Second).unwrap();
        (sys, set, grid, p)
    }

    type BoundaryPartitionOwned = crate::grid::BoundaryPartition;

    #[test]
    fn unit_coefficients_reproduce_base_solutions() {
        let (_, set, grid, _) = small_problem(0.125, 0.25);
        let mut e = DVector::zeros(set.n());
        e[3] = 1.0;
        let u = reconstruct_field(&e, &set, &grid).unwrap();
        let w = set.fields[3].restrict(&grid).unwrap();
        assert_eq!(u, w);
        let ones = DVector::from_element(set.n(), 1.0);
        let u = reconstruct_field(&ones, &set, &grid).unwrap();
        assert!(u.values.iter().all(|v| (v - 1.0).abs() < set.n() as f64 * 1e-12));
        assert!(reconstruct_field(&DVector::zeros(2), &set, &grid).is_err());
    }

    #[test]
    fn constant_solution_is_recovered() {
        let (sys, set, grid, p) = small_problem(1.0 / 16.0, 2.0 / 16.0);
        let data = trace_cauchy(&ExactSolution::Constant { c: 1.0 }, &p);
        let cfg = TikhonovConfig {
            alpha_rule: AlphaRule::Fixed { alpha: 1e-8 },
            ..Default::default()
        };
        let r = reconstruct(&sys, &set, &data, &cfg).unwrap();
        // The constant has H²(∂Ω) norm 2 (value term only on a perimeter-4 loop).
        let misfit = r.residual_f.powi(2) + r.residual_g.powi(2);
        assert!(misfit <= 1e-8 * 4.0 + 1e-12, "{misfit}");
        let err = r.u_star.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
        let _ = grid;
    }

    #[test]
    fn residuals_are_recomputable() {
        let (sys, set, _, p) = small_problem(1.0 / 16.0, 1.0 / 16.0);
        let exact = ExactSolution::ExpCos { a: 2.0, shift: 0.2 };
        let data = crate::forward::add_noise(&trace_cauchy(&exact, &p), 0.01, 3, NoiseModel::Uniform).unwrap();
        let cfg = TikhonovConfig::default();
        let r = reconstruct(&sys, &set, &data, &cfg).unwrap();
        let again = residuals(&sys, &data, &r.coeffs, cfg.reg_mode).unwrap();
        assert!((again.f - r.residual_f).abs() < 1e-10);
        assert!((again.g - r.residual_g).abs() < 1e-10);
        // One-layer padding leaves the enlarged-grid corner hats invisible.
        assert!(r.null_dim >= 4, "{}", r.null_dim);
    }

    #[test]
    fn backends_agree() {
        let (sys, _, _, p) = small_problem(0.125, 0.25);
        let exact = ExactSolution::ExpCos { a: 2.0, shift: 0.1 };
        let data = trace_cauchy(&exact, &p);
        let mut cfg = TikhonovConfig {
            alpha_rule: AlphaRule::Fixed { alpha: 1e-3 },
            ..Default::default()
        };
        let qr = minimize(&sys, &data, &cfg).unwrap();
        cfg.backend = LsqBackend::NormalEquations;
        let ne = minimize(&sys, &data, &cfg).unwrap();
        let rq = residuals(&sys, &data, &qr.coeffs, cfg.reg_mode).unwrap();
        let rn = residuals(&sys, &data, &ne.coeffs, cfg.reg_mode).unwrap();
        assert!((rq.f - rn.f).abs() < 1e-6 * (1.0 + rq.f));
        assert!((rq.g - rn.g).abs() < 1e-6 * (1.0 + rq.g));
        assert_eq!(qr.null_dim, ne.null_dim);
        assert!((qr.condition_estimate / ne.condition_estimate - 1.0).abs() < 0.1);
    }

    #[test]
    fn rank_deficiency_without_regularization() {
        let (sys, _, _, p) = small_problem(0.125, 0.125);
        let data = trace_cauchy(&ExactSolution::Constant { c: 1.0 }, &p);
        let err = minimize_with_alpha(&sys, &data, &TikhonovConfig::default(), 0.0).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }));
    }

    #[test]
    fn minimizer_zeroes_the_gradient() {
        let (sys, _, _, p) = small_problem(1.0 / 16.0, 1.0 / 16.0);
        let exact = ExactSolution::ExpCos { a: 2.0, shift: 0.3 };
        let data = crate::forward::add_noise(&trace_cauchy(&exact, &p), 0.02, 11, NoiseModel::Gaussian).unwrap();
        for mode in [RegMode::Gram, RegMode::Diagonal] {
            let cfg = TikhonovConfig {
                reg_mode: mode,
                ..Default::default()
            };
            let min = minimize(&sys, &data, &cfg).unwrap();
            let (k, r) = stacked_system(&sys, &data, &cfg, min.alpha).unwrap();
            let grad = k.transpose() * (&k * &min.coeffs - &r);
            let scale = k.norm() * (k.norm() * min.coeffs.norm() + r.norm());
            assert!(grad.norm() < 1e-10 * scale, "{mode:?}: {} vs {scale}", grad.norm());
        }
    }

    #[test]
    fn misfit_grows_and_penalty_shrinks_with_alpha() {
        let (sys, _, _, p) = small_problem(1.0 / 16.0, 1.0 / 16.0);
        let exact = ExactSolution::ExpCos { a: 2.0, shift: 0.3 };
        let data = crate::forward::add_noise(&trace_cauchy(&exact, &p), 0.05, 5, NoiseModel::Uniform).unwrap();
        let cfg = TikhonovConfig::default();
        let mut last: Option<(f64, f64)> = None;
        for alpha in [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1] {
            let min = minimize_with_alpha(&sys, &data, &cfg, alpha).unwrap();
            let res = residuals(&sys, &data, &min.coeffs, cfg.reg_mode).unwrap();
            let misfit = res.f.powi(2) + res.g.powi(2);
            if let Some((m0, r0)) = last {
                assert!(misfit >= m0 * (1.0 - 1e-9), "α = {alpha}: {misfit} < {m0}");
                assert!(
                    res.reg_norm <= r0 * (1.0 + 1e-9),
                    "α = {alpha}: {} > {r0}",
                    res.reg_norm
                );
            }
            last = Some((misfit, res.reg_norm));
        }
    }
}
