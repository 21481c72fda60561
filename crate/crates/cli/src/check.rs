//! The invariant suite behind `cauchy check`.
//!
//! Each check recomputes a property from scratch on small grids and reports
//! the measured quantity next to its bound.

use std::path::Path;

use cauchy_core::basis::{assemble_system, build_basis, compute_base_solutions, Regularizer};
use cauchy_core::fdm::sample_boundary;
use cauchy_core::harmonic::{annulus_tau, indicate_for_sides, rectangle_series_tau, two_constants_bound};
use cauchy_core::nalgebra::{DMatrix, DVector};
use cauchy_core::tikhonov::{minimize_with_alpha, residuals};
use cauchy_core::{
    add_noise, boundary_partition, build_grid, solve_dirichlet, trace_cauchy, CauchyData, DiffOrder, DiscreteSystem,
    ExactSolution, GammaQuadrature, NoiseModel, Rect, Side, SolveOptions, TikhonovConfig,
};
use serde::Serialize;

use crate::artifacts::ArtifactDir;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn result(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn fdm_order() -> CliResult<CheckResult> {
    let exact = |x: f64, y: f64| x.exp() * y.sin();
    let mut errs = Vec::new();
    for n in [32.0, 64.0] {
        let g = build_grid(Rect::unit(), 1.0 / n)?;
        let u = solve_dirichlet(&g, &sample_boundary(&g, exact), 1e-13)?;
        let e = (0..g.len())
            .map(|k| {
                let (x, y) = g.coords(k);
                (u.values[k] - exact(x, y)).abs()
            })
            .fold(0.0, f64::max);
        errs.push(e);
    }
    let ratio = errs[0] / errs[1];
    Ok(result(
        "fdm_second_order",
        (3.5..=4.5).contains(&ratio),
        format!("err(1/32)/err(1/64) = {ratio:.4}, want [3.5, 4.5]"),
    ))
}

fn tau_symmetry(opts: &SolveOptions) -> CliResult<CheckResult> {
    let g = build_grid(Rect::unit(), 1.0 / 64.0)?;
    let cases: [(&[Side], f64); 3] = [
        (&[Side::Bottom], 0.25),
        (&[Side::Bottom, Side::Top], 0.5),
        (&[Side::Bottom, Side::Top, Side::Left], 0.75),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (sides, want) in cases {
        let t = indicate_for_sides(&g, sides, opts)?
            .at_point(0.5, 0.5)
            .unwrap_or(f64::NAN);
        worst = worst.max((t - want).abs());
        parts.push(format!("{t:.5}"));
    }
    Ok(result(
        "tau_center_symmetry",
        worst <= 2e-3,
        format!(
            "τ(center) = [{}] vs [0.25, 0.5, 0.75], max deviation {worst:.2e} (≤ 2e-3)",
            parts.join(", ")
        ),
    ))
}

fn tau_series(opts: &SolveOptions) -> CliResult<CheckResult> {
    let g = build_grid(Rect::unit(), 1.0 / 64.0)?;
    let sides = [Side::Bottom, Side::Left];
    let t = indicate_for_sides(&g, &sides, opts)?;
    let mask = t.comparison_mask();
    let mut worst: f64 = 0.0;
    for k in (0..g.len()).filter(|&k| mask[k]) {
        let (x, y) = g.coords(k);
        worst = worst.max((t.tau.values[k] - rectangle_series_tau(x, y, &sides, 200)?).abs());
    }
    Ok(result(
        "tau_series_agreement",
        worst <= 5e-3,
        format!("max |τ_FDM - τ_series| = {worst:.3e} (≤ 5e-3) for Γ = bottom+left"),
    ))
}

fn annulus() -> CliResult<CheckResult> {
    let (n, big_r, r, eps) = (3, 2.0_f64, 1.5_f64, 1e-2_f64);
    let m = eps * big_r.powi(n);
    let w = eps * r.powi(n);
    let bound = two_constants_bound(eps, m, annulus_tau(r, big_r)?)?;
    let rel = (w - bound).abs() / w;
    Ok(result(
        "two_constants_sharpness",
        rel <= 1e-12,
        format!("|w| = {w:.15e}, bound = {bound:.15e}, relative gap {rel:.2e}"),
    ))
}

fn scalar_system(f: f64) -> CliResult<(DiscreteSystem, CauchyData)> {
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
        omega_grid: build_grid(Rect::unit(), 0.5)?,
        order: DiffOrder::Second,
        solver_tol: 1e-14,
    };
    let data = CauchyData {
        points: vec![(0.0, 0.0)],
        f: vec![f],
        g: vec![0.0],
        noise_level: 0.0,
        seed: 0,
        model: NoiseModel::Uniform,
        realized_eps: 0.0,
        quadrature: quad,
    };
    Ok((sys, data))
}

/// One-unknown system through the full minimizer: `b = 1/(1+α)` for unit
/// data and `b = 0` for zero data.
pub fn ridge_closed_form() -> CliResult<CheckResult> {
    let cfg = TikhonovConfig::default();
    let mut worst: f64 = 0.0;
    for alpha in [1e-6, 0.1, 1.0, 10.0] {
        let (sys, data) = scalar_system(1.0)?;
        let b = minimize_with_alpha(&sys, &data, &cfg, alpha)?.coeffs[0];
        worst = worst.max((b - 1.0 / (1.0 + alpha)).abs());
        let (sys, data) = scalar_system(0.0)?;
        worst = worst.max(minimize_with_alpha(&sys, &data, &cfg, alpha)?.coeffs[0].abs());
    }
    Ok(result(
        "ridge_closed_form",
        worst <= 1e-12,
        format!("max |b - 1/(1+α)| and |b(0 data)| = {worst:.2e} (≤ 1e-12)"),
    ))
}

fn tau_additivity(opts: &SolveOptions) -> CliResult<CheckResult> {
    let g = build_grid(Rect::unit(), 1.0 / 32.0)?;
    let a = indicate_for_sides(&g, &[Side::Bottom], opts)?;
    let b = indicate_for_sides(&g, &[Side::Left, Side::Top], opts)?;
    let both = indicate_for_sides(&g, &[Side::Bottom, Side::Left, Side::Top], opts)?;
    let mut worst: f64 = 0.0;
    let mut range_ok = true;
    for k in 0..g.len() {
        let (i, j) = g.ij(k);
        range_ok &= (-1e-12..=1.0 + 1e-12).contains(&both.tau.values[k]);
        if g.sides_of(i, j).len() == 2 {
            continue;
        }
        worst = worst.max((both.tau.values[k] - a.tau.values[k] - b.tau.values[k]).abs());
    }
    Ok(result(
        "tau_additivity_and_range",
        worst <= 1e-8 && range_ok,
        format!("max |τ_(A∪B) - τ_A - τ_B| = {worst:.2e}, values in [0, 1]: {range_ok}"),
    ))
}

fn noise_determinism() -> CliResult<CheckResult> {
    let g = build_grid(Rect::unit(), 1.0 / 16.0)?;
    let p = boundary_partition(&g, &[Side::Bottom])?;
    let clean = trace_cauchy(&ExactSolution::ExpCos { a: 4.0, shift: 0.2 }, &p);
    let a = add_noise(&clean, 0.05, 7, NoiseModel::Gaussian)?;
    let b = add_noise(&clean, 0.05, 7, NoiseModel::Gaussian)?;
    let c = add_noise(&clean, 0.05, 8, NoiseModel::Gaussian)?;
    let same = a.f == b.f && a.g == b.g;
    let differs = a.f != c.f;
    Ok(result(
        "noise_determinism",
        same && differs,
        format!("same seed identical: {same}, different seed differs: {differs}"),
    ))
}

fn base_solutions_and_monotone_alpha(opts: &SolveOptions) -> CliResult<Vec<CheckResult>> {
    let h = 1.0 / 16.0;
    let omega = Rect::unit();
    let basis = build_basis(&omega, omega.padded(h)?, h, Default::default())?;
    let set = compute_base_solutions(&basis, opts)?;
    let n = set.n() as f64;
    let mut worst: f64 = 0.0;
    for k in 0..set.fields[0].values.len() {
        let s: f64 = set.fields.iter().map(|w| w.values[k]).sum();
        worst = worst.max((s - 1.0).abs());
    }
    let unity = result(
        "base_partition_of_unity",
        worst <= n * opts.tol * 10.0,
        format!(
            "max |Σ w_i - 1| = {worst:.2e} (≤ 10 n tol = {:.2e})",
            n * opts.tol * 10.0
        ),
    );

    let g = build_grid(omega, h)?;
    let p = boundary_partition(&g, &[Side::Bottom])?;
    let sys = assemble_system(&set, &p, DiffOrder::Second)?;
    let data = add_noise(
        &trace_cauchy(&ExactSolution::ExpCos { a: 2.0, shift: 0.3 }, &p),
        0.05,
        5,
        NoiseModel::Uniform,
    )?;
    let cfg = TikhonovConfig::default();
    let mut ok = true;
    let mut last: Option<(f64, f64)> = None;
    for alpha in [1e-6, 1e-4, 1e-2, 1.0] {
        let min = minimize_with_alpha(&sys, &data, &cfg, alpha)?;
        let r = residuals(&sys, &data, &min.coeffs, cfg.reg_mode)?;
        let misfit = r.f * r.f + r.g * r.g;
        if let Some((m0, r0)) = last {
            ok &= misfit >= m0 * (1.0 - 1e-9) && r.reg_norm <= r0 * (1.0 + 1e-9);
        }
        last = Some((misfit, r.reg_norm));
    }
    let monotone = result(
        "monotone_alpha",
        ok,
        "misfit nondecreasing and seminorm nonincreasing over α ∈ {1e-6, 1e-4, 1e-2, 1}".into(),
    );
    Ok(vec![unity, monotone])
}

/// Runs every check, writes `check.json`, and fails if any check failed.
pub fn check(cfg: &ExperimentConfig, out: &Path) -> CliResult<Vec<CheckResult>> {
    if !(cfg.solver_tol > 0.0 && cfg.solver_tol < 1.0) {
        return Err(CliError::Validation(format!(
            "solver_tol must lie in (0, 1), got {}",
            cfg.solver_tol
        )));
    }
    let opts = SolveOptions {
        tol: cfg.solver_tol.min(1e-11),
        ..cfg.solve_options()
    };
    let mut results = vec![
        fdm_order()?,
        tau_symmetry(&opts)?,
        tau_series(&opts)?,
        annulus()?,
        ridge_closed_form()?,
        tau_additivity(&opts)?,
        noise_determinism()?,
    ];
    results.extend(base_solutions_and_monotone_alpha(&opts)?);
    let mut dir = ArtifactDir::create(out)?;
    dir.write_json("check.json", &results)?;
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        for r in results.iter().filter(|r| !r.passed) {
            eprintln!("FAIL {}: {}", r.name, r.detail);
        }
        return Err(CliError::ChecksFailed(failed));
    }
    Ok(results)
}
