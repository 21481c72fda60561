//! The `run`, `tau` and `sweep` pipelines.

use std::path::Path;

use cauchy_core::basis::{assemble_system, build_basis, compute_base_solutions};
use cauchy_core::evaluate::{
    envelope_check, field_error, probes_along_column, rate_fit, reliability_summary, spearman, EnvelopeSettings,
    ReliabilitySummary,
};
use cauchy_core::harmonic::{compute_indicate, indicate_for_sides, reliable_region};
use cauchy_core::tikhonov::{minimize, reconstruct, reconstruct_field, ReconstructionResult};
use cauchy_core::{
    add_noise, boundary_partition, trace_cauchy, BaseSolutionSet, BoundaryPartition, CauchyData, DiscreteSystem,
    Grid2D, IndicateField, ScalarField, Side,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::artifacts::ArtifactDir;
use crate::config::{sides_label, ExperimentConfig};
use crate::error::CliResult;
use crate::svg::heatmap;

/// Everything a reconstruction needs, built once per configuration.
pub struct Prepared {
    pub grid: Grid2D,
    pub partition: BoundaryPartition,
    pub tau: IndicateField,
    pub set: BaseSolutionSet,
    pub sys: DiscreteSystem,
    pub clean: CauchyData,
    pub exact: ScalarField,
}

pub fn prepare(cfg: &ExperimentConfig) -> CliResult<Prepared> {
    let grid = cfg.grid()?;
    let opts = cfg.solve_options();
    let partition = boundary_partition(&grid, &cfg.gamma_sides)?;
    let tau = compute_indicate(&partition, &opts)?;
    let basis = build_basis(&grid.rect, cfg.tilde_rect()?, cfg.h, cfg.basis)?;
    let set = compute_base_solutions(&basis, &opts)?;
    let sys = assemble_system(&set, &partition, cfg.diff_order()?)?;
    let clean = trace_cauchy(&cfg.exact, &partition);
    let exact = cfg.exact.sample(&grid);
    Ok(Prepared {
        grid,
        partition,
        tau,
        set,
        sys,
        clean,
        exact,
    })
}

fn center_tau(tau: &IndicateField) -> Option<f64> {
    let r = tau.grid().rect;
    tau.at_point(0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1))
}

fn reliable_fraction(mask: &[bool]) -> f64 {
    mask.iter().filter(|&&m| m).count() as f64 / mask.len() as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeSummary {
    pub c_fit: f64,
    pub c_fit_tilde: f64,
    pub violation_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionSummary {
    pub alpha_used: f64,
    pub residual_f: f64,
    pub residual_g: f64,
    pub reg_norm: f64,
    pub condition_estimate: f64,
    pub null_dim: usize,
}

impl From<&ReconstructionResult> for ReconstructionSummary {
    fn from(r: &ReconstructionResult) -> Self {
        Self {
            alpha_used: r.alpha_used,
            residual_f: r.residual_f,
            residual_g: r.residual_g,
            reg_norm: r.reg_norm,
            condition_estimate: r.condition_estimate,
            null_dim: r.null_dim,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub n_basis: usize,
    pub m_measurements: usize,
    pub reconstruction: ReconstructionSummary,
    pub realized_eps: f64,
    /// `max |u₀|` on the grid, the a-priori bound proxy.
    pub m_used: f64,
    pub max_error: f64,
    pub max_relative_error: f64,
    pub tau_center: Option<f64>,
    pub reliable_fraction: f64,
    pub reliability: ReliabilitySummary,
    pub envelope: Option<EnvelopeSummary>,
    pub artifacts: Vec<String>,
}

pub struct RunOutcome {
    pub summary: RunSummary,
    pub result: ReconstructionResult,
    pub exact: ScalarField,
    pub error: ScalarField,
    pub tau: IndicateField,
}

/// Full reconstruction with artifacts written to `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> CliResult<RunOutcome> {
    cfg.validate_run()?;
    let cfg = cfg.resolved();
    let p = prepare(&cfg)?;
    let data = add_noise(&p.clean, cfg.noise_level, cfg.noise_seed, cfg.noise_model)?;
    let result = reconstruct(&p.sys, &p.set, &data, &cfg.tikhonov())?;
    let error = field_error(&result.u_star, &p.exact)?;
    let m_used = p.exact.max_abs();
    let (mask, contour) = reliable_region(&p.tau, cfg.threshold)?;
    let reliability = reliability_summary(&error, &p.tau, cfg.threshold)?;
    let envelope = if cfg.noise_level > 0.0 {
        Some(envelope_check(
            &error,
            &p.tau,
            cfg.noise_level,
            &EnvelopeSettings {
                c_max: None,
                tau0: cfg.tau0,
                m_used: Some(m_used),
            },
        )?)
    } else {
        None
    };

    let mut dir = ArtifactDir::create(out)?;
    dir.write_grid_csv("exact.csv", &p.exact)?;
    dir.write_grid_csv("u_star.csv", &result.u_star)?;
    dir.write_grid_csv("error.csv", &error)?;
    dir.write_grid_csv("tau.csv", &p.tau.tau)?;
    dir.write_vector_csv("coefficients.csv", result.coeffs.as_slice())?;
    dir.write_cauchy_data("cauchy_data", &data)?;
    dir.write_contour_json("tau_contour.json", &contour)?;
    if cfg.export_matrices {
        dir.write_matrix_csv("matrix_a", p.sys.m(), p.sys.n(), |r, c| p.sys.a[(r, c)])?;
        dir.write_matrix_csv("matrix_b", p.sys.m(), p.sys.n(), |r, c| p.sys.b[(r, c)])?;
    }
    dir.write_text("exact.svg", &heatmap(&p.exact, "exact solution", &[]))?;
    dir.write_text("reconstruction.svg", &heatmap(&result.u_star, "reconstruction", &[]))?;
    dir.write_text("error.svg", &heatmap(&error, "absolute error", &[&contour]))?;
    dir.write_text("tau.svg", &heatmap(&p.tau.tau, "indicate function", &[&contour]))?;
    dir.write_json("reconstruction.json", &ReconstructionSummary::from(&result))?;
    if let Some(env) = &envelope {
        dir.write_json("envelope.json", env)?;
    }

    let max_error = error.max_abs();
    let summary = RunSummary {
        config: cfg.clone(),
        n_basis: p.sys.n(),
        m_measurements: p.sys.m(),
        reconstruction: ReconstructionSummary::from(&result),
        realized_eps: data.realized_eps,
        m_used,
        max_error,
        max_relative_error: if m_used > 0.0 { max_error / m_used } else { max_error },
        tau_center: center_tau(&p.tau),
        reliable_fraction: reliable_fraction(&mask),
        reliability,
        envelope: envelope.as_ref().map(|e| EnvelopeSummary {
            c_fit: e.c_fit,
            c_fit_tilde: e.c_fit_tilde,
            violation_count: e.violation_count,
        }),
        artifacts: {
            let mut names = dir.written().to_vec();
            names.push("summary.json".into());
            names
        },
    };
    dir.write_json("summary.json", &summary)?;
    Ok(RunOutcome {
        summary,
        result,
        exact: p.exact,
        error,
        tau: p.tau,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TauPanel {
    pub label: String,
    pub sides: Vec<Side>,
    pub tau_center: Option<f64>,
    pub reliable_fraction: f64,
    pub contour_polylines: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TauSummary {
    pub config: ExperimentConfig,
    pub panels: Vec<TauPanel>,
    pub artifacts: Vec<String>,
}

/// Indicate functions for every configured Γ set.
pub fn tau(cfg: &ExperimentConfig, out: &Path) -> CliResult<TauSummary> {
    cfg.validate_tau()?;
    let cfg = cfg.resolved();
    let grid = cfg.grid()?;
    let opts = cfg.solve_options();
    let fields = cfg
        .tau_side_sets
        .par_iter()
        .map(|sides| Ok(indicate_for_sides(&grid, sides, &opts)?))
        .collect::<CliResult<Vec<_>>>()?;

    let mut dir = ArtifactDir::create(out)?;
    let mut panels = Vec::new();
    for (sides, field) in cfg.tau_side_sets.iter().zip(&fields) {
        let label = sides_label(sides);
        let (mask, contour) = reliable_region(field, cfg.threshold)?;
        dir.write_grid_csv(&format!("tau_{label}.csv"), &field.tau)?;
        dir.write_contour_json(&format!("tau_{label}_contour.json"), &contour)?;
        dir.write_text(
            &format!("tau_{label}.svg"),
            &heatmap(&field.tau, &format!("indicate function, Γ = {label}"), &[&contour]),
        )?;
        panels.push(TauPanel {
            label,
            sides: sides.clone(),
            tau_center: center_tau(field),
            reliable_fraction: reliable_fraction(&mask),
            contour_polylines: contour.polylines.len(),
        });
    }
    let mut artifacts = dir.written().to_vec();
    artifacts.push("tau_summary.json".into());
    let summary = TauSummary {
        config: cfg,
        panels,
        artifacts,
    };
    dir.write_json("tau_summary.json", &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeResult {
    pub x: f64,
    pub y: f64,
    pub tau: f64,
    /// Seed-averaged absolute error per noise level.
    pub mean_errors: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitSpread {
    pub eps: f64,
    pub min: f64,
    pub max: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub config: ExperimentConfig,
    pub eps: Vec<f64>,
    pub seeds: Vec<u64>,
    pub probes: Vec<ProbeResult>,
    /// Rank correlation between fitted slope and τ over the probes.
    pub spearman: Option<f64>,
    /// Seed-averaged regularization seminorm per noise level.
    pub reg_norm_mean: Vec<f64>,
    /// Slope of log seminorm against log ε.
    pub reg_norm_slope: f64,
    /// Envelope constant per noise level and seed.
    pub c_fit: Vec<Vec<f64>>,
    pub c_fit_spread: Vec<FitSpread>,
    pub artifacts: Vec<String>,
}

struct SweepCell {
    probe_errors: Vec<f64>,
    reg_norm: f64,
    c_fit: f64,
}

/// Noise-level sweep: rate fits at τ-targeted probes and the seminorm trend.
pub fn sweep(cfg: &ExperimentConfig, out: &Path) -> CliResult<SweepSummary> {
    cfg.validate_sweep()?;
    let cfg = cfg.resolved();
    let p = prepare(&cfg)?;
    let probes = probes_along_column(&p.tau, cfg.probe_x, &cfg.probe_taus)?;
    let tik = cfg.tikhonov();
    let jobs: Vec<(usize, u64)> = (0..cfg.sweep_eps.len())
        .flat_map(|e| cfg.sweep_seeds.iter().map(move |&s| (e, s)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(e, seed)| {
            let eps = cfg.sweep_eps[e];
            let data = add_noise(&p.clean, eps, seed, cfg.noise_model)?;
            let min = minimize(&p.sys, &data, &tik)?;
            let u = reconstruct_field(&min.coeffs, &p.set, &p.grid)?;
            let err = field_error(&u, &p.exact)?;
            let env = envelope_check(&err, &p.tau, eps, &EnvelopeSettings::default())?;
            Ok(SweepCell {
                probe_errors: probes.iter().map(|&k| err.values[k]).collect(),
                reg_norm: p.sys.reg_norm(&min.coeffs, tik.reg_mode),
                c_fit: env.c_fit,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let ns = cfg.sweep_seeds.len();
    let nseeds = ns as f64;
    let mut probe_results = Vec::new();
    for (pi, &k) in probes.iter().enumerate() {
        let mean_errors: Vec<f64> = (0..cfg.sweep_eps.len())
            .map(|e| {
                cells[e * ns..(e + 1) * ns]
                    .iter()
                    .map(|c| c.probe_errors[pi])
                    .sum::<f64>()
                    / nseeds
            })
            .collect();
        let pts: Vec<(f64, f64)> = cfg.sweep_eps.iter().copied().zip(mean_errors.iter().copied()).collect();
        let fit = rate_fit(&pts)?;
        let (x, y) = p.grid.coords(k);
        probe_results.push(ProbeResult {
            x,
            y,
            tau: p.tau.tau.values[k],
            mean_errors,
            slope: fit.slope,
            intercept: fit.intercept,
        });
    }
    let slopes: Vec<f64> = probe_results.iter().map(|r| r.slope).collect();
    let taus: Vec<f64> = probe_results.iter().map(|r| r.tau).collect();
    let rho = spearman(&slopes, &taus).ok();

    let reg_norm_mean: Vec<f64> = (0..cfg.sweep_eps.len())
        .map(|e| cells[e * ns..(e + 1) * ns].iter().map(|c| c.reg_norm).sum::<f64>() / nseeds)
        .collect();
    let reg_pts: Vec<(f64, f64)> = cfg
        .sweep_eps
        .iter()
        .copied()
        .zip(reg_norm_mean.iter().copied())
        .collect();
    let reg_norm_slope = rate_fit(&reg_pts)?.slope;
    let c_fit: Vec<Vec<f64>> = (0..cfg.sweep_eps.len())
        .map(|e| cells[e * ns..(e + 1) * ns].iter().map(|c| c.c_fit).collect())
        .collect();
    let c_fit_spread = cfg
        .sweep_eps
        .iter()
        .zip(&c_fit)
        .map(|(&eps, row)| {
            let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            FitSpread {
                eps,
                min,
                max,
                ratio: if min > 0.0 { max / min } else { f64::INFINITY },
            }
        })
        .collect();

    let mut dir = ArtifactDir::create(out)?;
    let mut table = String::from("x,y,tau,err,slope\n");
    let mut long = String::from("x,y,tau,eps,err\n");
    let f = crate::artifacts::fmt_f64;
    // `err` is the seed-averaged error at the smallest noise level; the full
    // table is in probe_errors.csv.
    let smallest = (0..cfg.sweep_eps.len())
        .min_by(|&a, &b| cfg.sweep_eps[a].total_cmp(&cfg.sweep_eps[b]))
        .expect("validated nonempty");
    for r in &probe_results {
        table.push_str(&format!(
            "{},{},{},{},{}\n",
            f(r.x),
            f(r.y),
            f(r.tau),
            f(r.mean_errors[smallest]),
            f(r.slope)
        ));
        for (e, &eps) in cfg.sweep_eps.iter().enumerate() {
            long.push_str(&format!(
                "{},{},{},{},{}\n",
                f(r.x),
                f(r.y),
                f(r.tau),
                f(eps),
                f(r.mean_errors[e])
            ));
        }
    }
    dir.write_text("probes.csv", &table)?;
    dir.write_text("probe_errors.csv", &long)?;
    let mut artifacts = dir.written().to_vec();
    artifacts.push("sweep.json".into());
    let summary = SweepSummary {
        config: cfg.clone(),
        eps: cfg.sweep_eps.clone(),
        seeds: cfg.sweep_seeds.clone(),
        probes: probe_results,
        spearman: rho,
        reg_norm_mean,
        reg_norm_slope,
        c_fit,
        c_fit_spread,
        artifacts,
    };
    dir.write_json("sweep.json", &summary)?;
    Ok(summary)
}
