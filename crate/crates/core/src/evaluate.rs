//! Error maps, the `C ε^τ(x)` envelope, rate fits and region statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdm::ScalarField;
use crate::forward::ExactSolution;
use crate::harmonic::IndicateField;

/// Distance from ∂Ω, in grid steps, below which nodes are left out of the envelope fit.
pub const ENVELOPE_BAND: usize = 3;

/// Fractions of the domain width and height at which envelope probes sit.
pub const PROBE_FRACTIONS: [f64; 5] = [0.125, 0.3125, 0.5, 0.6875, 0.875];

/// Default exponent for the degraded noise level `ε^τ₀`.
pub const DEFAULT_TAU0: f64 = 0.49;

/// Node-wise `|u* - u₀|`.
pub fn pointwise_error(u_star: &ScalarField, exact: &ExactSolution) -> Result<ScalarField> {
    let u0 = exact.sample(&u_star.grid);
    let values = u_star
        .values
        .iter()
        .zip(&u0.values)
        .map(|(a, b)| (a - b).abs())
        .collect();
    ScalarField::new(u_star.grid, values)
}

/// Node-wise `|a - b|` of two fields on one grid.
pub fn field_error(a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
    a.check_same_grid(b)?;
    let values = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).collect();
    ScalarField::new(a.grid, values)
}

fn check_aligned(err: &ScalarField, tau: &IndicateField) -> Result<()> {
    err.check_same_grid(&tau.tau)
}

/// Nodes at least `band` steps away from every side of the grid.
pub fn interior_band_mask(field: &ScalarField, band: usize) -> Vec<bool> {
    let g = field.grid;
    (0..g.len())
        .map(|idx| {
            let (i, j) = g.ij(idx);
            i >= band && j >= band && i + band < g.nx && j + band < g.ny
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSettings {
    /// Constant to count violations against; the fitted constant when unset.
    pub c_max: Option<f64>,
    pub tau0: f64,
    /// A-priori bound proxy, reported alongside the fit.
    pub m_used: Option<f64>,
}

impl Default for EnvelopeSettings {
    fn default() -> Self {
        Self {
            c_max: None,
            tau0: DEFAULT_TAU0,
            m_used: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeProbe {
    pub x: f64,
    pub y: f64,
    pub tau: f64,
    pub err: f64,
    /// `C_fit ε^τ`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub eps: f64,
    /// `max |err| / ε^τ` over the fitting nodes.
    pub c_fit: f64,
    /// Same fit against the degraded level `ε^τ₀`.
    pub c_fit_tilde: f64,
    pub tau0: f64,
    pub c_max: f64,
    pub violation_count: usize,
    pub violations: Vec<[f64; 2]>,
    pub probes: Vec<EnvelopeProbe>,
    pub m_used: Option<f64>,
    pub fitted_nodes: usize,
}

/// Fits `|err(x)| ≤ C ε^τ(x)` over nodes at least [`ENVELOPE_BAND`] steps inside Ω.
pub fn envelope_check(
    err: &ScalarField,
    tau: &IndicateField,
    eps: f64,
    settings: &EnvelopeSettings,
) -> Result<EnvelopeReport> {
    check_aligned(err, tau)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange(format!("envelope needs 0 < ε < 1, got {eps}")));
    }
    if !(settings.tau0 > 0.0 && settings.tau0 < 1.0) {
        return Err(Error::OutOfRange(format!(
            "τ₀ must lie in (0, 1), got {}",
            settings.tau0
        )));
    }
    let mask = interior_band_mask(err, ENVELOPE_BAND);
    let eps_tilde = eps.powf(settings.tau0);
    let mut c_fit = 0.0_f64;
    let mut c_fit_tilde = 0.0_f64;
    let mut fitted = 0;
    for (k, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        let t = tau.tau.values[k];
        let e = err.values[k].abs();
        c_fit = c_fit.max(e / eps.powf(t));
        c_fit_tilde = c_fit_tilde.max(e / eps_tilde.powf(t));
        fitted += 1;
    }
    if fitted == 0 {
        return Err(Error::GridTooSmall {
            nx: err.grid.nx,
            ny: err.grid.ny,
            reason: format!("no nodes at least {ENVELOPE_BAND} steps inside the domain"),
        });
    }
    let c_max = settings.c_max.unwrap_or(c_fit);
    let g = err.grid;
    let mut violations = Vec::new();
    for (k, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        let bound = c_max * eps.powf(tau.tau.values[k]);
        if err.values[k].abs() > bound * (1.0 + 1e-12) {
            let (x, y) = g.coords(k);
            violations.push([x, y]);
        }
    }
    let rect = g.rect;
    let mut probes = Vec::with_capacity(25);
    for fy in PROBE_FRACTIONS {
        for fx in PROBE_FRACTIONS {
            let k = g
                .nearest_index(rect.x0 + fx * rect.width(), rect.y0 + fy * rect.height())
                .expect("probe lies inside the grid");
            let (x, y) = g.coords(k);
            let t = tau.tau.values[k];
            probes.push(EnvelopeProbe {
                x,
                y,
                tau: t,
                err: err.values[k].abs(),
                bound: c_fit * eps.powf(t),
            });
        }
    }
    Ok(EnvelopeReport {
        eps,
        c_fit,
        c_fit_tilde,
        tau0: settings.tau0,
        c_max,
        violation_count: violations.len(),
        violations,
        probes,
        m_used: settings.m_used,
        fitted_nodes: fitted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Slope of `log err` against `log ε`.
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares fit of `log err = slope · log ε + intercept`.
pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::OutOfRange(format!(
            "rate fit needs at least 3 noise levels, got {}",
            points.len()
        )));
    }
    if let Some(&(e, r)) = points.iter().find(|&&(e, r)| !(e > 0.0) || !(r > 0.0)) {
        return Err(Error::OutOfRange(format!(
            "rate fit needs positive noise levels and errors, got ({e}, {r})"
        )));
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(0.0, f64::max);
    if hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(Error::OutOfRange(format!(
            "noise levels must span at least two decades, got [{lo}, {hi}]"
        )));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(RateFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Median of a nonempty slice; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub count: usize,
    pub median: f64,
    pub max: f64,
    pub mean: f64,
}

impl RegionStats {
    fn of(values: &[f64]) -> Option<Self> {
        Some(Self {
            count: values.len(),
            median: median(values)?,
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            mean: values.iter().sum::<f64>() / values.len() as f64,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilitySummary {
    pub threshold: f64,
    /// Interior nodes with `τ ≥ threshold`.
    pub inside: Option<RegionStats>,
    pub outside: Option<RegionStats>,
    /// Outside median over inside median.
    pub median_ratio: Option<f64>,
}

/// Error statistics inside and outside `{τ ≥ threshold}` over interior nodes.
pub fn reliability_summary(err: &ScalarField, tau: &IndicateField, threshold: f64) -> Result<ReliabilitySummary> {
    check_aligned(err, tau)?;
    let mask = interior_band_mask(err, 1);
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    for (k, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        if tau.tau.values[k] >= threshold {
            inside.push(err.values[k]);
        } else {
            outside.push(err.values[k]);
        }
    }
    let inside = RegionStats::of(&inside);
    let outside = RegionStats::of(&outside);
    let median_ratio = match (inside, outside) {
        (Some(i), Some(o)) if i.median > 0.0 => Some(o.median / i.median),
        _ => None,
    };
    Ok(ReliabilitySummary {
        threshold,
        inside,
        outside,
        median_ratio,
    })
}

/// Mean of the grid row nearest to height `y`.
pub fn row_mean(field: &ScalarField, y: f64) -> Result<f64> {
    let g = field.grid;
    let idx = g
        .nearest_index(g.rect.x0, y)
        .ok_or_else(|| Error::OutOfRange(format!("y = {y} lies outside the grid")))?;
    let j = g.ij(idx).1;
    Ok((0..g.nx).map(|i| field.at(i, j)).sum::<f64>() / g.nx as f64)
}

/// Mean over nodes whose coordinates satisfy `pred`.
pub fn mean_where(field: &ScalarField, pred: impl Fn(f64, f64) -> bool) -> Option<f64> {
    let g = field.grid;
    let (sum, count) = (0..g.len())
        .filter(|&k| {
            let (x, y) = g.coords(k);
            pred(x, y)
        })
        .fold((0.0, 0usize), |(s, c), k| (s + field.values[k], c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = 0.5 * (start + end - 1) as f64 + 1.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation, ties given their average rank.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            what: "Spearman samples",
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 2 || xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::OutOfRange("Spearman needs at least two finite pairs".into()));
    }
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::OutOfRange("Spearman is undefined for a constant sample".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Interior nodes on the grid column nearest `x` whose τ is closest to each target.
///
/// Duplicates are dropped, so fewer probes than targets may come back on coarse grids.
pub fn probes_along_column(tau: &IndicateField, x: f64, targets: &[f64]) -> Result<Vec<usize>> {
    let g = tau.tau.grid;
    let i = g
        .nearest_index(x, g.rect.y0)
        .map(|k| g.ij(k).0)
        .ok_or_else(|| Error::OutOfRange(format!("x = {x} lies outside the grid")))?;
    if i == 0 || i + 1 == g.nx {
        return Err(Error::OutOfRange(format!("probe column x = {x} lies on the boundary")));
    }
    let mut picked: Vec<usize> = Vec::new();
    for &t in targets {
        let best = (1..g.ny - 1)
            .map(|j| j * g.nx + i)
            .min_by(|&a, &b| (tau.tau.values[a] - t).abs().total_cmp(&(tau.tau.values[b] - t).abs()))
            .ok_or_else(|| Error::GridTooSmall {
                nx: g.nx,
                ny: g.ny,
                reason: "no interior nodes on the probe column".into(),
            })?;
        if !picked.contains(&best) {
            picked.push(best);
        }
    }
    Ok(picked)
}
