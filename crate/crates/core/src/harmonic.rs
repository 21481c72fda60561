//! Harmonic measure of the measurement boundary (the indicate function τ),
//! its analytic oracles, and the two-constants bound it controls.
//!
//! τ solves the Dirichlet problem with data 1 on Γ (endpoints included) and 0
//! on the rest of the boundary. A reconstruction from Cauchy data with error
//! ε can then be trusted to order `ε^τ(x)` at `x`, so `{τ ≥ 1/2}` is the region
//! where the local convergence rate is at least one half.

use std::f64::consts::PI;

use crate::contour::{marching_squares, LevelContour};
use crate::error::{Error, Result};
use crate::fdm::{DirichletSolver, ScalarField, SolveOptions};
use crate::grid::{boundary_partition, BoundaryPartition, Grid2D, Side};

/// Default number of node layers around Γ endpoints excluded from oracle comparisons.
pub const DEFAULT_EXCLUSION_BAND: usize = 3;

/// Discrete harmonic measure of Γ on the Ω grid.
#[derive(Debug, Clone)]
pub struct IndicateField {
    pub tau: ScalarField,
    pub partition: BoundaryPartition,
    pub exclusion_band: usize,
}

impl IndicateField {
    pub fn grid(&self) -> &Grid2D {
        &self.tau.grid
    }

    /// Value at the node nearest to `(x, y)`.
    pub fn at_point(&self, x: f64, y: f64) -> Option<f64> {
        self.tau.grid.nearest_index(x, y).map(|idx| self.tau.values[idx])
    }

    /// Endpoints of the connected pieces of Γ. Empty when Γ is closed.
    pub fn gamma_endpoints(&self) -> Vec<(f64, f64)> {
        let quad = self.partition.gamma_quadrature();
        if quad.cyclic {
            return Vec::new();
        }
        quad.arcs
            .iter()
            .flat_map(|arc| [quad.points[arc.start], quad.points[arc.end - 1]])
            .collect()
    }

    /// Interior nodes at Euclidean distance at least `exclusion_band * h`
    /// from every Γ endpoint, where the discontinuous boundary data does not
    /// pollute comparisons against the continuous measure.
    pub fn comparison_mask(&self) -> Vec<bool> {
        let g = self.tau.grid;
        let ends = self.gamma_endpoints();
        let min_dist = self.exclusion_band as f64 * g.h * (1.0 - 1e-9);
        (0..g.len())
            .map(|idx| {
                let (i, j) = g.ij(idx);
                if g.is_boundary(i, j) {
                    return false;
                }
                let (x, y) = g.coords(idx);
                ends.iter()
                    .all(|&(ex, ey)| ((x - ex).powi(2) + (y - ey).powi(2)).sqrt() >= min_dist)
            })
            .collect()
    }
}

/// Solves for the harmonic measure of the partition's Γ.
pub fn compute_indicate(partition: &BoundaryPartition, options: &SolveOptions) -> Result<IndicateField> {
    if partition.covers_whole_boundary() {
        return Err(Error::DegenerateGamma);
    }
    if partition.gamma_count() == 0 {
        return Err(Error::EmptyGamma);
    }
    let data: Vec<f64> = partition
        .gamma_mask
        .iter()
        .map(|&on| if on { 1.0 } else { 0.0 })
        .collect();
    let tau = DirichletSolver::new(&partition.grid, *options)?.solve(&data)?;
    Ok(IndicateField {
        tau,
        partition: partition.clone(),
        exclusion_band: DEFAULT_EXCLUSION_BAND,
    })
}

/// Convenience wrapper building the partition from a side list.
pub fn indicate_for_sides(grid: &Grid2D, sides: &[Side], options: &SolveOptions) -> Result<IndicateField> {
    compute_indicate(&boundary_partition(grid, sides)?, options)
}

/// `sinh(kπ(1 - t)) / sinh(kπ)` without overflow.
fn sinh_ratio(k: f64, t: f64) -> f64 {
    let a = (-k * PI * t).exp();
    let num = 1.0 - (-2.0 * k * PI * (1.0 - t)).exp();
    let den = 1.0 - (-2.0 * k * PI).exp();
    a * num / den
}

/// Harmonic measure of one side of the unit square, with `s` the coordinate
/// along the side and `t` the distance from it.
fn side_series(s: f64, t: f64, terms: usize) -> f64 {
    (0..terms)
        .map(|m| {
            let k = (2 * m + 1) as f64;
            4.0 / (k * PI) * (k * PI * s).sin() * sinh_ratio(k, t)
        })
        .sum()
}

/// Separable-series harmonic measure of a union of sides of the unit square.
///
/// `terms` counts the odd wavenumbers summed per side.
pub fn rectangle_series_tau(x: f64, y: f64, sides: &[Side], terms: usize) -> Result<f64> {
    if !(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0) {
        return Err(Error::OutOfRange(format!(
            "series oracle needs a point in the open unit square, got ({x}, {y})"
        )));
    }
    if terms < 50 {
        return Err(Error::OutOfRange(format!("need at least 50 series terms, got {terms}")));
    }
    if sides.is_empty() {
        return Err(Error::EmptyGamma);
    }
    Ok(crate::grid::normalize_sides(sides)
        .into_iter()
        .map(|side| match side {
            Side::Bottom => side_series(x, y, terms),
            Side::Top => side_series(x, 1.0 - y, terms),
            Side::Left => side_series(y, x, terms),
            Side::Right => side_series(y, 1.0 - x, terms),
        })
        .sum())
}

/// Harmonic measure of the inner circle of the annulus `1 ≤ |z| ≤ R` at radius `r`.
pub fn annulus_tau(r: f64, outer: f64) -> Result<f64> {
    if !(outer > 1.0 && outer.is_finite()) {
        return Err(Error::OutOfRange(format!("outer radius must exceed 1, got {outer}")));
    }
    if !(1.0..=outer).contains(&r) {
        return Err(Error::OutOfRange(format!("radius {r} outside [1, {outer}]")));
    }
    Ok((outer / r).ln() / outer.ln())
}

/// Two-constants bound `M^(1-τ) ε^τ` for a holomorphic function bounded by
/// `ε` on Γ and by `M` everywhere.
pub fn two_constants_bound(eps: f64, bound: f64, tau: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::OutOfRange(format!("ε must be positive, got {eps}")));
    }
    if eps > bound {
        return Err(Error::OutOfRange(format!("need ε ≤ M, got ε = {eps}, M = {bound}")));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::OutOfRange(format!("τ must lie in [0, 1], got {tau}")));
    }
    Ok(bound.powf(1.0 - tau) * eps.powf(tau))
}

/// Nodes with `τ ≥ threshold` and the `threshold` level contour.
pub fn reliable_region(field: &IndicateField, threshold: f64) -> Result<(Vec<bool>, LevelContour)> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::OutOfRange(format!(
            "threshold must lie in (0, 1], got {threshold}"
        )));
    }
    let mask = field.tau.values.iter().map(|&t| t >= threshold).collect();
    Ok((mask, marching_squares(&field.tau, threshold)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Rect};

    fn grid(h: f64) -> Grid2D {
        build_grid(Rect::unit(), h).unwrap()
    }

    fn opts() -> SolveOptions {
        SolveOptions::with_tol(1e-11)
    }

    #[test]
    fn center_values_by_symmetry() {
        let g = grid(1.0 / 64.0);
        let cases: [(&[Side], f64); 3] = [
            (&[Side::Bottom], 0.25),
            (&[Side::Bottom, Side::Top], 0.5),
            (&[Side::Bottom, Side::Top, Side::Left], 0.75),
        ];
        for (sides, expected) in cases {
            let tau = indicate_for_sides(&g, sides, &opts()).unwrap();
            let c = tau.at_point(0.5, 0.5).unwrap();
            assert!((c - expected).abs() < 2e-3, "{sides:?}: {c}");
        }
    }

    #[test]
    fn indicate_invariants() {
        let g = grid(1.0 / 32.0);
        let tau = indicate_for_sides(&g, &[Side::Bottom, Side::Right], &opts()).unwrap();
        let p = &tau.partition;
        for (k, &idx) in p.nodes.iter().enumerate() {
            let expected = if p.gamma_mask[k] { 1.0 } else { 0.0 };
            assert_eq!(tau.tau.values[idx], expected);
        }
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let t = tau.tau.at(i, j);
                assert!(t > 0.0 && t < 1.0);
            }
        }
    }

    #[test]
    fn whole_boundary_rejected() {
        let g = grid(0.25);
        let err = indicate_for_sides(&g, &Side::ALL, &opts()).unwrap_err();
        assert!(matches!(err, Error::DegenerateGamma));
    }

    #[test]
    fn series_symmetry_values() {
        let v = rectangle_series_tau(0.5, 0.5, &[Side::Bottom], 200).unwrap();
        assert!((v - 0.25).abs() < 1e-9);
        let v = rectangle_series_tau(0.5, 0.5, &[Side::Bottom, Side::Top, Side::Left], 200).unwrap();
        assert!((v - 0.75).abs() < 1e-9);
        let all = rectangle_series_tau(0.3, 0.8, &Side::ALL, 400).unwrap();
        assert!((all - 1.0).abs() < 1e-9);
    }

    #[test]
    fn series_self_convergence() {
        let a = rectangle_series_tau(0.5, 0.25, &[Side::Bottom], 400).unwrap();
        let b = rectangle_series_tau(0.5, 0.25, &[Side::Bottom], 800).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(a > 0.25 && a < 1.0);
    }

    #[test]
    fn series_rejects_bad_input() {
        assert!(rectangle_series_tau(0.0, 0.5, &[Side::Bottom], 200).is_err());
        assert!(rectangle_series_tau(0.5, 1.0, &[Side::Bottom], 200).is_err());
        assert!(rectangle_series_tau(0.5, 0.5, &[Side::Bottom], 10).is_err());
    }

    #[test]
    fn fdm_agrees_with_series_away_from_endpoints() {
        let g = grid(1.0 / 64.0);
        let tau = indicate_for_sides(&g, &[Side::Bottom], &opts()).unwrap();
        let v = tau.at_point(0.5, 0.25).unwrap();
        let s = rectangle_series_tau(0.5, 0.25, &[Side::Bottom], 200).unwrap();
        assert!((v - s).abs() < 5e-3, "{v} vs {s}");
    }

    #[test]
    fn annulus_values() {
        assert_eq!(annulus_tau(1.0, 3.0).unwrap(), 1.0);
        assert_eq!(annulus_tau(3.0, 3.0).unwrap(), 0.0);
        assert!((annulus_tau(3.0_f64.sqrt(), 3.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(annulus_tau(0.5, 3.0).is_err());
        assert!(annulus_tau(4.0, 3.0).is_err());
        assert!(annulus_tau(1.0, 1.0).is_err());
    }

    #[test]
    fn two_constants_endpoints() {
        assert!((two_constants_bound(0.3, 0.3, 0.42).unwrap() - 0.3).abs() < 1e-15);
        assert!((two_constants_bound(0.01, 5.0, 1.0).unwrap() - 0.01).abs() < 1e-15);
        assert!((two_constants_bound(0.01, 5.0, 0.0).unwrap() - 5.0).abs() < 1e-15);
        assert!(two_constants_bound(2.0, 1.0, 0.5).is_err());
        assert!(two_constants_bound(0.1, 1.0, 1.5).is_err());
    }

    #[test]
    fn annulus_bound_is_attained() {
        // w(z) = ε zⁿ on 1 ≤ |z| ≤ R: |w| = ε rⁿ and M = ε Rⁿ.
        let (n, outer, r, eps) = (3, 2.0_f64, 1.5_f64, 1e-2_f64);
        let m = eps * outer.powi(n);
        let tau = annulus_tau(r, outer).unwrap();
        let bound = two_constants_bound(eps, m, tau).unwrap();
        let w = eps * r.powi(n);
        assert!(((w - bound) / w).abs() <= 1e-12);
    }

    #[test]
    fn reliable_region_thresholds() {
        let g = grid(1.0 / 32.0);
        let tau = indicate_for_sides(&g, &[Side::Bottom], &opts()).unwrap();
        let (mask, contour) = reliable_region(&tau, 1e-9).unwrap();
        for (k, &idx) in tau.partition.nodes.iter().enumerate() {
            assert_eq!(mask[idx], tau.partition.gamma_mask[k]);
        }
        let boundary = tau.partition.nodes.len();
        assert_eq!(
            mask.iter().filter(|&&m| m).count(),
            g.len() - boundary + tau.partition.gamma_count()
        );
        assert!(!contour.polylines.is_empty() || mask.iter().all(|&m| m));

        let (mask, _) = reliable_region(&tau, 1.0).unwrap();
        assert_eq!(mask.iter().filter(|&&m| m).count(), tau.partition.gamma_count());

        let (mask, contour) = reliable_region(&tau, 0.5).unwrap();
        assert_eq!(contour.polylines.len(), 1);
        assert!(mask[g.index(16, 2)] && !mask[g.index(16, 28)]);
        assert!(reliable_region(&tau, 0.0).is_err());
    }

    #[test]
    fn adding_top_side_grows_region() {
        let g = grid(1.0 / 32.0);
        let one = indicate_for_sides(&g, &[Side::Bottom], &opts()).unwrap();
        let two = indicate_for_sides(&g, &[Side::Bottom, Side::Top], &opts()).unwrap();
        let area = |f: &IndicateField| reliable_region(f, 0.5).unwrap().0.iter().filter(|&&m| m).count();
        assert!(area(&two) > area(&one));
    }
}
