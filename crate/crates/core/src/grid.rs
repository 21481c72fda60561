//! Rectangles, uniform node-centered grids and boundary bookkeeping.
//!
//! Node `(i, j)` of a [`Grid2D`] sits at `(x0 + i h, y0 + j h)` and is stored at
//! flat index `j * nx + i` (row-major by `j`, then `i`). Every field, CSV dump
//! and matrix row in the crate follows this contract.
//!
//! The boundary is enumerated counterclockwise starting at the lower-left
//! corner: bottom (left to right), right (bottom to top), top (right to left),
//! left (top to bottom). Each corner is labelled with the side that *starts*
//! at it, so the edge from loop position `k` to `k + 1` always lies on
//! `side_labels[k]`.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when checking that a spacing divides an extent.
const DIVISIBILITY_TOL: f64 = 1e-9;

/// Axis-aligned rectangle `(x0, x1) x (y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let all_finite = [x0, y0, x1, y1].iter().all(|v| v.is_finite());
        if !all_finite || x0 >= x1 || y0 >= y1 {
            return Err(Error::InvalidRect(format!(
                "need x0 < x1 and y0 < y1, got ({x0}, {y0}) .. ({x1}, {y1})"
            )));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    /// The unit square `(0, 1)^2`.
    pub fn unit() -> Self {
        Self {
            x0: 0.0,
            y0: 0.0,
            x1: 1.0,
            y1: 1.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * (self.width() + self.height())
    }

    /// Rectangle grown by `pad` on every side.
    pub fn padded(&self, pad: f64) -> Result<Self> {
        Rect::new(self.x0 - pad, self.y0 - pad, self.x1 + pad, self.y1 + pad)
    }

    /// True when the closure of `inner` lies in the open rectangle `self`.
    pub fn strictly_contains(&self, inner: &Rect) -> bool {
        self.x0 < inner.x0 && inner.x1 < self.x1 && self.y0 < inner.y0 && inner.y1 < self.y1
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        let tol = 1e-12 * (self.width() + self.height());
        x >= self.x0 - tol && x <= self.x1 + tol && y >= self.y0 - tol && y <= self.y1 + tol
    }
}

/// One side of a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    /// Outward unit normal.
    pub fn outward_normal(self) -> (f64, f64) {
        match self {
            Side::Bottom => (0.0, -1.0),
            Side::Right => (1.0, 0.0),
            Side::Top => (0.0, 1.0),
            Side::Left => (-1.0, 0.0),
        }
    }

    /// Grid step `(di, dj)` pointing into the domain.
    pub fn inward_step(self) -> (isize, isize) {
        match self {
            Side::Bottom => (0, 1),
            Side::Right => (-1, 0),
            Side::Top => (0, -1),
            Side::Left => (1, 0),
        }
    }

    pub fn is_horizontal(self) -> bool {
        matches!(self, Side::Bottom | Side::Top)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Bottom => "bottom",
            Side::Right => "right",
            Side::Top => "top",
            Side::Left => "left",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bottom" => Ok(Side::Bottom),
            "right" => Ok(Side::Right),
            "top" => Ok(Side::Top),
            "left" => Ok(Side::Left),
            other => Err(Error::OutOfRange(format!("unknown side '{other}'"))),
        }
    }
}

/// Sorted, deduplicated copy of a side list.
pub fn normalize_sides(sides: &[Side]) -> Vec<Side> {
    let mut out = sides.to_vec();
    out.sort();
    out.dedup();
    out
}

/// Uniform node-centered grid over a rectangle, boundary nodes included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub rect: Rect,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

fn intervals(extent: f64, h: f64, axis: &'static str) -> Result<usize> {
    let ratio = extent / h;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > DIVISIBILITY_TOL * ratio.max(1.0) {
        return Err(Error::NonDivisibleSpacing { axis, h, extent });
    }
    Ok(rounded as usize)
}

/// Builds the grid of spacing `h` over `rect`.
pub fn build_grid(rect: Rect, h: f64) -> Result<Grid2D> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidSpacing(h));
    }
    let cx = intervals(rect.width(), h, "x")?;
    let cy = intervals(rect.height(), h, "y")?;
    Ok(Grid2D {
        rect,
        h,
        nx: cx + 1,
        ny: cy + 1,
    })
}

impl Grid2D {
    pub fn new(rect: Rect, h: f64) -> Result<Self> {
        build_grid(rect, h)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.rect.x0 + i as f64 * self.h
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.rect.y0 + j as f64 * self.h
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x(i), self.y(j))
    }

    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let (i, j) = self.ij(idx);
        self.point(i, j)
    }

    /// Index of the node closest to `(x, y)`, or `None` outside the closure.
    pub fn nearest_index(&self, x: f64, y: f64) -> Option<usize> {
        if !self.rect.contains_point(x, y) {
            return None;
        }
        let i = ((x - self.rect.x0) / self.h).round().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((y - self.rect.y0) / self.h).round().clamp(0.0, (self.ny - 1) as f64) as usize;
        Some(self.index(i, j))
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    /// Sides of the rectangle the node lies on (two for corners).
    pub fn sides_of(&self, i: usize, j: usize) -> Vec<Side> {
        let mut out = Vec::with_capacity(2);
        if j == 0 {
            out.push(Side::Bottom);
        }
        if i + 1 == self.nx {
            out.push(Side::Right);
        }
        if j + 1 == self.ny {
            out.push(Side::Top);
        }
        if i == 0 {
            out.push(Side::Left);
        }
        out
    }

    /// Boundary node indices in counterclockwise order, with side labels.
    pub fn boundary_loop(&self) -> (Vec<usize>, Vec<Side>) {
        let (nx, ny) = (self.nx, self.ny);
        let cap = 2 * (nx - 1) + 2 * (ny - 1);
        let mut nodes = Vec::with_capacity(cap);
        let mut labels = Vec::with_capacity(cap);
        for i in 0..nx - 1 {
            nodes.push(self.index(i, 0));
            labels.push(Side::Bottom);
        }
        for j in 0..ny - 1 {
            nodes.push(self.index(nx - 1, j));
            labels.push(Side::Right);
        }
        for i in (1..nx).rev() {
            nodes.push(self.index(i, ny - 1));
            labels.push(Side::Top);
        }
        for j in (1..ny).rev() {
            nodes.push(self.index(0, j));
            labels.push(Side::Left);
        }
        (nodes, labels)
    }

    pub fn boundary_len(&self) -> usize {
        2 * (self.nx - 1) + 2 * (self.ny - 1)
    }

    /// Node offset `(di, dj)` of `self` inside `outer`: both grids must share
    /// the spacing and node lattice, and `self` must lie within `outer`.
    pub fn offset_in(&self, outer: &Grid2D) -> Result<(usize, usize)> {
        if (self.h - outer.h).abs() > 1e-12 * self.h {
            return Err(Error::Misaligned(format!(
                "spacings differ ({} vs {})",
                self.h, outer.h
            )));
        }
        let fx = (self.rect.x0 - outer.rect.x0) / self.h;
        let fy = (self.rect.y0 - outer.rect.y0) / self.h;
        let (rx, ry) = (fx.round(), fy.round());
        if (fx - rx).abs() > 1e-7 || (fy - ry).abs() > 1e-7 {
            return Err(Error::Misaligned("node lattices are shifted".into()));
        }
        if rx < 0.0 || ry < 0.0 {
            return Err(Error::Misaligned("inner grid extends past the outer grid".into()));
        }
        let (di, dj) = (rx as usize, ry as usize);
        if di + self.nx > outer.nx || dj + self.ny > outer.ny {
            return Err(Error::Misaligned("inner grid extends past the outer grid".into()));
        }
        Ok((di, dj))
    }
}

/// Boundary nodes of a grid with trapezoid arc-length weights and the
/// measurement subset Γ (a union of whole sides, endpoints included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPartition {
    pub grid: Grid2D,
    /// Grid indices, counterclockwise.
    pub nodes: Vec<usize>,
    /// Arc-length weight of each boundary node over the full boundary.
    pub sigma: Vec<f64>,
    pub gamma_mask: Vec<bool>,
    pub side_labels: Vec<Side>,
    pub gamma_sides: Vec<Side>,
}

/// Builds the boundary partition of `grid` with Γ the union of `gamma_sides`.
pub fn boundary_partition(grid: &Grid2D, gamma_sides: &[Side]) -> Result<BoundaryPartition> {
    if gamma_sides.is_empty() {
        return Err(Error::EmptyGamma);
    }
    let gamma_sides = normalize_sides(gamma_sides);
    let (nodes, side_labels) = grid.boundary_loop();
    let sigma = vec![grid.h; nodes.len()];
    let gamma_mask = nodes
        .iter()
        .map(|&idx| {
            let (i, j) = grid.ij(idx);
            grid.sides_of(i, j).iter().any(|s| gamma_sides.contains(s))
        })
        .collect();
    Ok(BoundaryPartition {
        grid: *grid,
        nodes,
        sigma,
        gamma_mask,
        side_labels,
        gamma_sides,
    })
}

impl BoundaryPartition {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of Γ nodes (`m`).
    pub fn gamma_count(&self) -> usize {
        self.gamma_mask.iter().filter(|&&b| b).count()
    }

    pub fn covers_whole_boundary(&self) -> bool {
        self.gamma_sides.len() == 4
    }

    fn edge_flagged(&self, k: usize) -> bool {
        self.gamma_sides.contains(&self.side_labels[k])
    }

    /// Maximal runs of Γ as loop positions. Each run is a connected piece of
    /// Γ traversed counterclockwise; the second value is true when Γ is the
    /// whole (closed) boundary.
    pub fn gamma_runs(&self) -> (Vec<Vec<usize>>, bool) {
        let len = self.len();
        if self.covers_whole_boundary() {
            return (vec![(0..len).collect()], true);
        }
        let mut runs = Vec::new();
        for start in 0..len {
            let incoming = self.edge_flagged((start + len - 1) % len);
            if incoming || !self.edge_flagged(start) {
                continue;
            }
            let mut run = vec![start];
            let mut k = start;
            while self.edge_flagged(k) {
                k = (k + 1) % len;
                run.push(k);
            }
            runs.push(run);
        }
        (runs, false)
    }

    /// Quadrature and ordering data for functions sampled on Γ.
    pub fn gamma_quadrature(&self) -> GammaQuadrature {
        let (runs, cyclic) = self.gamma_runs();
        let h = self.grid.h;
        let mut positions = Vec::new();
        let mut arcs = Vec::with_capacity(runs.len());
        for run in runs {
            let start = positions.len();
            positions.extend(run);
            arcs.push(start..positions.len());
        }
        let mut sigma = vec![0.0; positions.len()];
        for arc in &arcs {
            for t in arc.clone() {
                let mut w = 0.0;
                if cyclic || t > arc.start {
                    w += 0.5 * h;
                }
                if cyclic || t + 1 < arc.end {
                    w += 0.5 * h;
                }
                sigma[t] = w;
            }
        }
        let nodes = positions.iter().map(|&k| self.nodes[k]).collect::<Vec<_>>();
        let normal_sides = nodes
            .iter()
            .map(|&idx| {
                let (i, j) = self.grid.ij(idx);
                let sides: Vec<Side> = self
                    .grid
                    .sides_of(i, j)
                    .into_iter()
                    .filter(|s| self.gamma_sides.contains(s))
                    .collect();
                // Corner tie-break: a flagged bottom/top side wins.
                sides.iter().copied().find(|s| s.is_horizontal()).unwrap_or(sides[0])
            })
            .collect();
        let points = nodes.iter().map(|&idx| self.grid.coords(idx)).collect();
        GammaQuadrature {
            nodes,
            positions,
            points,
            sigma,
            arcs,
            cyclic,
            spacing: h,
            normal_sides,
        }
    }
}

/// Ordered Γ nodes with the weights and tangential structure needed for
/// discrete `L²(Γ)` and `H¹(Γ)` norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaQuadrature {
    /// Grid indices in measurement order.
    pub nodes: Vec<usize>,
    /// Positions in the boundary loop.
    pub positions: Vec<usize>,
    pub points: Vec<(f64, f64)>,
    /// Arc-length weights restricted to Γ (run endpoints get `h/2`).
    pub sigma: Vec<f64>,
    /// Connected runs of Γ as ranges into the measurement order.
    pub arcs: Vec<Range<usize>>,
    pub cyclic: bool,
    pub spacing: f64,
    /// Side whose outward normal is used at each node.
    pub normal_sides: Vec<Side>,
}

impl GammaQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.sigma.iter().sum()
    }

    /// Tangential first differences along each run: central inside a run,
    /// one-sided at run endpoints, periodic when Γ is closed.
    pub fn tangential_difference(&self, values: &[f64]) -> Vec<f64> {
        let h = self.spacing;
        let mut out = vec![0.0; values.len()];
        for arc in &self.arcs {
            let (s, e) = (arc.start, arc.end);
            let n = e - s;
            if n < 2 {
                continue;
            }
            for t in s..e {
                out[t] = if self.cyclic {
                    let prev = if t == s { e - 1 } else { t - 1 };
                    let next = if t + 1 == e { s } else { t + 1 };
                    (values[next] - values[prev]) / (2.0 * h)
                } else if t == s {
                    (values[t + 1] - values[t]) / h
                } else if t + 1 == e {
                    (values[t] - values[t - 1]) / h
                } else {
                    (values[t + 1] - values[t - 1]) / (2.0 * h)
                };
            }
        }
        out
    }

    /// Matrix form of [`GammaQuadrature::tangential_difference`].
    pub fn difference_matrix(&self) -> nalgebra::DMatrix<f64> {
        let m = self.len();
        let mut d = nalgebra::DMatrix::zeros(m, m);
        let mut unit = vec![0.0; m];
        for col in 0..m {
            unit[col] = 1.0;
            for (row, v) in self.tangential_difference(&unit).into_iter().enumerate() {
                d[(row, col)] = v;
            }
            unit[col] = 0.0;
        }
        d
    }
}
