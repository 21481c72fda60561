//! Marching squares over a [`ScalarField`].
//!
//! Crossings are placed by linear interpolation along cell edges, so every
//! vertex interpolates exactly to the requested level. Saddle cells are
//! resolved with the cell-average rule: the mean of the four corners decides
//! whether the high corners connect through the cell center.

use serde::{Deserialize, Serialize};

use crate::fdm::ScalarField;

/// Level set of a field as a list of polylines in physical coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelContour {
    pub level: f64,
    pub polylines: Vec<Vec<[f64; 2]>>,
}

impl LevelContour {
    pub fn vertex_count(&self) -> usize {
        self.polylines.iter().map(Vec::len).sum()
    }
}

struct EdgeIndex {
    nx: usize,
    ny: usize,
}

impl EdgeIndex {
    fn horizontal(&self, i: usize, j: usize) -> usize {
        j * (self.nx - 1) + i
    }

    fn vertical(&self, i: usize, j: usize) -> usize {
        (self.nx - 1) * self.ny + j * self.nx + i
    }

    fn count(&self) -> usize {
        (self.nx - 1) * self.ny + self.nx * (self.ny - 1)
    }
}

/// Extracts the `level` contour of `field`.
pub fn marching_squares(field: &ScalarField, level: f64) -> LevelContour {
    let g = &field.grid;
    if g.nx < 2 || g.ny < 2 {
        return LevelContour {
            level,
            polylines: Vec::new(),
        };
    }
    let edges = EdgeIndex { nx: g.nx, ny: g.ny };
    let high = |i: usize, j: usize| field.at(i, j) >= level;

    let crossing = |(i0, j0): (usize, usize), (i1, j1): (usize, usize)| -> [f64; 2] {
        let (a, b) = (field.at(i0, j0), field.at(i1, j1));
        let t = if b == a {
            0.5
        } else {
            ((level - a) / (b - a)).clamp(0.0, 1.0)
        };
        let (x0, y0) = g.point(i0, j0);
        let (x1, y1) = g.point(i1, j1);
        [x0 + t * (x1 - x0), y0 + t * (y1 - y0)]
    };

    let mut points: Vec<Option<[f64; 2]>> = vec![None; edges.count()];
    let mut segments: Vec<(usize, usize)> = Vec::new();

    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            let code = (high(i, j) as u8)
                | (high(i + 1, j) as u8) << 1
                | (high(i + 1, j + 1) as u8) << 2
                | (high(i, j + 1) as u8) << 3;
            if code == 0 || code == 15 {
                continue;
            }
            let bottom = edges.horizontal(i, j);
            let top = edges.horizontal(i, j + 1);
            let left = edges.vertical(i, j);
            let right = edges.vertical(i + 1, j);
            let mut touch = |e: usize, a: (usize, usize), b: (usize, usize)| {
                if points[e].is_none() {
                    points[e] = Some(crossing(a, b));
                }
                e
            };
            let b = touch(bottom, (i, j), (i + 1, j));
            let t = touch(top, (i, j + 1), (i + 1, j + 1));
            let l = touch(left, (i, j), (i, j + 1));
            let r = touch(right, (i + 1, j), (i + 1, j + 1));
            let center_high =
                0.25 * (field.at(i, j) + field.at(i + 1, j) + field.at(i + 1, j + 1) + field.at(i, j + 1)) >= level;
            match code {
                1 | 14 => segments.push((l, b)),
                2 | 13 => segments.push((b, r)),
                3 | 12 => segments.push((l, r)),
                4 | 11 => segments.push((r, t)),
                6 | 9 => segments.push((b, t)),
                7 | 8 => segments.push((l, t)),
                // Corners (i,j) and (i+1,j+1) high.
                5 => {
                    if center_high {
                        segments.push((b, r));
                        segments.push((l, t));
                    } else {
                        segments.push((l, b));
                        segments.push((r, t));
                    }
                }
                // Corners (i+1,j) and (i,j+1) high.
                10 => {
                    if center_high {
                        segments.push((l, b));
                        segments.push((r, t));
                    } else {
                        segments.push((b, r));
                        segments.push((l, t));
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); edges.count()];
    for (s, &(a, b)) in segments.iter().enumerate() {
        adjacency[a].push(s);
        adjacency[b].push(s);
    }

    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();
    let walk = |start_edge: usize, used: &mut Vec<bool>| -> Option<Vec<[f64; 2]>> {
        let first = *adjacency[start_edge].iter().find(|&&s| !used[s])?;
        let mut line = vec![points[start_edge].expect("crossed edge has a point")];
        let mut edge = start_edge;
        let mut seg = first;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            edge = if a == edge { b } else { a };
            line.push(points[edge].expect("crossed edge has a point"));
            match adjacency[edge].iter().find(|&&s| !used[s]) {
                Some(&next) => seg = next,
                None => break,
            }
        }
        Some(line)
    };
    // Open polylines start at edges with a single incident segment.
    for e in 0..edges.count() {
        if adjacency[e].len() == 1 && !used[adjacency[e][0]] {
            if let Some(line) = walk(e, &mut used) {
                polylines.push(line);
            }
        }
    }
    for e in 0..edges.count() {
        while adjacency[e].iter().any(|&s| !used[s]) {
            if let Some(line) = walk(e, &mut used) {
                polylines.push(line);
            }
        }
    }
    LevelContour { level, polylines }
}
