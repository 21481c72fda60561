//! CSV and JSON writers for the artifact bundle.
//!
//! Every float goes through [`fmt_f64`] (17 significant digits) so files are
//! byte-identical between runs with the same configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cauchy_core::{CauchyData, LevelContour, ScalarField};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Output directory wrapper that records what was written.
pub struct ArtifactDir {
    root: PathBuf,
    written: Vec<String>,
}

impl ArtifactDir {
    pub fn create(root: impl Into<PathBuf>) -> CliResult<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        Ok(Self {
            root,
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Relative names of the files written so far, in order.
    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<()> {
        let path = self.root.join(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("artifact types serialize");
        text.push('\n');
        self.write_text(name, &text)
    }

    /// `x,y,value`, row-major by j then i.
    pub fn write_grid_csv(&mut self, name: &str, field: &ScalarField) -> CliResult<()> {
        self.write_text(name, &grid_csv(field))
    }

    /// Contour as a JSON array of polylines `[[x, y], ...]`.
    pub fn write_contour_json(&mut self, name: &str, contour: &LevelContour) -> CliResult<()> {
        self.write_json(name, &contour.polylines)
    }

    /// `index,value`.
    pub fn write_vector_csv(&mut self, name: &str, values: &[f64]) -> CliResult<()> {
        let mut s = String::from("index,value\n");
        for (k, v) in values.iter().enumerate() {
            let _ = writeln!(s, "{k},{}", fmt_f64(*v));
        }
        self.write_text(name, &s)
    }

    /// Row-major values with a `{rows, cols}` JSON sidecar named `<stem>.json`.
    pub fn write_matrix_csv(
        &mut self,
        stem: &str,
        rows: usize,
        cols: usize,
        at: impl Fn(usize, usize) -> f64,
    ) -> CliResult<()> {
        let mut s = String::new();
        for r in 0..rows {
            let row: Vec<String> = (0..cols).map(|c| fmt_f64(at(r, c))).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        self.write_text(&format!("{stem}.csv"), &s)?;
        #[derive(Serialize)]
        struct Shape {
            rows: usize,
            cols: usize,
        }
        self.write_json(&format!("{stem}.json"), &Shape { rows, cols })
    }

    /// `x,y,f,g` with a JSON sidecar `<stem>.json`.
    pub fn write_cauchy_data(&mut self, stem: &str, data: &CauchyData) -> CliResult<()> {
        let mut s = String::from("x,y,f,g\n");
        for (k, &(x, y)) in data.points.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                fmt_f64(x),
                fmt_f64(y),
                fmt_f64(data.f[k]),
                fmt_f64(data.g[k])
            );
        }
        self.write_text(&format!("{stem}.csv"), &s)?;
        #[derive(Serialize)]
        struct Sidecar {
            noise_level: f64,
            seed: u64,
            model: cauchy_core::NoiseModel,
            realized_eps: f64,
        }
        self.write_json(
            &format!("{stem}.json"),
            &Sidecar {
                noise_level: data.noise_level,
                seed: data.seed,
                model: data.model,
                realized_eps: data.realized_eps,
            },
        )
    }
}

pub fn grid_csv(field: &ScalarField) -> String {
    let g = field.grid;
    let mut s = String::with_capacity(g.len() * 72 + 12);
    s.push_str("x,y,value\n");
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (x, y) = g.point(i, j);
            let _ = writeln!(s, "{},{},{}", fmt_f64(x), fmt_f64(y), fmt_f64(field.at(i, j)));
        }
    }
    s
}

/// Parses a grid CSV back into `(x, y, value)` triples.
pub fn parse_grid_csv(text: &str) -> Result<Vec<(f64, f64, f64)>, String> {
    let mut lines = text.lines();
    if lines.next() != Some("x,y,value") {
        return Err("missing `x,y,value` header".into());
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(format!("line {}: expected 3 fields", k + 2));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", k + 2));
            Ok((num(parts[0])?, num(parts[1])?, num(parts[2])?))
        })
        .collect()
}
