use std::path::Path;

use serde_json::{json, Value};

use crate::band::VolatilityBand;
use crate::grid::SpaceTimeGrid;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| fmt_float(v)).collect());
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()
    }
}

pub fn write_json(path: &Path, value: &Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

pub fn grid_json(grid: &SpaceTimeGrid, band: &VolatilityBand) -> Value {
    json!({
        "horizon": grid.horizon(),
        "x_min": grid.x_min(),
        "x_max": grid.x_max(),
        "nodes": grid.nodes(),
        "nt": grid.nt(),
        "dx": grid.dx(),
        "dt": grid.dt(),
        "theta": grid.theta(band),
    })
}
