//! Deterministic CSV assembly.
//!
//! Every emitted file starts with `#`-prefixed metadata lines carrying the
//! subcommand and the full resolved configuration (seed included), then the
//! header row, then data rows in a fixed order. Floats are printed in
//! scientific notation with nine significant digits, so a given
//! configuration and seed produce byte-identical files on every run.

use crate::config::SimConfig;

pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn columns(&self) -> &[&'static str] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn render(&self, subcommand: &str, cfg: &SimConfig) -> String {
        let mut out = String::new();
        out.push_str(&format!("# thzsim {subcommand}\n"));
        for (key, value) in cfg.metadata() {
            out.push_str(&format!("# {key} = {value}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Nine significant digits; the mantissa-exponent form keeps magnitudes from
/// nanowatts to hundreds of gigabits readable with one rule.
pub fn float(x: f64) -> String {
    format!("{x:.8e}")
}

// ── Tests ───────────────────────────────────────────────────────────────────
