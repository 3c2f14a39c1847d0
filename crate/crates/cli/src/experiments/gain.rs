//! Normalized combining gain across the band for one fixed arrival.
//!
//! Three series over the subcarriers: a per-subcarrier matched combiner
//! (`digital`, identically 1 by Cauchy-Schwarz), the carrier-phase combiner
//! with per-subarray true-time delays (`ttd`), and the plain carrier-phase
//! combiner (`narrowband`), whose gain collapses toward the band edges as the
//! beam squints away from the arrival.

use thzsim_core::combining::{
    matched_combiner, narrowband_combiner, normalized_gain, TtdCombiner,
};

use super::{boresight, geometry, ofdm_grid, partition, RunError};
use crate::config::SimConfig;
use crate::output::{float, Table};

pub fn run(cfg: &SimConfig) -> Result<Table, RunError> {
    let geom = geometry(cfg)?;
    let grid = ofdm_grid(cfg)?;
    let part = partition(cfg, &geom)?;
    let dir = boresight(cfg)?;
    let ttd = TtdCombiner::new(&geom, part, &dir)?;
    let narrow = narrowband_combiner(&geom, &dir);

    let mut table = Table::new(&["scheme", "subcarrier", "frequency_hz", "gain"]);
    let schemes: [(&str, Box<dyn Fn(f64) -> _>); 3] = [
        (
            "digital",
            Box::new(|f| matched_combiner(&geom, &dir, f)),
        ),
        ("ttd", Box::new(|f| ttd.weights(f))),
        ("narrowband", Box::new(|_| narrow.clone())),
    ];
    for (name, weights) in &schemes {
        for s in 0..grid.subcarriers() {
            let f = grid.frequency(s);
            let gain = normalized_gain(&weights(f), &geom.response(&dir, f));
            table.push(vec![
                name.to_string(),
                s.to_string(),
                float(f),
                float(gain),
            ]);
        }
    }
    Ok(table)
}
