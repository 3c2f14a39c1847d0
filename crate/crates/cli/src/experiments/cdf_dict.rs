//! Dictionary quantization quality as empirical CDFs.
//!
//! Spatial frequencies are drawn uniformly on the visible disk, snapped to
//! the nearest dictionary column, and scored two ways: the normalized gain
//! of the snapped atom against the true array response at the band-center
//! subcarrier, and the per-axis quantization error `|w - w_hat|`, which the
//! grid bounds by half a cell, `1/(2 G_axis)`.

use rand::Rng;

use thzsim_core::array::SpatialFrequency;
use thzsim_core::combining::normalized_gain;
use thzsim_core::estimation::dictionary::WidebandDictionary;
use thzsim_core::metrics::empirical_cdf;

use super::{geometry, odd_grid, ofdm_grid, trial_stream, RunError};
use crate::config::SimConfig;
use crate::output::{float, Table};

pub fn run(cfg: &SimConfig) -> Result<Table, RunError> {
    let geom = geometry(cfg)?;
    let grid = ofdm_grid(cfg)?;
    let dict = WidebandDictionary::new(
        &geom,
        &grid,
        odd_grid(cfg.dict_oversampling, cfg.n_rows),
        odd_grid(cfg.dict_oversampling, cfg.n_cols),
    )?;
    let s_mid = grid.subcarriers() / 2;
    let f = grid.frequency(s_mid);
    let scale = 1.0 / (geom.antenna_count() as f64).sqrt();

    let mut gains = Vec::with_capacity(cfg.trials);
    let mut err_x = Vec::with_capacity(cfg.trials);
    let mut err_y = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let mut rng = trial_stream(cfg.seed, trial as u64 + 1);
        let (wx, wy) = loop {
            let wx = rng.gen_range(-0.5..0.5);
            let wy = rng.gen_range(-0.5..0.5);
            if wx * wx + wy * wy < 0.25 {
                break (wx, wy);
            }
        };
        let dir = SpatialFrequency::new(wx, wy)?.direction();
        let col = dict.nearest_column(wx, wy);
        let beam = dict.column(s_mid, col)? * num_complex::Complex64::new(scale, 0.0);
        gains.push(normalized_gain(&beam, &geom.response(&dir, f)));
        let (qx, qy) = dict.spatial_frequency(col);
        err_x.push((wx - qx).abs());
        err_y.push((wy - qy).abs());
    }

    let mut table = Table::new(&["metric", "value", "probability"]);
    for (name, samples) in [
        ("gain", &gains),
        ("omega_error_x", &err_x),
        ("omega_error_y", &err_y),
    ] {
        for (value, p) in empirical_cdf(samples) {
            table.push(vec![name.to_string(), float(value), float(p)]);
        }
    }
    Ok(table)
}
