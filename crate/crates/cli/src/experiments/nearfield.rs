//! Plane-wave combiner robustness against spherical wavefronts.
//!
//! For each distance, given as a multiple of the Fraunhofer distance, a
//! line-of-sight channel is synthesized twice: under the plane-wave model the
//! combiner was designed for, and with exact per-element ranges. The same
//! delay-augmented combiner serves both, so the rate gap isolates the
//! wavefront-curvature mismatch.

use thzsim_core::array::ElementPattern;
use thzsim_core::channel::{
    synth_channel, synth_channel_spherical, Medium, Path, PathGain,
};
use thzsim_core::combining::{combining_gain, TtdCombiner};
use thzsim_core::metrics::rate_from_gains;
use thzsim_core::SPEED_OF_LIGHT;

use super::{
    geometry, ofdm_grid, partition, random_direction, rate_config, trial_stream, RunError,
};
use crate::config::SimConfig;
use crate::output::{float, Table};

pub fn run(cfg: &SimConfig) -> Result<Table, RunError> {
    let geom = geometry(cfg)?;
    let grid = ofdm_grid(cfg)?;
    let part = partition(cfg, &geom)?;
    let medium = Medium::default();
    let pattern = cfg.element_pattern.then(ElementPattern::default);
    let rcfg = rate_config(cfg, &grid, cfg.tx_power_dbm[0]);
    let fraunhofer = geom.fraunhofer_distance();

    let mut table = Table::new(&["distance_factor", "distance_m", "model", "rate_bps"]);
    for (d_idx, &factor) in cfg.distances_df.iter().enumerate() {
        let distance = factor * fraunhofer;
        let mut rate_plane = 0.0;
        let mut rate_sph = 0.0;
        for trial in 0..cfg.trials {
            let counter = (d_idx * cfg.trials + trial) as u64 + 1;
            let mut rng = trial_stream(cfg.seed, counter);
            let path = Path {
                gain: PathGain::Los { distance },
                delay: distance / SPEED_OF_LIGHT,
                arrival: random_direction(&mut rng),
                departure: None,
            };
            let paths = [path];
            let plane = synth_channel(&geom, &grid, &paths, &medium, pattern.as_ref())?;
            let sph =
                synth_channel_spherical(&geom, &grid, &paths, &medium, pattern.as_ref())?;
            let ttd = TtdCombiner::new(&geom, part, &path.arrival)?;
            let mut gains_plane = Vec::with_capacity(grid.subcarriers());
            let mut gains_sph = Vec::with_capacity(grid.subcarriers());
            for s in 0..grid.subcarriers() {
                let w = ttd.weights(grid.frequency(s));
                gains_plane.push(combining_gain(&w, &plane[s]));
                gains_sph.push(combining_gain(&w, &sph[s]));
            }
            rate_plane += rate_from_gains(&gains_plane, &rcfg)?;
            rate_sph += rate_from_gains(&gains_sph, &rcfg)?;
        }
        let n = cfg.trials as f64;
        for (model, total) in [("plane", rate_plane), ("spherical", rate_sph)] {
            table.push(vec![
                float(factor),
                float(distance),
                model.to_string(),
                float(total / n),
            ]);
        }
    }
    Ok(table)
}
