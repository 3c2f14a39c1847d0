//! Achievable rate with perfect channel knowledge for three combiner
//! families on the line-of-sight link.
//!
//! Each trial places the direct path at the configured range, drawing the
//! azimuth uniformly while the polar angle stays at `polar_deg`, so the
//! average is over horizontal user positions on a ring around the array.
//! The digital scheme uses the channel itself as the combiner; the `ttd`
//! and `narrowband` schemes point one analog beam at the path, with and
//! without delay augmentation. Per-trial gains are cached so every transmit
//! power in the sweep reuses the same channel realizations.

use rand::Rng;

use thzsim_core::array::{Direction, ElementPattern};
use thzsim_core::channel::{synth_channel, Medium, Path, PathGain};
use thzsim_core::combining::{combining_gain, narrowband_combiner, TtdCombiner};
use thzsim_core::metrics::rate_from_gains;

use super::{geometry, ofdm_grid, partition, rate_config, trial_stream, RunError};
use crate::config::SimConfig;
use crate::output::{float, Table};

const SCHEMES: [&str; 3] = ["digital", "ttd", "narrowband"];

pub fn run(cfg: &SimConfig) -> Result<Table, RunError> {
    let geom = geometry(cfg)?;
    let grid = ofdm_grid(cfg)?;
    let part = partition(cfg, &geom)?;
    let medium = Medium::default();
    let pattern = cfg.element_pattern.then(ElementPattern::default);
    let polar = cfg.polar_deg.to_radians();
    let s_count = grid.subcarriers();

    // gains[scheme][trial][s]
    let mut gains = vec![Vec::with_capacity(cfg.trials); SCHEMES.len()];
    for trial in 0..cfg.trials {
        let mut rng = trial_stream(cfg.seed, trial as u64 + 1);
        let azimuth = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let path = Path {
            gain: PathGain::Los {
                distance: cfg.distance_m,
            },
            delay: rng.gen_range(50e-9..55e-9),
            arrival: Direction::new(azimuth, polar)?,
            departure: None,
        };
        let paths = [path];
        let h = synth_channel(&geom, &grid, &paths, &medium, pattern.as_ref())?;

        let ttd = TtdCombiner::new(&geom, part, &path.arrival)?;
        let narrow = narrowband_combiner(&geom, &path.arrival);

        let mut digital = Vec::with_capacity(s_count);
        let mut delayed = Vec::with_capacity(s_count);
        let mut nb = Vec::with_capacity(s_count);
        for s in 0..s_count {
            let f = grid.frequency(s);
            digital.push(h[s].norm_squared());
            delayed.push(combining_gain(&ttd.weights(f), &h[s]));
            nb.push(combining_gain(&narrow, &h[s]));
        }
        gains[0].push(digital);
        gains[1].push(delayed);
        gains[2].push(nb);
    }

    let mut table = Table::new(&["tx_power_dbm", "scheme", "rate_bps"]);
    for &tx in &cfg.tx_power_dbm {
        let rcfg = rate_config(cfg, &grid, tx);
        for (name, per_trial) in SCHEMES.iter().zip(&gains) {
            let mut total = 0.0;
            for trial_gains in per_trial {
                total += rate_from_gains(trial_gains, &rcfg)?;
            }
            table.push(vec![
                float(tx),
                name.to_string(),
                float(total / cfg.trials as f64),
            ]);
        }
    }
    Ok(table)
}
