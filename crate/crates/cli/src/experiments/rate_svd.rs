//! Waterfilled multi-stream rate for a multi-antenna user.
//!
//! Each trial draws a physical channel with departure angles and compares
//! three front ends per subcarrier: the exact channel singular values
//! (`digital`), and the singular values seen through an orthonormalized
//! analog beam span with one beam per path (`ttd` with per-subarray delays,
//! `narrowband` without). One power budget is waterfilled across every
//! (subcarrier, stream) pair, so hardware that cannot hold its beams across
//! the band pays in the spectrum it ends up offering to the allocator.

use nalgebra::DMatrix;

use thzsim_core::array::ElementPattern;
use thzsim_core::channel::{sample_physical_paths, synth_mimo_channel, Medium, UserArray};
use thzsim_core::combining::{narrowband_combiner, subspace_singulars, TtdCombiner};
use thzsim_core::metrics::rate_svd;

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
    let user = UserArray::half_wavelength(cfg.user_antennas, cfg.carrier);
    let s_count = grid.subcarriers();

    // singulars[scheme][trial][s]
    let mut singulars = vec![Vec::with_capacity(cfg.trials); SCHEMES.len()];
    for trial in 0..cfg.trials {
        let mut rng = trial_stream(cfg.seed, trial as u64 + 1);
        let paths =
            sample_physical_paths(cfg.nlos_paths, cfg.distance_m, true, true, &mut rng)?;
        let h = synth_mimo_channel(&geom, &user, &grid, &paths, &medium, pattern.as_ref())?;

        let ttds = paths
            .iter()
            .map(|p| TtdCombiner::new(&geom, part, &p.arrival))
            .collect::<Result<Vec<_>, _>>()?;
        let narrow: Vec<_> = paths
            .iter()
            .map(|p| narrowband_combiner(&geom, &p.arrival))
            .collect();
        let narrow_beams = DMatrix::from_columns(&narrow);

        let mut digital = Vec::with_capacity(s_count);
        let mut ttd = Vec::with_capacity(s_count);
        let mut nb = Vec::with_capacity(s_count);
        for s in 0..s_count {
            let f = grid.frequency(s);
            digital.push(
                h[s].clone()
                    .svd(false, false)
                    .singular_values
                    .iter()
                    .copied()
                    .collect::<Vec<f64>>(),
            );
            let beams: Vec<_> = ttds.iter().map(|c| c.weights(f)).collect();
            ttd.push(subspace_singulars(&DMatrix::from_columns(&beams), &h[s]));
            nb.push(subspace_singulars(&narrow_beams, &h[s]));
        }
        singulars[0].push(digital);
        singulars[1].push(ttd);
        singulars[2].push(nb);
    }

    let mut table = Table::new(&["tx_power_dbm", "scheme", "rate_bps"]);
    for &tx in &cfg.tx_power_dbm {
        let rcfg = rate_config(cfg, &grid, tx);
        for (name, per_trial) in SCHEMES.iter().zip(&singulars) {
            let mut total = 0.0;
            for trial_singulars in per_trial {
                total += rate_svd(trial_singulars, &rcfg)?;
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
