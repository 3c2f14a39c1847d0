//! Rate cost of beamforming on an estimated channel.
//!
//! For each transmit power the pilot and data symbols share the same
//! per-subcarrier budget. Trials draw a sparse channel, estimate it by group
//! pursuit from compressed pilots, and compare maximal-ratio rates: `perfect`
//! beamforms on the true channel, `estimated` beamforms on the estimate with
//! the genie error covariance entering the SINR as self-interference. The
//! training ensemble and sensing matrices are rebuilt per power point because
//! the pilot scaling lives inside them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use thzsim_core::array::ElementPattern;
use thzsim_core::channel::{
    sample_on_grid_paths, sample_statistical_paths, synth_channel, Medium,
};
use thzsim_core::estimation::bounds::support_error_quadratic;
use thzsim_core::estimation::dictionary::{sensing_matrix, WidebandDictionary};
use thzsim_core::estimation::pursuit::{gsomp, reconstruct_channel, PursuitOptions};
use thzsim_core::estimation::training::TrainingEnsemble;
use thzsim_core::metrics::{rate_from_gains, rate_with_estimation_error};

use super::{
    gather_columns, geometry, noise_power, odd_grid, ofdm_grid, per_subcarrier_power,
    rate_config, setup_stream, trial_stream, training_slots, RunError,
};
use crate::config::SimConfig;
use crate::output::{float, Table};

pub fn run(cfg: &SimConfig) -> Result<Table, RunError> {
    let geom = geometry(cfg)?;
    let grid = ofdm_grid(cfg)?;
    let medium = Medium::default();
    let pattern = cfg.element_pattern.then(ElementPattern::default);
    let n_b = geom.antenna_count();
    let gx = odd_grid(cfg.dict_oversampling, cfg.n_rows);
    let gy = odd_grid(cfg.dict_oversampling, cfg.n_cols);
    let dict = WidebandDictionary::new(&geom, &grid, gx, gy)?;
    let p_noise = noise_power(cfg);
    let slots = training_slots(cfg, n_b);
    let s_count = grid.subcarriers();
    let mut setup = setup_stream(cfg.seed);

    let mut table = Table::new(&["tx_power_dbm", "csi", "rate_bps"]);
    for (t_idx, &tx) in cfg.tx_power_dbm.iter().enumerate() {
        let p_pilot = per_subcarrier_power(cfg, tx);
        let ens = TrainingEnsemble::random(n_b, cfg.n_rf, slots, p_pilot, &mut setup)?;
        let phis = (0..s_count)
            .map(|s| sensing_matrix(&ens, &dict, s))
            .collect::<Result<Vec<_>, _>>()?;
        let opts = PursuitOptions {
            tolerance: cfg.epsilon_scale * ens.measurements() as f64 * p_noise,
            max_atoms: cfg.paths,
        };
        let rcfg = rate_config(cfg, &grid, tx);

        let mut rate_perfect = 0.0;
        let mut rate_estimated = 0.0;
        for trial in 0..cfg.trials {
            let counter = (t_idx * cfg.trials + trial) as u64 + 1;
            let mut rng = trial_stream(cfg.seed, counter);
            let paths = if cfg.on_grid {
                sample_on_grid_paths(
                    gx,
                    gy,
                    cfg.paths,
                    cfg.min_separation,
                    cfg.gain_variance,
                    None,
                    &mut rng,
                )?
            } else {
                sample_statistical_paths(cfg.paths, cfg.gain_variance, false, &mut rng)?
            };
            let h = synth_channel(&geom, &grid, &paths, &medium, pattern.as_ref())?;
            let true_gains: Vec<f64> = h.iter().map(|hs| hs.norm_squared()).collect();
            rate_perfect += rate_from_gains(&true_gains, &rcfg)?;

            let ys: Vec<DVector<Complex64>> = h
                .iter()
                .map(|hs| ens.measure(hs, p_noise, &mut rng))
                .collect();
            let out = gsomp(&ys, &phis, &opts)?;
            let h_hat = reconstruct_channel(&dict, &out.support, &out.gains)?;
            let mut energy = Vec::with_capacity(s_count);
            let mut quad = Vec::with_capacity(s_count);
            for s in 0..s_count {
                let e = h_hat[s].norm_squared();
                energy.push(e);
                if out.support.is_empty() || e <= 0.0 {
                    quad.push(0.0);
                    continue;
                }
                let phi_i = gather_columns(&phis[s], &out.support);
                let atoms: DMatrix<Complex64> = dict.atom_matrix(s, &out.support)?;
                quad.push(support_error_quadratic(&phi_i, &atoms, &h_hat[s], p_noise)?);
            }
            rate_estimated += rate_with_estimation_error(&energy, &quad, &rcfg)?;
        }

        let n = cfg.trials as f64;
        for (name, total) in [("perfect", rate_perfect), ("estimated", rate_estimated)] {
            table.push(vec![float(tx), name.to_string(), float(total / n)]);
        }
    }
    Ok(table)
}
