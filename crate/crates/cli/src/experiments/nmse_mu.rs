//! Joint channel-matrix estimation NMSE for a multi-antenna user.
//!
//! The user sweeps whitened pilot directions while the array sweeps its
//! training slots; the resulting sensing operator is the Kronecker product
//! of a small user factor and the base-station factor, and recovery runs the
//! factored group pursuit over all subcarriers. One series (`gmmv`) per SNR
//! point.

use nalgebra::DVector;
use num_complex::Complex64;

use thzsim_core::array::ArrayGeometry;
use thzsim_core::channel::{
    sample_on_grid_paths, sample_statistical_paths, synth_mimo_channel, Medium, UserArray,
};
use thzsim_core::estimation::dictionary::{sensing_matrix, WidebandDictionary};
use thzsim_core::estimation::pursuit::{
    gmmv, reconstruct_mimo_channel, FactoredSensing, PursuitOptions,
};
use thzsim_core::estimation::training::{measure_mimo, TrainingEnsemble, UserPilots};
use thzsim_core::metrics::{db_to_linear, gain_variance_for_snr, linear_to_db, nmse_mats};

use super::{
    geometry, noise_power, odd_grid, ofdm_grid, per_subcarrier_power, setup_stream,
    trial_stream, training_slots, RunError,
};
use crate::config::SimConfig;
use crate::output::{float, Table};

pub fn run(cfg: &SimConfig) -> Result<Table, RunError> {
    let geom = geometry(cfg)?;
    let grid = ofdm_grid(cfg)?;
    let medium = Medium::default();
    let n_b = geom.antenna_count();
    let s_count = grid.subcarriers();
    let gx = odd_grid(cfg.dict_oversampling, cfg.n_rows);
    let gy = odd_grid(cfg.dict_oversampling, cfg.n_cols);
    let gu = odd_grid(cfg.dict_oversampling, cfg.user_antennas);
    let pilots_count = if cfg.user_pilots == 0 {
        cfg.user_antennas
    } else {
        cfg.user_pilots
    };
    let p_pilot = per_subcarrier_power(cfg, cfg.tx_power_dbm[0]);
    let p_noise = noise_power(cfg);

    let wide = WidebandDictionary::new(&geom, &grid, gx, gy)?;
    // A single-row geometry turns the UPA dictionary into the user's ULA
    // dictionary: the x factor degenerates to the scalar 1.
    let user_geom = ArrayGeometry::half_wavelength(1, cfg.user_antennas, cfg.carrier)?;
    let user_dict = WidebandDictionary::new(&user_geom, &grid, 1, gu)?;
    let user_arr = UserArray::half_wavelength(cfg.user_antennas, cfg.carrier);

    let mut setup = setup_stream(cfg.seed);
    let ens = TrainingEnsemble::random(n_b, cfg.n_rf, training_slots(cfg, n_b), p_pilot, &mut setup)?;
    let pilots = UserPilots::random(cfg.user_antennas, pilots_count, &mut setup)?;
    let all_user: Vec<usize> = (0..user_dict.columns()).collect();
    let sensing: Vec<FactoredSensing> = (0..s_count)
        .map(|s| -> Result<_, RunError> {
            let au = user_dict.atom_matrix(s, &all_user)?;
            let user_factor = pilots.matrix().transpose() * au.conjugate();
            Ok(FactoredSensing::new(
                user_factor,
                sensing_matrix(&ens, &wide, s)?,
            ))
        })
        .collect::<Result<_, _>>()?;
    let opts = PursuitOptions {
        tolerance: cfg.epsilon_scale * (pilots_count * ens.measurements()) as f64 * p_noise,
        max_atoms: cfg.paths,
    };

    let mut table = Table::new(&["snr_db", "estimator", "nmse", "nmse_db"]);
    for (snr_idx, &snr_db) in cfg.snr_db.iter().enumerate() {
        let snr = db_to_linear(snr_db);
        let variance = gain_variance_for_snr(snr, p_pilot, p_noise);
        let mut sum = 0.0;
        for trial in 0..cfg.trials {
            let counter = (snr_idx * cfg.trials + trial) as u64 + 1;
            let mut rng = trial_stream(cfg.seed, counter);
            let paths = if cfg.on_grid {
                sample_on_grid_paths(
                    gx,
                    gy,
                    cfg.paths,
                    cfg.min_separation,
                    variance,
                    Some(gu),
                    &mut rng,
                )?
            } else {
                sample_statistical_paths(cfg.paths, variance, true, &mut rng)?
            };
            let h = synth_mimo_channel(&geom, &user_arr, &grid, &paths, &medium, None)?;
            let ys: Vec<DVector<Complex64>> = h
                .iter()
                .map(|hs| measure_mimo(&ens, &pilots, hs, p_noise, &mut rng))
                .collect();
            let out = gmmv(&ys, &sensing, &opts)?;
            let h_hat =
                reconstruct_mimo_channel(&wide, &user_dict, &out.support, &out.gains)?;
            sum += nmse_mats(&h, &h_hat)?;
        }
        let mean = sum / cfg.trials as f64;
        table.push(vec![
            float(snr_db),
            "gmmv".to_string(),
            float(mean),
            float(linear_to_db(mean)),
        ]);
    }
    Ok(table)
}
