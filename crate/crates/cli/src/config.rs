//! Flat `key = value` experiment configuration.
//!
//! Precedence, lowest to highest: built-in defaults, the `--desk` preset,
//! the `--config` file, dedicated flags (`--seed`, `--trials`, `--snr-db`),
//! and trailing `KEY=VALUE` overrides. Unknown keys and malformed values are
//! hard errors that name the key, and file errors carry the line number.
//!
//! Numeric list values accept comma-separated entries and inclusive ranges
//! written `start:step:stop`, so `-15:5:10` expands to
//! `-15,-10,-5,0,5,10`. Frequencies are given in GHz on the wire
//! (`bandwidth_ghz = 40` means 4.0e10 Hz) and held in Hz internally.

use std::fmt;
use std::path::Path;

/// Configuration problem; the process exits with status 2 on these.
#[derive(Debug)]
pub enum ConfigError {
    Io { path: String, message: String },
    BadLine { line: usize, content: String },
    UnknownKey { key: String, line: Option<usize> },
    BadValue { key: String, value: String, expected: &'static str, line: Option<usize> },
    BadOverride { arg: String },
    Invalid { key: &'static str, reason: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, message } => {
                write!(f, "cannot read config file `{path}`: {message}")
            }
            ConfigError::BadLine { line, content } => {
                write!(f, "line {line}: expected `key = value`, got `{content}`")
            }
            ConfigError::UnknownKey { key, line: Some(line) } => {
                write!(f, "line {line}: unknown key `{key}`")
            }
            ConfigError::UnknownKey { key, line: None } => write!(f, "unknown key `{key}`"),
            ConfigError::BadValue { key, value, expected, line: Some(line) } => {
                write!(f, "line {line}: key `{key}`: cannot parse `{value}` as {expected}")
            }
            ConfigError::BadValue { key, value, expected, line: None } => {
                write!(f, "key `{key}`: cannot parse `{value}` as {expected}")
            }
            ConfigError::BadOverride { arg } => {
                write!(f, "override `{arg}` is not of the form KEY=VALUE")
            }
            ConfigError::Invalid { key, reason } => write!(f, "key `{key}`: {reason}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Channel estimators selectable in the `estimators` list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    /// Least squares on the full training matrix; reported analytically.
    Ls,
    /// Matching pursuit with a carrier-frequency dictionary at every subcarrier.
    NbOmp,
    /// Per-subcarrier matching pursuit with the frequency-consistent dictionary.
    Omp,
    /// Joint group pursuit over all subcarriers.
    Gsomp,
    /// Group pursuit that searches the support on a probed subcarrier subset.
    GsompSs,
    /// Genie-support estimation error floor.
    Crlb,
}

impl Estimator {
    pub const ALL: [Estimator; 6] = [
        Estimator::Ls,
        Estimator::NbOmp,
        Estimator::Omp,
        Estimator::Gsomp,
        Estimator::GsompSs,
        Estimator::Crlb,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Estimator::Ls => "ls",
            Estimator::NbOmp => "nbomp",
            Estimator::Omp => "omp",
            Estimator::Gsomp => "gsomp",
            Estimator::GsompSs => "gsomp-ss",
            Estimator::Crlb => "crlb",
        }
    }

    fn parse(name: &str) -> Option<Estimator> {
        Estimator::ALL.iter().copied().find(|e| e.label() == name)
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub n_rows: usize,
    pub n_cols: usize,
    /// Carrier frequency in Hz.
    pub carrier: f64,
    /// Total bandwidth in Hz.
    pub bandwidth: f64,
    pub subcarriers: usize,
    /// Model order for sparse-recovery experiments.
    pub paths: usize,
    /// Reflected paths accompanying the line of sight in rate experiments.
    pub nlos_paths: usize,
    pub tx_power_dbm: Vec<f64>,
    pub noise_dbm_hz: f64,
    /// Per-path gain variance for statistical channels.
    pub gain_variance: f64,
    pub distance_m: f64,
    pub snr_db: Vec<f64>,
    pub estimators: Vec<Estimator>,
    pub trials: usize,
    pub seed: u64,
    pub n_rf: usize,
    /// Training beams as a fraction of the antenna count.
    pub training_fraction: f64,
    /// Subarray count along each axis; 0 picks the widest squint-safe extent.
    pub nsb: usize,
    pub msb: usize,
    /// Dictionary grid points per antenna and axis, rounded up to odd.
    pub dict_oversampling: f64,
    /// Evenly spaced probe subcarriers for the subset-search estimator.
    pub ss_probes: usize,
    pub user_antennas: usize,
    /// Pilot directions swept by the user; 0 means one per user antenna.
    pub user_pilots: usize,
    pub azimuth_deg: f64,
    pub polar_deg: f64,
    /// Minimum grid-index separation between sampled on-grid paths.
    pub min_separation: usize,
    pub on_grid: bool,
    pub element_pattern: bool,
    /// Evaluation distances as multiples of the Fraunhofer distance.
    pub distances_df: Vec<f64>,
    /// Multiplier on the expected-noise-energy stopping threshold.
    pub epsilon_scale: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_rows: 100,
            n_cols: 100,
            carrier: 300e9,
            bandwidth: 40e9,
            subcarriers: 400,
            paths: 3,
            nlos_paths: 2,
            tx_power_dbm: vec![10.0],
            noise_dbm_hz: -174.0,
            gain_variance: 1e-9,
            distance_m: 15.0,
            snr_db: vec![-15.0, -10.0, -5.0, 0.0, 5.0, 10.0],
            estimators: Estimator::ALL.to_vec(),
            trials: 100,
            seed: 1,
            n_rf: 4,
            training_fraction: 0.8,
            nsb: 10,
            msb: 10,
            dict_oversampling: 2.0,
            ss_probes: 8,
            user_antennas: 2,
            user_pilots: 0,
            azimuth_deg: 60.0,
            polar_deg: 45.0,
            min_separation: 3,
            on_grid: true,
            element_pattern: true,
            distances_df: vec![0.5, 1.0, 2.0],
            epsilon_scale: 1.0,
        }
    }
}

impl SimConfig {
    /// Desk-scale preset: a 16x16 array with 32 subcarriers. The default
    /// oversampling then yields a 33x33 grid, about four columns per antenna.
    pub fn apply_desk(&mut self) {
        self.n_rows = 16;
        self.n_cols = 16;
        self.subcarriers = 32;
        self.nsb = 0;
        self.msb = 0;
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            if content.trim().is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError::BadLine {
                line,
                content: content.trim().to_string(),
            })?;
            self.apply(key.trim(), value.trim(), Some(line))?;
        }
        Ok(())
    }

    pub fn apply_override(&mut self, arg: &str) -> Result<(), ConfigError> {
        let (key, value) = arg.split_once('=').ok_or(ConfigError::BadOverride {
            arg: arg.to_string(),
        })?;
        self.apply(key.trim(), value.trim(), None)
    }

    pub fn apply(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<(), ConfigError> {
        match key {
            "n_rows" => self.n_rows = parse_usize(key, value, line)?,
            "n_cols" => self.n_cols = parse_usize(key, value, line)?,
            "carrier_ghz" => self.carrier = parse_f64(key, value, line)? * 1e9,
            "bandwidth_ghz" => self.bandwidth = parse_f64(key, value, line)? * 1e9,
            "subcarriers" => self.subcarriers = parse_usize(key, value, line)?,
            "paths" => self.paths = parse_usize(key, value, line)?,
            "nlos_paths" => self.nlos_paths = parse_usize(key, value, line)?,
            "tx_power_dbm" => self.tx_power_dbm = parse_f64_list(key, value, line)?,
            "noise_dbm_hz" => self.noise_dbm_hz = parse_f64(key, value, line)?,
            "gain_variance" => self.gain_variance = parse_f64(key, value, line)?,
            "distance_m" => self.distance_m = parse_f64(key, value, line)?,
            "snr_db" => self.snr_db = parse_f64_list(key, value, line)?,
            "estimators" => self.estimators = parse_estimators(key, value, line)?,
            "trials" => self.trials = parse_usize(key, value, line)?,
            "seed" => self.seed = parse_u64(key, value, line)?,
            "n_rf" => self.n_rf = parse_usize(key, value, line)?,
            "training_fraction" => self.training_fraction = parse_f64(key, value, line)?,
            "nsb" => self.nsb = parse_usize(key, value, line)?,
            "msb" => self.msb = parse_usize(key, value, line)?,
            "dict_oversampling" => self.dict_oversampling = parse_f64(key, value, line)?,
            "ss_probes" => self.ss_probes = parse_usize(key, value, line)?,
            "user_antennas" => self.user_antennas = parse_usize(key, value, line)?,
            "user_pilots" => self.user_pilots = parse_usize(key, value, line)?,
            "azimuth_deg" => self.azimuth_deg = parse_f64(key, value, line)?,
            "polar_deg" => self.polar_deg = parse_f64(key, value, line)?,
            "min_separation" => self.min_separation = parse_usize(key, value, line)?,
            "on_grid" => self.on_grid = parse_bool(key, value, line)?,
            "element_pattern" => self.element_pattern = parse_bool(key, value, line)?,
            "distances_df" => self.distances_df = parse_f64_list(key, value, line)?,
            "epsilon_scale" => self.epsilon_scale = parse_f64(key, value, line)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: key.to_string(),
                    line,
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn bad(key: &'static str, reason: impl Into<String>) -> ConfigError {
            ConfigError::Invalid {
                key,
                reason: reason.into(),
            }
        }
        if self.n_rows == 0 {
            return Err(bad("n_rows", "must be at least 1"));
        }
        if self.n_cols == 0 {
            return Err(bad("n_cols", "must be at least 1"));
        }
        if !(self.carrier > 0.0) {
            return Err(bad("carrier_ghz", "must be positive"));
        }
        if !(self.bandwidth > 0.0) {
            return Err(bad("bandwidth_ghz", "must be positive"));
        }
        if self.bandwidth >= 2.0 * self.carrier {
            return Err(bad(
                "bandwidth_ghz",
                "must be below twice the carrier frequency",
            ));
        }
        if self.subcarriers == 0 {
            return Err(bad("subcarriers", "must be at least 1"));
        }
        if self.paths == 0 {
            return Err(bad("paths", "must be at least 1"));
        }
        if self.tx_power_dbm.is_empty() {
            return Err(bad("tx_power_dbm", "needs at least one value"));
        }
        if self.snr_db.is_empty() {
            return Err(bad("snr_db", "needs at least one value"));
        }
        if self.estimators.is_empty() {
            return Err(bad("estimators", "needs at least one estimator"));
        }
        if self.trials == 0 {
            return Err(bad("trials", "must be at least 1"));
        }
        if self.n_rf == 0 || self.n_rf > self.n_rows * self.n_cols {
            return Err(bad("n_rf", "must be in 1..=n_rows*n_cols"));
        }
        if !(self.training_fraction > 0.0 && self.training_fraction <= 1.0) {
            return Err(bad("training_fraction", "must lie in (0, 1]"));
        }
        if self.nsb != 0 && self.n_rows % self.nsb != 0 {
            return Err(bad("nsb", format!("must divide n_rows = {}", self.n_rows)));
        }
        if self.msb != 0 && self.n_cols % self.msb != 0 {
            return Err(bad("msb", format!("must divide n_cols = {}", self.n_cols)));
        }
        if !(self.dict_oversampling >= 1.0) {
            return Err(bad("dict_oversampling", "must be at least 1"));
        }
        if self.ss_probes == 0 {
            return Err(bad("ss_probes", "must be at least 1"));
        }
        if self.user_antennas == 0 {
            return Err(bad("user_antennas", "must be at least 1"));
        }
        if self.user_pilots > self.user_antennas {
            return Err(bad("user_pilots", "cannot exceed user_antennas"));
        }
        if !(self.gain_variance > 0.0) {
            return Err(bad("gain_variance", "must be positive"));
        }
        if !(self.distance_m > 0.0) {
            return Err(bad("distance_m", "must be positive"));
        }
        if self.min_separation == 0 {
            return Err(bad("min_separation", "must be at least 1"));
        }
        if self.distances_df.is_empty() || self.distances_df.iter().any(|&d| !(d > 0.0)) {
            return Err(bad("distances_df", "needs positive values"));
        }
        if !(self.epsilon_scale > 0.0) {
            return Err(bad("epsilon_scale", "must be positive"));
        }
        Ok(())
    }

    /// All keys with their resolved values, alphabetical, for CSV metadata.
    pub fn metadata(&self) -> Vec<(&'static str, String)> {
        let mut rows = vec![
            ("azimuth_deg", fmt_f64(self.azimuth_deg)),
            ("bandwidth_ghz", fmt_f64(self.bandwidth / 1e9)),
            ("carrier_ghz", fmt_f64(self.carrier / 1e9)),
            ("dict_oversampling", fmt_f64(self.dict_oversampling)),
            ("distance_m", fmt_f64(self.distance_m)),
            ("distances_df", fmt_list(&self.distances_df)),
            ("element_pattern", self.element_pattern.to_string()),
            ("epsilon_scale", fmt_f64(self.epsilon_scale)),
            (
                "estimators",
                self.estimators
                    .iter()
                    .map(|e| e.label())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("gain_variance", fmt_f64(self.gain_variance)),
            ("min_separation", self.min_separation.to_string()),
            ("msb", self.msb.to_string()),
            ("n_cols", self.n_cols.to_string()),
            ("n_rf", self.n_rf.to_string()),
            ("n_rows", self.n_rows.to_string()),
            ("nlos_paths", self.nlos_paths.to_string()),
            ("noise_dbm_hz", fmt_f64(self.noise_dbm_hz)),
            ("on_grid", self.on_grid.to_string()),
            ("paths", self.paths.to_string()),
            ("polar_deg", fmt_f64(self.polar_deg)),
            ("seed", self.seed.to_string()),
            ("snr_db", fmt_list(&self.snr_db)),
            ("ss_probes", self.ss_probes.to_string()),
            ("subcarriers", self.subcarriers.to_string()),
            ("training_fraction", fmt_f64(self.training_fraction)),
            ("trials", self.trials.to_string()),
            ("tx_power_dbm", fmt_list(&self.tx_power_dbm)),
            ("user_antennas", self.user_antennas.to_string()),
            ("user_pilots", self.user_pilots.to_string()),
        ];
        rows.sort_by_key(|(k, _)| *k);
        rows
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

fn parse_usize(key: &str, value: &str, line: Option<usize>) -> Result<usize, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected: "a non-negative integer",
        line,
    })
}

fn parse_u64(key: &str, value: &str, line: Option<usize>) -> Result<u64, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected: "a non-negative integer",
        line,
    })
}

fn parse_f64(key: &str, value: &str, line: Option<usize>) -> Result<f64, ConfigError> {
    let x: f64 = value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected: "a number",
        line,
    })?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            expected: "a finite number",
            line,
        })
    }
}

fn parse_bool(key: &str, value: &str, line: Option<usize>) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            expected: "true or false",
            line,
        }),
    }
}

/// Comma-separated numbers where each entry may be an inclusive
/// `start:step:stop` range.
pub fn parse_f64_list(key: &str, value: &str, line: Option<usize>) -> Result<Vec<f64>, ConfigError> {
    let bad = |expected: &'static str| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected,
        line,
    };
    let mut out = Vec::new();
    for token in value.split(',') {
        let token = token.trim();
        if token.is_empty() {
            return Err(bad("a number or start:step:stop range"));
        }
        // A leading minus sign is a sign, not a range separator.
        let is_range = token[1..].contains(':') || token.starts_with(':');
        if is_range {
            let parts: Vec<&str> = token.split(':').collect();
            if parts.len() != 3 {
                return Err(bad("a start:step:stop range"));
            }
            let start = parse_f64(key, parts[0].trim(), line)?;
            let step = parse_f64(key, parts[1].trim(), line)?;
            let stop = parse_f64(key, parts[2].trim(), line)?;
            if !(step > 0.0) || stop < start {
                return Err(bad("a range with positive step and stop >= start"));
            }
            let mut k = 0usize;
            loop {
                let x = start + step * k as f64;
                if x > stop + step * 1e-9 {
                    break;
                }
                out.push(x);
                k += 1;
            }
        } else {
            out.push(parse_f64(key, token, line)?);
        }
    }
    if out.is_empty() {
        return Err(bad("at least one number"));
    }
    Ok(out)
}

fn parse_estimators(
    key: &str,
    value: &str,
    line: Option<usize>,
) -> Result<Vec<Estimator>, ConfigError> {
    value
        .split(',')
        .map(|name| {
            Estimator::parse(name.trim()).ok_or_else(|| ConfigError::BadValue {
                key: key.to_string(),
                value: name.trim().to_string(),
                expected: "one of ls, nbomp, omp, gsomp, gsomp-ss, crlb",
                line,
            })
        })
        .collect()
}

// ── Tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tmp_config(content: &str) -> std::path::PathBuf {
        let mut path = std::env::temp_dir();
        path.push(format!(
            "thzsim-config-{}-{:p}.ini",
            std::process::id(),
            content
        ));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    // 1. GHz keys scale to Hz; an empty file keeps every default.
    #[test]
    fn units_and_defaults() {
        let mut cfg = SimConfig::default();
        cfg.apply("bandwidth_ghz", "40", None).unwrap();
        assert_eq!(cfg.bandwidth, 4.0e10);
        assert_eq!(cfg.carrier, 3.0e11);
        assert_eq!(cfg.noise_dbm_hz, -174.0);
        assert_eq!(cfg.distance_m, 15.0);
        assert_eq!(cfg.tx_power_dbm, vec![10.0]);

        let path = tmp_config("# nothing but comments\n\n");
        let mut cfg = SimConfig::default();
        cfg.apply_file(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        assert_eq!(cfg.subcarriers, 400);
        assert_eq!(cfg.trials, 100);
    }

    // 2. Range expansion includes both endpoints when they line up.
    #[test]
    fn range_syntax() {
        let got = parse_f64_list("snr_db", "-15:5:10", None).unwrap();
        assert_eq!(got, vec![-15.0, -10.0, -5.0, 0.0, 5.0, 10.0]);
        let got = parse_f64_list("snr_db", "1, 3:2:7, 10", None).unwrap();
        assert_eq!(got, vec![1.0, 3.0, 5.0, 7.0, 10.0]);
        assert!(parse_f64_list("snr_db", "5:0:10", None).is_err());
        assert!(parse_f64_list("snr_db", "5:1", None).is_err());
    }

    // 3. Unknown keys and bad values are hard errors carrying the line.
    #[test]
    fn file_errors_carry_lines() {
        let path = tmp_config("subcarriers = 16\nbogus_key = 3\n");
        let err = SimConfig::default().apply_file(&path).unwrap_err();
        std::fs::remove_file(&path).unwrap();
        match err {
            ConfigError::UnknownKey { key, line } => {
                assert_eq!(key, "bogus_key");
                assert_eq!(line, Some(2));
            }
            other => panic!("unexpected error {other:?}"),
        }

        let path = tmp_config("trials = soon\n");
        let err = SimConfig::default().apply_file(&path).unwrap_err();
        std::fs::remove_file(&path).unwrap();
        assert!(err.to_string().contains("trials"));
        assert!(err.to_string().contains("line 1"));

        let path = tmp_config("just words\n");
        let err = SimConfig::default().apply_file(&path).unwrap_err();
        std::fs::remove_file(&path).unwrap();
        assert!(matches!(err, ConfigError::BadLine { line: 1, .. }));
    }

    // 4. Desk preset shrinks the array and subcarrier count only.
    #[test]
    fn desk_preset() {
        let mut cfg = SimConfig::default();
        cfg.apply_desk();
        assert_eq!((cfg.n_rows, cfg.n_cols, cfg.subcarriers), (16, 16, 32));
        assert_eq!(cfg.carrier, 3.0e11);
        cfg.validate().unwrap();
    }

    // 5. Overrides need the KEY=VALUE shape; validation names the key.
    #[test]
    fn overrides_and_validation() {
        let mut cfg = SimConfig::default();
        cfg.apply_override("trials=7").unwrap();
        assert_eq!(cfg.trials, 7);
        assert!(matches!(
            cfg.apply_override("trials"),
            Err(ConfigError::BadOverride { .. })
        ));

        cfg.apply_override("nsb=7").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("nsb"));

        cfg.apply_override("nsb=10").unwrap();
        cfg.apply_override("training_fraction=1.5").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("training_fraction"));
    }

    // 6. Estimator lists parse by label and reject strangers.
    #[test]
    fn estimator_lists() {
        let got = parse_estimators("estimators", "gsomp, gsomp-ss ,crlb", None).unwrap();
        assert_eq!(
            got,
            vec![Estimator::Gsomp, Estimator::GsompSs, Estimator::Crlb]
        );
        let err = parse_estimators("estimators", "lasso", None).unwrap_err();
        assert!(err.to_string().contains("lasso"));
    }

    // 7. Metadata is alphabetical and reflects applied overrides.
    #[test]
    fn metadata_is_sorted_and_current() {
        let mut cfg = SimConfig::default();
        cfg.apply("snr_db", "-5:5:5", None).unwrap();
        let meta = cfg.metadata();
        let keys: Vec<&str> = meta.iter().map(|(k, _)| *k).collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        assert_eq!(keys, sorted);
        let snr = meta.iter().find(|(k, _)| *k == "snr_db").unwrap();
        assert_eq!(snr.1, "-5,0,5");
        let bw = meta.iter().find(|(k, _)| *k == "bandwidth_ghz").unwrap();
        assert_eq!(bw.1, "40");
    }
}
