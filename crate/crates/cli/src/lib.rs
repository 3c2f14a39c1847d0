//! Experiment runner over the simulation core.
//!
//! Split from the binary so the experiments and the configuration layer can
//! be driven directly from tests: `config` resolves flat `key = value`
//! settings, `experiments` produces result tables, `output` renders them as
//! deterministic CSV, and `cli` wires the three to the command line.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;
