//! Experiment harness: trials, baselines, error estimation, sweeps, tuning,
//! property suites and CSV output.

pub mod config;
pub mod eval;
pub mod properties;
pub mod record;
pub mod sweep;
pub mod trial;
pub mod tune;

pub use config::{BaselineToggles, ErrorMethodChoice, ExperimentConfig, SweepGrid, TuneGrid};
pub use eval::{estimate_error, paired_monte_carlo, ErrorEstimate, ErrorMethod, PairedErrors};
pub use record::{read_csv, write_sorted_csv, Algorithm, CsvRow, RunRecord, CSV_COLUMNS};
pub use sweep::{median, quartiles, summary_table, sweep, SweepOutcome};
pub use trial::{run_active, run_baseline_fulldim, run_baseline_passive};
pub use properties::{run_properties, write_dumps, PropertyReport};
pub use tune::{recommended_toml, tune, tune_table, TuneEntry, TuneReport};
