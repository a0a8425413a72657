//! Experiment orchestration: configuration, repeated seeded runs, regret
//! accounting, bound checks, graph summaries and CSV output.

pub mod config;
pub mod experiment;
pub mod info;
pub mod output;

pub use config::{parse_config, Adversary, ExperimentConfig, Game, ObservationMode, Tuning};
pub use experiment::{
    bound_report, repetition_rng, resolve_params, run_experiment, verify_bound, BoundReport,
    GameInstance, RegretSeries,
};
pub use info::{graph_info, GraphInfo};
pub use output::{read_csv, read_csv_from, write_csv, write_csv_to, SeriesRow, CSV_HEADER};
