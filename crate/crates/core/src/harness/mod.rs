//! Config-driven experiment runs: parsing, per-point execution with
//! failure bookkeeping, result manifests and numeric diffs.

mod config;
mod diff;
mod run;

pub use config::{
    hash_text, Axis, AxisSpec, CoolingSpec, ExperimentConfig, GridPoint, Kind, Plan, Source, SpectrumSpec, Value,
};
pub use diff::{diff_paths, diff_tables, ColumnDiff, DiffReport};
pub use run::{describe, output_dir, run, Manifest, PointRecord, RunOptions, Status, MANIFEST, POINTS};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "VLASER_OUT";
