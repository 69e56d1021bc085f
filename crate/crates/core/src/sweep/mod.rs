//! Parameter sweeps: TOML configs, parallel evaluation, CSV and SVG output.

mod config;
mod output;
mod run;

pub use config::{
    parse_frequency, validate_config, Axis, FrequencyContext, OutputSpec, SweepSpec, DEFAULT_C_XI,
    DEFAULT_WAVELENGTH,
};
pub use output::{audit_csv, header_comment, plot_files, rows_csv, write_outputs, CSV_COLUMNS};
pub use run::{
    audit_indices, audit_row, evaluate_point, grid_points, run_sweep, AuditRecord, PointPhysics,
    SweepOutcome, SweepPoint, SweepRow, AUDIT_MAX_PAIRS, AUDIT_PHOTON_FLOOR, AUDIT_TOLERANCE,
};
