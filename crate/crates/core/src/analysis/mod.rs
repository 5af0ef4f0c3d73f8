//! Model files, sensitivity sweeps and their reports.

mod model;
mod report;
mod sweep;

pub use model::{load_model, Model};
pub use report::{emit, read_csv, read_json, write_csv, write_json, OutputFormat};
pub use sweep::{
    admissible_region, evaluate_cell, one_way_sweep, two_way_sweep, DeltaGrid, SchemeRegion,
    GridEntry, PositionEntry, SchemeEntry, SweepConfig, SweepRecord, SweepScheme, SweepSpec,
};
