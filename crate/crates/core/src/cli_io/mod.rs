//! Configuration, pipeline orchestration and JSON/CSV/SVG output.

pub mod config;
pub mod csv;
pub mod pipeline;
pub mod report;
pub mod svg;

pub use config::{load_config, parse_config, Check, Command, FamilyConfig, GridConfig, OutputConfig, RunConfig};
pub use pipeline::{evaluate, run_pipeline, sample_leaves, web_of_triple, RunOutput};
pub use report::{to_fixed_json, CheckResult, Status, VerificationReport, SCHEMA_VERSION};
pub use svg::{emit_svg, DualScene};
