//! Run configuration, binary snapshot/control formats and CSV tables.

pub mod binary;
pub mod config;
pub mod csv;
pub mod setup;

pub use binary::{read_control, read_field, write_control, write_field, FieldData, FieldSnapshot, FormatError};
pub use config::{parse_config, ConfigError, OutputConfig, RunConfig, Source, TargetSpec};
pub use setup::{RunSetup, SetupError};
