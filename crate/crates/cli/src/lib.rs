//! Command line front end for the `cforge` engine: run configuration,
//! scenario execution, verification suites and mesh export.

pub mod config;
pub mod mesh;
pub mod run;
pub mod verify;

use cforge::Category;

pub const EXIT_OK: i32 = 0;
/// Usage errors, unreadable or invalid configuration, malformed snapshots.
pub const EXIT_CONFIG: i32 = 2;
/// Engine preconditions and unsupported mesh projections.
pub const EXIT_PRECONDITION: i32 = 3;
/// Numeric failures, failed audits and failed verification suites.
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_STRICT: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] config::ConfigError),
    #[error("io: {0}")]
    Io(String),
    #[error("mesh: {0}")]
    Mesh(#[from] mesh::MeshError),
    #[error(transparent)]
    Engine(#[from] cforge::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Mesh(_) => EXIT_PRECONDITION,
            CliError::Failed(_) => EXIT_NUMERIC,
            CliError::Engine(e) => match e.category() {
                Category::Input => EXIT_CONFIG,
                Category::Precondition => EXIT_PRECONDITION,
                Category::Numeric => EXIT_NUMERIC,
                Category::Strict => EXIT_STRICT,
            },
        }
    }
}
