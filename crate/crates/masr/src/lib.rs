//! Command-line driver for robust movable-antenna symbiotic-radio designs: TOML
//! configuration, parallel seed sweeps, CSV/JSON output and design verification.

pub mod config;
pub mod output;
pub mod runner;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse: {0}")]
    TomlDe(#[from] toml::de::Error),
    #[error("config write: {0}")]
    TomlSer(#[from] toml::ser::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] masr_core::Error),
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
