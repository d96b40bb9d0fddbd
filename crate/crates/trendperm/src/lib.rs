//! Monte Carlo harness and file plumbing around [`trendperm_core`]: a
//! declarative experiment runner for rejection-probability tables, series
//! file IO, a persistable permutation-null cache, and a drift power study.
//! The `trendperm` binary in this crate exposes all of it as subcommands.

pub mod cli;
pub mod config;
pub mod harness;
pub mod powerstudy;
pub mod seriesio;
pub mod tabulate;

use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] trendperm_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    fn io(path: &std::path::Path, source: io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn parse(path: &std::path::Path, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            line,
            message: message.into(),
        }
    }
}
