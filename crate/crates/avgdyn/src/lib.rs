//! File formats, parallel trial drivers and the `avgdyn` command line for
//! [`avgdyn_core`].

pub mod config;
pub mod io;
pub mod parallel;
pub mod pipeline;
pub mod verify;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] avgdyn_core::Error),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Format { .. } => 1,
            Error::Core(_) | Error::Invalid(_) => 2,
        }
    }
}

/// How a successful execution ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NonConvergence,
    AcceptanceFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::NonConvergence => 3,
            Status::AcceptanceFailure => 4,
        }
    }
}
