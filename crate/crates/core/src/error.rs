use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("{what} (line {line}): {msg}")]
    Parse {
        what: &'static str,
        line: usize,
        msg: String,
    },

    #[error("empty ontology")]
    EmptyOntology,

    #[error("duplicate slot `{0}`")]
    DuplicateSlot(String),

    #[error("unknown slot `{0}`")]
    UnknownSlot(String),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("episode already terminated")]
    EpisodeTerminated,

    #[error("no active episode; call reset first")]
    NoEpisode,

    #[error("action index {index} out of range (|A| = {size})")]
    ActionOutOfRange { index: usize, size: usize },

    #[error("demonstration buffer is empty")]
    EmptyDemoBuffer,

    #[error("empty batch: {0}")]
    EmptyBatch(&'static str),

    #[error("demonstration budget exhausted: {successes}/{wanted} successful dialogues after {attempts} episodes")]
    DemoBudgetExhausted {
        wanted: usize,
        successes: usize,
        attempts: usize,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn parse(what: &'static str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            what,
            line,
            msg: msg.into(),
        }
    }
}
