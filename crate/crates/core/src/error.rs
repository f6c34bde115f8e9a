use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid world: {0}")]
    InvalidWorld(String),
    #[error("world generation failed after {0} attempts")]
    WorldGeneration(usize),
    #[error("scan has {0} beams, which is not a multiple of {1} bins")]
    BeamCountMismatch(usize, usize),
    #[error("replay buffer holds {have} transitions, batch needs {need}")]
    BufferUnderfull { have: usize, need: usize },
    #[error("no active point of interest and the goal is beyond the switch distance")]
    NoCandidates,
    #[error("no frontier left to explore")]
    NoFrontiers,
    #[error("no path between the requested cells")]
    Unreachable,
    #[error("checkpoint not found: {0}")]
    MissingCheckpoint(String),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),
}

impl Error {
    /// Stable snake_case name of the variant, for machine-readable output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidWorld(_) => "invalid_world",
            Error::WorldGeneration(_) => "world_generation",
            Error::BeamCountMismatch(..) => "beam_count_mismatch",
            Error::BufferUnderfull { .. } => "buffer_underfull",
            Error::NoCandidates => "no_candidates",
            Error::NoFrontiers => "no_frontiers",
            Error::Unreachable => "unreachable",
            Error::MissingCheckpoint(_) => "missing_checkpoint",
            Error::Checkpoint(_) => "checkpoint",
            Error::Parse(_) => "parse",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::TomlDe(_) => "toml",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
