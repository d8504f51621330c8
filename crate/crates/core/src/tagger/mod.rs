//! Linear-chain tagger over hashed sparse features with BIO-constrained
//! Viterbi decoding.

mod features;
mod model;
mod train;
mod viterbi;

use thiserror::Error;

use crate::bio_codec::CodecError;
use crate::scorer::ScoreError;
use crate::textnorm::OffsetError;

pub use features::{extract_all, extract_features, FeatureConfig, FeatureId};
pub use model::{predict, score_emissions, ModelHeader, ModelParams, Weights, MODEL_MAGIC, MODEL_VERSION};
pub use train::{train, train_with_progress, EpochStats, TrainConfig, TrainReport, TrainSetup};
pub use viterbi::{path_score, viterbi, Constraints};

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("no training samples")]
    NoSamples,
    #[error("cannot decode an empty sequence")]
    EmptySequence,
    #[error("every tag path is forbidden by the transition constraints")]
    NoAdmissiblePath,
    #[error("sample {id:?} uses technique {technique:?}, which is not in the catalog")]
    InconsistentCatalog { id: String, technique: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("model file version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("model weights are {found}-byte floats, expected {expected}-byte")]
    ScalarMismatch { found: usize, expected: usize },
    #[error("bad model file: {0}")]
    BadModel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Offset(#[from] OffsetError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}
