//! Propaganda-span tagging toolkit.
//!
//! The pipeline runs JSONL corpus ingestion ([`corpus`]), reversible Arabic
//! normalization and tokenization ([`textnorm`]), span/BIO conversion
//! ([`bio_codec`]), a two-phase linear-chain tagger ([`tagger`]) and
//! overlap-credit span scoring ([`scorer`]).
//!
//! Weights and metrics are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the types the command-line tool uses.

pub mod bio_codec;
pub mod corpus;
pub mod scalar;
pub mod scorer;
pub mod synthetic;
pub mod tagger;
pub mod textnorm;

pub use bio_codec::{EncodingPolicy, MaskedTagSequence, OverlapResolution, TagId, TagSet};
pub use corpus::{CorpusStats, Genre, Sample, SpanAnnotation, TechniqueCatalog};
pub use scalar::Scalar;
pub use scorer::{ConfusionMatrix, ScoreOptions};
pub use tagger::{FeatureConfig, TrainConfig, TrainReport, TrainSetup};
pub use textnorm::{NormalizationConfig, OffsetMap, Token};

/// Tagger with single-precision weights, as stored in model files.
pub type Model = tagger::ModelParams<f32>;
/// Double-precision tagger.
pub type Model64 = tagger::ModelParams<f64>;
/// Score report in double precision.
pub type Report = scorer::ScoreReport<f64>;
