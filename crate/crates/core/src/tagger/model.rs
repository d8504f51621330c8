use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::bio_codec::{self, EncodingPolicy, TagId, TagSet, DEFAULT_MAX_LEN};
use crate::corpus::{Sample, SpanAnnotation, TechniqueCatalog};
use crate::scalar::Scalar;
use crate::textnorm::{self, CharSpan, NormalizationConfig, Token};

use super::features::{extract_all, FeatureConfig, FeatureId};
use super::viterbi::{viterbi, Constraints};
use super::TaggerError;

pub const MODEL_MAGIC: &[u8; 8] = b"SPANTAG\0";
pub const MODEL_VERSION: u32 = 1;

/// Emission and transition weights of a linear-chain tagger.
///
/// Emissions are a dense `hash_dim × |tags|` matrix, row per feature id;
/// transitions are `|tags| × |tags|`, row per previous tag.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights<F> {
    pub emissions: Vec<F>,
    pub transitions: Vec<F>,
}

impl<F: Scalar> Weights<F> {
    pub fn zeros(hash_dim: usize, num_tags: usize) -> Self {
        Self {
            emissions: vec![F::zero(); hash_dim * num_tags],
            transitions: vec![F::zero(); num_tags * num_tags],
        }
    }
}

/// Everything needed to tag new text besides the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub catalog: TechniqueCatalog,
    pub features: FeatureConfig,
    pub normalization: NormalizationConfig,
    pub encoding: EncodingPolicy,
    pub max_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<F> {
    header: ModelHeader,
    tagset: TagSet,
    constraints: Constraints,
    weights: Weights<F>,
}

/// Sums the emission rows of `features` into `out` (one slot per tag).
/// Repeated ids count once per occurrence.
pub(crate) fn accumulate_emissions<F: Scalar>(emissions: &[F], num_tags: usize, features: &[FeatureId], out: &mut [F]) {
    for &f in features {
        let row = &emissions[f as usize * num_tags..(f as usize + 1) * num_tags];
        for (o, &w) in out.iter_mut().zip(row) {
            *o += w;
        }
    }
}

/// Tokens of the first `max_len` positions of normalized text.
pub(crate) fn truncated_tokens(text: &str, max_len: usize) -> Vec<Token> {
    let mut tokens = textnorm::tokenize(text);
    tokens.truncate(max_len);
    tokens
}

impl<F: Scalar> ModelParams<F> {
    pub fn zeros(header: ModelHeader) -> Self {
        let tagset = TagSet::new(&header.catalog);
        let weights = Weights::zeros(header.features.hash_dim, tagset.len());
        Self::from_parts(header, weights)
    }

    pub fn from_parts(header: ModelHeader, weights: Weights<F>) -> Self {
        let tagset = TagSet::new(&header.catalog);
        let constraints = Constraints::bio(&tagset);
        assert_eq!(weights.emissions.len(), header.features.hash_dim * tagset.len());
        assert_eq!(weights.transitions.len(), tagset.len() * tagset.len());
        Self {
            header,
            tagset,
            constraints,
            weights,
        }
    }

    pub fn header(&self) -> &ModelHeader {
        &self.header
    }

    pub fn catalog(&self) -> &TechniqueCatalog {
        &self.header.catalog
    }

    pub fn tagset(&self) -> &TagSet {
        &self.tagset
    }

    pub fn constraints(&self) -> &Constraints {
        &self.constraints
    }

    pub fn weights(&self) -> &Weights<F> {
        &self.weights
    }

    pub fn emissions(&self) -> &[F] {
        &self.weights.emissions
    }

    pub fn transitions(&self) -> &[F] {
        &self.weights.transitions
    }

    pub fn emission(&self, feature: FeatureId, tag: TagId) -> F {
        self.weights.emissions[feature as usize * self.tagset.len() + tag as usize]
    }

    pub fn set_emission(&mut self, feature: FeatureId, tag: TagId, value: F) {
        let t = self.tagset.len();
        self.weights.emissions[feature as usize * t + tag as usize] = value;
    }

    pub fn transition(&self, prev: TagId, next: TagId) -> F {
        self.weights.transitions[prev as usize * self.tagset.len() + next as usize]
    }

    /// Per-tag emission scores for one token's features.
    pub fn score_emissions(&self, features: &[FeatureId]) -> Vec<F> {
        let mut out = vec![F::zero(); self.tagset.len()];
        accumulate_emissions(&self.weights.emissions, self.tagset.len(), features, &mut out);
        out
    }

    /// Best BIO-valid tag path for already-extracted token features.
    pub fn decode_features(&self, features: &[Vec<FeatureId>]) -> Result<(Vec<TagId>, F), TaggerError> {
        let t = self.tagset.len();
        let mut scores = vec![F::zero(); features.len() * t];
        for (i, f) in features.iter().enumerate() {
            accumulate_emissions(&self.weights.emissions, t, f, &mut scores[i * t..(i + 1) * t]);
        }
        viterbi(&scores, &self.weights.transitions, &self.constraints)
    }

    /// Tags raw text: normalize, tokenize, truncate, decode, and map the
    /// decoded spans back onto the raw text.
    pub fn predict_text(&self, text: &str, normalization: &NormalizationConfig) -> Result<Vec<SpanAnnotation>, TaggerError> {
        let (normalized, map) = textnorm::normalize(text, normalization);
        let tokens = truncated_tokens(&normalized, self.header.max_len);
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let features = extract_all(&tokens, &self.header.features);
        let (path, _) = self.decode_features(&features)?;
        let path = bio_codec::repair(&path, &self.tagset);
        let spans = bio_codec::decode(&tokens, &path, &self.tagset)?;
        spans
            .into_iter()
            .map(|s| {
                let raw = textnorm::project_span_backward(CharSpan::new(s.start, s.end), &map)?;
                Ok(SpanAnnotation::new(s.technique, raw.start, raw.end))
            })
            .collect()
    }

    pub fn save<W: Write>(&self, mut out: W) -> Result<(), TaggerError> {
        let header = serde_json::to_vec(&self.header).map_err(|e| TaggerError::BadModel(e.to_string()))?;
        let mut buf = Vec::with_capacity(
            32 + header.len() + (self.weights.emissions.len() + self.weights.transitions.len()) * F::WIDTH,
        );
        buf.extend_from_slice(MODEL_MAGIC);
        buf.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        buf.extend_from_slice(&(F::WIDTH as u32).to_le_bytes());
        buf.extend_from_slice(&(header.len() as u64).to_le_bytes());
        buf.extend_from_slice(&header);
        buf.extend_from_slice(&(self.header.features.hash_dim as u64).to_le_bytes());
        buf.extend_from_slice(&(self.tagset.len() as u64).to_le_bytes());
        for &w in self.weights.emissions.iter().chain(&self.weights.transitions) {
            w.write_le(&mut buf);
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn load<R: Read>(mut input: R) -> Result<Self, TaggerError> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        let mut cursor = Cursor { bytes: &bytes, pos: 0 };
        if cursor.take(8)? != MODEL_MAGIC {
            return Err(TaggerError::BadModel("not a model file".into()));
        }
        let version = cursor.u32()?;
        if version != MODEL_VERSION {
            return Err(TaggerError::VersionMismatch {
                found: version,
                expected: MODEL_VERSION,
            });
        }
        let width = cursor.u32()? as usize;
        if width != F::WIDTH {
            return Err(TaggerError::ScalarMismatch {
                found: width,
                expected: F::WIDTH,
            });
        }
        let header_len = cursor.u64()? as usize;
        let header: ModelHeader =
            serde_json::from_slice(cursor.take(header_len)?).map_err(|e| TaggerError::BadModel(e.to_string()))?;
        header.features.validate().map_err(TaggerError::BadModel)?;
        let hash_dim = cursor.u64()? as usize;
        let num_tags = cursor.u64()? as usize;
        let expected_tags = 2 * header.catalog.len() + 1;
        if hash_dim != header.features.hash_dim || num_tags != expected_tags {
            return Err(TaggerError::BadModel(format!(
                "matrix shape {hash_dim}x{num_tags} does not match header {}x{expected_tags}",
                header.features.hash_dim
            )));
        }
        let mut read_matrix = |len: usize| -> Result<Vec<F>, TaggerError> {
            let raw = cursor.take(len * F::WIDTH)?;
            Ok(raw.chunks_exact(F::WIDTH).map(F::read_le).collect())
        };
        let emissions = read_matrix(hash_dim * num_tags)?;
        let transitions = read_matrix(num_tags * num_tags)?;
        if cursor.pos != bytes.len() {
            return Err(TaggerError::BadModel("trailing bytes after weights".into()));
        }
        Ok(Self::from_parts(header, Weights { emissions, transitions }))
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TaggerError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(TaggerError::BadModel("model file is truncated".into())),
        }
    }

    fn u32(&mut self) -> Result<u32, TaggerError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, TaggerError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

impl Default for ModelHeader {
    fn default() -> Self {
        Self {
            catalog: TechniqueCatalog::from_names(["technique"]).expect("non-empty"),
            features: FeatureConfig::default(),
            normalization: NormalizationConfig::default(),
            encoding: EncodingPolicy::default(),
            max_len: DEFAULT_MAX_LEN,
        }
    }
}

/// Predicted spans for `sample`, on its raw text.
pub fn predict<F: Scalar>(
    model: &ModelParams<F>,
    sample: &Sample,
    normalization: &NormalizationConfig,
) -> Result<Vec<SpanAnnotation>, TaggerError> {
    model.predict_text(sample.text(), normalization)
}

/// Per-tag emission scores for one token's feature ids.
pub fn score_emissions<F: Scalar>(model: &ModelParams<F>, features: &[FeatureId]) -> Vec<F> {
    model.score_emissions(features)
}
