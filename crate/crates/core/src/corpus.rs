//! Shared-task JSONL ingestion, validation, serialization and corpus statistics.
//!
//! One JSON object per line:
//! `{"id": "...", "text": "...", "type": "tweet", "labels": [{"technique": "...", "start": 0, "end": 4}]}`.
//! Offsets count Unicode scalar values and `end` is exclusive.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read dataset: {0}")]
    Io(#[from] io::Error),
    #[error("no techniques observed; cannot build a catalog")]
    EmptyCatalog,
    #[error("duplicate technique {0:?} in catalog")]
    DuplicateTechnique(String),
    #[error("sample {id:?}: span {index} ({start},{end}) is invalid: {reason}")]
    InvalidSpan {
        id: String,
        index: usize,
        start: usize,
        end: usize,
        reason: &'static str,
    },
    #[error("failed to encode prediction line: {0}")]
    Json(#[from] serde_json::Error),
}

/// One labeled character interval `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpanAnnotation {
    pub technique: String,
    pub start: usize,
    pub end: usize,
}

impl SpanAnnotation {
    pub fn new(technique: impl Into<String>, start: usize, end: usize) -> Self {
        Self {
            technique: technique.into(),
            start,
            end,
        }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Genre {
    Tweet,
    Paragraph,
    #[default]
    Unknown,
}

impl Genre {
    fn parse(raw: Option<&str>) -> Self {
        match raw.map(|s| s.trim().to_ascii_lowercase()) {
            Some(s) if s == "tweet" => Genre::Tweet,
            Some(s) if s == "paragraph" => Genre::Paragraph,
            _ => Genre::Unknown,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Genre::Tweet => "tweet",
            Genre::Paragraph => "paragraph",
            Genre::Unknown => "unknown",
        }
    }
}

/// One corpus entry. `text` is `None` for prediction files, which omit it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sample {
    pub id: String,
    pub text: Option<String>,
    pub genre: Genre,
    pub spans: Vec<SpanAnnotation>,
    /// Indices into `spans` that failed validation while parsing.
    pub flagged: Vec<usize>,
}

impl Sample {
    pub fn new(id: impl Into<String>, text: impl Into<String>, spans: Vec<SpanAnnotation>) -> Self {
        Self {
            id: id.into(),
            text: Some(text.into()),
            genre: Genre::Unknown,
            spans,
            flagged: Vec::new(),
        }
    }

    /// A text-less sample carrying predicted spans.
    pub fn prediction(id: impl Into<String>, spans: Vec<SpanAnnotation>) -> Self {
        Self {
            id: id.into(),
            text: None,
            genre: Genre::Unknown,
            spans,
            flagged: Vec::new(),
        }
    }

    pub fn text(&self) -> &str {
        self.text.as_deref().unwrap_or("")
    }

    /// Length of the text in Unicode scalar values, if the text is known.
    pub fn char_len(&self) -> Option<usize> {
        self.text.as_ref().map(|t| t.chars().count())
    }

    /// Spans that passed validation during parsing.
    pub fn valid_spans(&self) -> impl Iterator<Item = &SpanAnnotation> {
        self.spans
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.flagged.contains(i))
            .map(|(_, s)| s)
    }
}

/// Ordered set of technique names with a dense 0-based id mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TechniqueCatalog {
    techniques: Vec<String>,
    ids: HashMap<String, usize>,
}

impl TechniqueCatalog {
    /// Builds a catalog that keeps the given order. Duplicates are rejected.
    pub fn from_names<I, S>(names: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut techniques = Vec::new();
        let mut ids = HashMap::new();
        for name in names {
            let name = name.into();
            if ids.insert(name.clone(), techniques.len()).is_some() {
                return Err(CorpusError::DuplicateTechnique(name));
            }
            techniques.push(name);
        }
        if techniques.is_empty() {
            return Err(CorpusError::EmptyCatalog);
        }
        Ok(Self { techniques, ids })
    }

    pub fn len(&self) -> usize {
        self.techniques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.techniques.is_empty()
    }

    pub fn id(&self, technique: &str) -> Option<usize> {
        self.ids.get(technique).copied()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.techniques.get(id).map(String::as_str)
    }

    pub fn contains(&self, technique: &str) -> bool {
        self.ids.contains_key(technique)
    }

    pub fn names(&self) -> &[String] {
        &self.techniques
    }
}

impl Serialize for TechniqueCatalog {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.techniques.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TechniqueCatalog {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(deserializer)?;
        TechniqueCatalog::from_names(names).map_err(serde::de::Error::custom)
    }
}

/// Collects every technique used in `samples`, sorted lexicographically.
pub fn build_catalog(samples: &[Sample]) -> Result<TechniqueCatalog, CorpusError> {
    let mut names: Vec<&str> = samples
        .iter()
        .flat_map(|s| s.spans.iter().map(|sp| sp.technique.as_str()))
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    names.sort_unstable();
    TechniqueCatalog::from_names(names)
}

/// A broken sample invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyId,
    EmptyText,
    StartNotBeforeEnd { span: usize },
    OutOfBounds { span: usize, end: usize, text_len: usize },
    UnknownTechnique(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyId => write!(f, "empty id"),
            Violation::EmptyText => write!(f, "empty text"),
            Violation::StartNotBeforeEnd { span } => {
                write!(f, "span {span}: start not before end")
            }
            Violation::OutOfBounds { span, end, text_len } => {
                write!(f, "span {span}: span out of bounds (end {end} > text length {text_len})")
            }
            Violation::UnknownTechnique(t) => write!(f, "unknown technique {t:?}"),
        }
    }
}

impl Violation {
    pub fn span_index(&self) -> Option<usize> {
        match self {
            Violation::StartNotBeforeEnd { span } | Violation::OutOfBounds { span, .. } => {
                Some(*span)
            }
            _ => None,
        }
    }
}

fn span_violations(
    index: usize,
    span: &SpanAnnotation,
    text_len: Option<usize>,
    catalog: Option<&TechniqueCatalog>,
    out: &mut Vec<Violation>,
) {
    if span.start >= span.end {
        out.push(Violation::StartNotBeforeEnd { span: index });
    }
    if let Some(len) = text_len {
        if span.end > len {
            out.push(Violation::OutOfBounds {
                span: index,
                end: span.end,
                text_len: len,
            });
        }
    }
    if let Some(catalog) = catalog {
        if !catalog.contains(&span.technique) {
            out.push(Violation::UnknownTechnique(span.technique.clone()));
        }
    }
}

/// Checks every sample invariant. Never fails; an empty result means clean.
pub fn validate_sample(sample: &Sample, catalog: &TechniqueCatalog) -> Vec<Violation> {
    let mut out = Vec::new();
    if sample.id.is_empty() {
        out.push(Violation::EmptyId);
    }
    let text_len = sample.char_len();
    if text_len == Some(0) {
        out.push(Violation::EmptyText);
    }
    for (i, span) in sample.spans.iter().enumerate() {
        span_violations(i, span, text_len, Some(catalog), &mut out);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WarningKind {
    Malformed(String),
    NegativeOffset { span: usize },
    DuplicateId,
    Invalid(Violation),
}

/// A recoverable problem on one input line (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub line: usize,
    pub id: Option<String>,
    pub kind: WarningKind,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}", self.line)?;
        if let Some(id) = &self.id {
            write!(f, " (id {id:?})")?;
        }
        match &self.kind {
            WarningKind::Malformed(msg) => write!(f, ": malformed line: {msg}"),
            WarningKind::NegativeOffset { span } => {
                write!(f, ": span {span}: negative offset, span dropped")
            }
            WarningKind::DuplicateId => write!(f, ": duplicate id"),
            WarningKind::Invalid(v) => write!(f, ": {v}"),
        }
    }
}

#[derive(Debug, Default)]
pub struct ParsedDataset {
    pub samples: Vec<Sample>,
    pub warnings: Vec<Warning>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawId {
    Str(String),
    Int(i64),
}

#[derive(Deserialize)]
struct RawLabel {
    technique: String,
    start: i64,
    end: i64,
}

#[derive(Deserialize)]
struct RawSample {
    id: RawId,
    text: Option<String>,
    #[serde(rename = "type")]
    genre: Option<String>,
    #[serde(default)]
    labels: Vec<RawLabel>,
}

fn parse_line(
    line_no: usize,
    line: &str,
    catalog: Option<&TechniqueCatalog>,
    warnings: &mut Vec<Warning>,
) -> Option<Sample> {
    let raw: RawSample = match serde_json::from_str(line) {
        Ok(raw) => raw,
        Err(e) => {
            warnings.push(Warning {
                line: line_no,
                id: None,
                kind: WarningKind::Malformed(e.to_string()),
            });
            return None;
        }
    };
    let id = match raw.id {
        RawId::Str(s) => s,
        RawId::Int(n) => n.to_string(),
    };
    let mut sample = Sample {
        id,
        text: raw.text,
        genre: Genre::parse(raw.genre.as_deref()),
        spans: Vec::with_capacity(raw.labels.len()),
        flagged: Vec::new(),
    };
    let sample_id = sample.id.clone();
    let warn = |kind| Warning {
        line: line_no,
        id: Some(sample_id.clone()),
        kind,
    };
    let mut pending = Vec::new();
    if sample.id.is_empty() {
        pending.push(warn(WarningKind::Invalid(Violation::EmptyId)));
    }
    let text_len = sample.char_len();
    for (i, label) in raw.labels.into_iter().enumerate() {
        if label.start < 0 || label.end < 0 {
            pending.push(warn(WarningKind::NegativeOffset { span: i }));
            continue;
        }
        let span = SpanAnnotation::new(label.technique, label.start as usize, label.end as usize);
        let index = sample.spans.len();
        let mut found = Vec::new();
        span_violations(index, &span, text_len, catalog, &mut found);
        if !found.is_empty() {
            sample.flagged.push(index);
            pending.extend(found.into_iter().map(|v| warn(WarningKind::Invalid(v))));
        }
        sample.spans.push(span);
    }
    warnings.extend(pending);
    Some(sample)
}

/// Parses JSONL lines. Bad lines and bad spans become warnings; only stream
/// failures are errors.
pub fn parse_dataset<I>(lines: I, catalog: Option<&TechniqueCatalog>) -> Result<ParsedDataset, CorpusError>
where
    I: IntoIterator<Item = io::Result<String>>,
{
    let mut out = ParsedDataset::default();
    let mut seen = HashSet::new();
    for (i, line) in lines.into_iter().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(sample) = parse_line(line_no, trimmed, catalog, &mut out.warnings) {
            if !seen.insert(sample.id.clone()) {
                out.warnings.push(Warning {
                    line: line_no,
                    id: Some(sample.id.clone()),
                    kind: WarningKind::DuplicateId,
                });
            }
            out.samples.push(sample);
        }
    }
    Ok(out)
}

pub fn parse_reader<R: BufRead>(
    reader: R,
    catalog: Option<&TechniqueCatalog>,
) -> Result<ParsedDataset, CorpusError> {
    parse_dataset(reader.lines(), catalog)
}

pub fn read_dataset(
    path: impl AsRef<Path>,
    catalog: Option<&TechniqueCatalog>,
) -> Result<ParsedDataset, CorpusError> {
    let file = File::open(path)?;
    parse_reader(BufReader::new(file), catalog)
}

#[derive(Serialize)]
struct OutLine<'a> {
    id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<&'a str>,
    labels: &'a [SpanAnnotation],
}

/// Encodes samples as prediction lines `{"id":..,"labels":[..]}`; with
/// `with_text` the raw text is kept between the two keys.
pub fn serialize_predictions(samples: &[Sample], with_text: bool) -> Result<Vec<String>, CorpusError> {
    samples
        .iter()
        .map(|sample| {
            let text_len = sample.char_len();
            for (index, span) in sample.spans.iter().enumerate() {
                let reason = if span.start >= span.end {
                    Some("start not before end")
                } else if text_len.is_some_and(|len| span.end > len) {
                    Some("end past text")
                } else {
                    None
                };
                if let Some(reason) = reason {
                    return Err(CorpusError::InvalidSpan {
                        id: sample.id.clone(),
                        index,
                        start: span.start,
                        end: span.end,
                        reason,
                    });
                }
            }
            let line = OutLine {
                id: &sample.id,
                text: if with_text { sample.text.as_deref() } else { None },
                labels: &sample.spans,
            };
            Ok(serde_json::to_string(&line)?)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TechniqueShare {
    pub technique: String,
    pub count: usize,
    pub percent: f64,
}

/// Span lengths in `[lo, hi]` characters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LengthBin {
    pub lo: usize,
    pub hi: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub samples: usize,
    pub genres: BTreeMap<Genre, usize>,
    pub total_spans: usize,
    /// Sorted by count descending, then name.
    pub techniques: Vec<TechniqueShare>,
    /// Power-of-two buckets: 1, 2-3, 4-7, ...
    pub span_lengths: Vec<LengthBin>,
    pub samples_without_spans: usize,
}

impl CorpusStats {
    pub fn share(&self, technique: &str) -> Option<&TechniqueShare> {
        self.techniques.iter().find(|t| t.technique == technique)
    }
}

pub fn compute_stats(samples: &[Sample]) -> CorpusStats {
    let mut genres = BTreeMap::new();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut bins: BTreeMap<u32, usize> = BTreeMap::new();
    let mut total_spans = 0;
    let mut samples_without_spans = 0;
    for sample in samples {
        *genres.entry(sample.genre).or_insert(0) += 1;
        if sample.spans.is_empty() {
            samples_without_spans += 1;
        }
        for span in &sample.spans {
            total_spans += 1;
            *counts.entry(span.technique.as_str()).or_insert(0) += 1;
            let len = span.len();
            if len > 0 {
                *bins.entry(len.ilog2()).or_insert(0) += 1;
            }
        }
    }
    let mut techniques: Vec<TechniqueShare> = counts
        .into_iter()
        .map(|(technique, count)| TechniqueShare {
            technique: technique.to_string(),
            count,
            percent: 100.0 * count as f64 / total_spans as f64,
        })
        .collect();
    techniques.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.technique.cmp(&b.technique)));
    let span_lengths = bins
        .into_iter()
        .map(|(exp, count)| LengthBin {
            lo: 1 << exp,
            hi: (1 << (exp + 1)) - 1,
            count,
        })
        .collect();
    CorpusStats {
        samples: samples.len(),
        genres,
        total_spans,
        techniques,
        span_lengths,
        samples_without_spans,
    }
}
