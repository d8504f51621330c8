//! Projection of character spans onto token-level BIO tags and back.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{SpanAnnotation, TechniqueCatalog};
use crate::textnorm::Token;

pub type TagId = u32;

/// Reserved id for positions past the real tokens; never part of a `TagSet`.
pub const PAD_TAG: TagId = TagId::MAX;

/// Default sequence length after padding/truncation.
pub const DEFAULT_MAX_LEN: usize = 512;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("spans {0:?} and {1:?} overlap; resolve overlaps before encoding")]
    Overlap(SpanAnnotation, SpanAnnotation),
    #[error("technique {0:?} is not in the tag set")]
    UnknownTechnique(String),
    #[error("{tokens} tokens but {tags} tags")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("tag id {0} is not in the tag set")]
    UnknownTag(TagId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Outside,
    Begin,
    Inside,
}

/// `[O, B-t1, I-t1, ..., B-tK, I-tK]`, following catalog order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSet {
    techniques: Vec<String>,
}

impl TagSet {
    pub const OUTSIDE: TagId = 0;

    pub fn new(catalog: &TechniqueCatalog) -> Self {
        Self {
            techniques: catalog.names().to_vec(),
        }
    }

    /// Number of tags, `2K + 1`.
    pub fn len(&self) -> usize {
        2 * self.techniques.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn technique_count(&self) -> usize {
        self.techniques.len()
    }

    pub fn techniques(&self) -> &[String] {
        &self.techniques
    }

    pub fn begin(&self, technique: usize) -> TagId {
        (2 * technique + 1) as TagId
    }

    pub fn inside(&self, technique: usize) -> TagId {
        (2 * technique + 2) as TagId
    }

    pub fn technique_id(&self, name: &str) -> Option<usize> {
        self.techniques.iter().position(|t| t == name)
    }

    pub fn role(&self, tag: TagId) -> Option<Role> {
        match tag as usize {
            0 => Some(Role::Outside),
            t if t < self.len() && t % 2 == 1 => Some(Role::Begin),
            t if t < self.len() => Some(Role::Inside),
            _ => None,
        }
    }

    /// Technique index of a B or I tag.
    pub fn technique_of(&self, tag: TagId) -> Option<usize> {
        match tag as usize {
            0 => None,
            t if t < self.len() => Some((t - 1) / 2),
            _ => None,
        }
    }

    pub fn name(&self, tag: TagId) -> Option<String> {
        let role = self.role(tag)?;
        Some(match (role, self.technique_of(tag)) {
            (Role::Outside, _) => "O".to_string(),
            (Role::Begin, Some(t)) => format!("B-{}", self.techniques[t]),
            (Role::Inside, Some(t)) => format!("I-{}", self.techniques[t]),
            _ => unreachable!("B/I tags always carry a technique"),
        })
    }

    pub fn id_of(&self, name: &str) -> Option<TagId> {
        if name == "O" {
            return Some(Self::OUTSIDE);
        }
        let (prefix, technique) = name.split_once('-')?;
        let t = self.technique_id(technique)?;
        match prefix {
            "B" => Some(self.begin(t)),
            "I" => Some(self.inside(t)),
            _ => None,
        }
    }

    /// Whether `next` may follow `prev` (`None` = sequence start).
    /// `I-x` is only allowed after `B-x` or `I-x`.
    pub fn allowed(&self, prev: Option<TagId>, next: TagId) -> bool {
        match self.role(next) {
            Some(Role::Inside) => {
                prev.is_some_and(|p| p != Self::OUTSIDE && self.technique_of(p) == self.technique_of(next))
            }
            Some(_) => true,
            None => false,
        }
    }

    /// Row-major `len × len` mask; `mask[prev * len + next]` is true when allowed.
    pub fn transition_mask(&self) -> Vec<bool> {
        let n = self.len();
        let mut mask = Vec::with_capacity(n * n);
        for prev in 0..n {
            for next in 0..n {
                mask.push(self.allowed(Some(prev as TagId), next as TagId));
            }
        }
        mask
    }
}

pub fn build_tagset(catalog: &TechniqueCatalog) -> TagSet {
    TagSet::new(catalog)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapResolution {
    #[default]
    LongestSpanWins,
    FirstStartWins,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingPolicy {
    /// A token is covered by a span when they share at least this many characters.
    pub min_overlap_chars: usize,
    pub overlap_resolution: OverlapResolution,
}

impl Default for EncodingPolicy {
    fn default() -> Self {
        Self {
            min_overlap_chars: 1,
            overlap_resolution: OverlapResolution::LongestSpanWins,
        }
    }
}

fn overlaps(a: &SpanAnnotation, b: &SpanAnnotation) -> bool {
    a.start < b.end && b.start < a.end
}

/// Drops spans until the rest are pairwise disjoint; output sorted by start.
pub fn resolve_overlaps(spans: &[SpanAnnotation], policy: &EncodingPolicy) -> Vec<SpanAnnotation> {
    let mut ranked: Vec<&SpanAnnotation> = spans.iter().filter(|s| !s.is_empty()).collect();
    match policy.overlap_resolution {
        OverlapResolution::LongestSpanWins => ranked.sort_by(|a, b| {
            b.len()
                .cmp(&a.len())
                .then(a.start.cmp(&b.start))
                .then_with(|| a.technique.cmp(&b.technique))
        }),
        OverlapResolution::FirstStartWins => ranked.sort_by(|a, b| {
            a.start
                .cmp(&b.start)
                .then(b.len().cmp(&a.len()))
                .then_with(|| a.technique.cmp(&b.technique))
        }),
    }
    let mut kept: Vec<SpanAnnotation> = Vec::new();
    for span in ranked {
        if !kept.iter().any(|k| overlaps(k, span)) {
            kept.push(span.clone());
        }
    }
    kept.sort_by(|a, b| a.start.cmp(&b.start).then_with(|| a.technique.cmp(&b.technique)));
    kept
}

fn intersection(token: &Token, span: &SpanAnnotation) -> usize {
    token.end.min(span.end).saturating_sub(token.start.max(span.start))
}

/// Assigns BIO tags to `tokens`. A token shared by two adjacent spans goes
/// to the one covering more of its characters (the earlier one on ties).
pub fn encode(
    tokens: &[Token],
    spans: &[SpanAnnotation],
    tagset: &TagSet,
    policy: &EncodingPolicy,
) -> Result<Vec<TagId>, CodecError> {
    let mut sorted: Vec<&SpanAnnotation> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.start, s.end));
    for pair in sorted.windows(2) {
        if overlaps(pair[0], pair[1]) {
            return Err(CodecError::Overlap(pair[0].clone(), pair[1].clone()));
        }
    }
    let techniques = sorted
        .iter()
        .map(|s| {
            tagset
                .technique_id(&s.technique)
                .ok_or_else(|| CodecError::UnknownTechnique(s.technique.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let min_overlap = policy.min_overlap_chars.max(1);
    // (span index, covered chars) per token
    let mut owner: Vec<Option<(usize, usize)>> = vec![None; tokens.len()];
    for (si, span) in sorted.iter().enumerate() {
        let first = tokens.partition_point(|t| t.end <= span.start);
        for (ti, token) in tokens.iter().enumerate().skip(first) {
            if token.start >= span.end {
                break;
            }
            let covered = intersection(token, span);
            if covered >= min_overlap && owner[ti].is_none_or(|(_, c)| covered > c) {
                owner[ti] = Some((si, covered));
            }
        }
    }

    let mut tags = Vec::with_capacity(tokens.len());
    let mut prev: Option<usize> = None;
    for o in owner {
        let si = o.map(|(si, _)| si);
        tags.push(match si {
            None => TagSet::OUTSIDE,
            Some(si) if prev == Some(si) => tagset.inside(techniques[si]),
            Some(si) => tagset.begin(techniques[si]),
        });
        prev = si;
    }
    Ok(tags)
}

/// Rewrites every `I-x` not preceded by `B-x`/`I-x` as `B-x`.
pub fn repair(tags: &[TagId], tagset: &TagSet) -> Vec<TagId> {
    let mut out = Vec::with_capacity(tags.len());
    let mut prev = None;
    for &tag in tags {
        let fixed = if tagset.role(tag) == Some(Role::Inside) && !tagset.allowed(prev, tag) {
            tag - 1
        } else {
            tag
        };
        out.push(fixed);
        prev = Some(fixed);
    }
    out
}

/// Turns maximal `B-x (I-x)*` runs into spans from the first token's start to
/// the last token's end. A stray `I-x` opens a new span, as `repair` would.
pub fn decode(tokens: &[Token], tags: &[TagId], tagset: &TagSet) -> Result<Vec<SpanAnnotation>, CodecError> {
    if tokens.len() != tags.len() {
        return Err(CodecError::LengthMismatch {
            tokens: tokens.len(),
            tags: tags.len(),
        });
    }
    let mut spans = Vec::new();
    let mut open: Option<(usize, usize, usize)> = None; // (technique, start, end)
    let mut prev = None;
    for (token, &tag) in tokens.iter().zip(tags) {
        let role = tagset.role(tag).ok_or(CodecError::UnknownTag(tag))?;
        let continues = role == Role::Inside && tagset.allowed(prev, tag);
        if continues {
            if let Some(run) = open.as_mut() {
                run.2 = token.end;
            }
        } else {
            if let Some((t, s, e)) = open.take() {
                spans.push(SpanAnnotation::new(tagset.techniques[t].clone(), s, e));
            }
            if role != Role::Outside {
                let t = tagset.technique_of(tag).expect("B/I tag");
                open = Some((t, token.start, token.end));
            }
        }
        prev = Some(tag);
    }
    if let Some((t, s, e)) = open {
        spans.push(SpanAnnotation::new(tagset.techniques[t].clone(), s, e));
    }
    Ok(spans)
}

/// Fixed-length tag sequence with an attention mask (1 = real token).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedTagSequence {
    pub tags: Vec<TagId>,
    pub mask: Vec<u8>,
    pub real_token_count: usize,
}

impl MaskedTagSequence {
    /// Tags at real-token positions.
    pub fn real_tags(&self) -> &[TagId] {
        &self.tags[..self.real_token_count]
    }
}

pub fn pad_truncate(tags: &[TagId], max_len: usize, pad: TagId) -> MaskedTagSequence {
    let real = tags.len().min(max_len);
    let mut out = Vec::with_capacity(max_len);
    out.extend_from_slice(&tags[..real]);
    out.resize(max_len, pad);
    let mut mask = vec![1u8; real];
    mask.resize(max_len, 0);
    MaskedTagSequence {
        tags: out,
        mask,
        real_token_count: real,
    }
}
