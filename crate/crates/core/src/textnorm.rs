//! Arabic-aware normalization with reversible offset maps, and an
//! offset-preserving word tokenizer.
//!
//! Normalization only deletes characters or replaces them one-for-one, so a
//! position map in each direction is enough to carry spans across it.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_categories::UnicodeCategories;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OffsetError {
    #[error("span ({start},{end}) is not within a text of length {len}")]
    OutOfBounds { start: usize, end: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationConfig {
    pub strip_diacritics: bool,
    pub remove_tatweel: bool,
    /// أ إ آ → ا
    pub unify_alef: bool,
    /// ى → ي
    pub unify_yaa: bool,
    /// ة → ه
    pub unify_taa_marbuta: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            strip_diacritics: true,
            remove_tatweel: true,
            unify_alef: false,
            unify_yaa: false,
            unify_taa_marbuta: false,
        }
    }
}

impl NormalizationConfig {
    pub const IDENTITY: Self = Self {
        strip_diacritics: false,
        remove_tatweel: false,
        unify_alef: false,
        unify_yaa: false,
        unify_taa_marbuta: false,
    };

    /// The image of `c`: `None` when deleted.
    pub fn map_char(&self, c: char) -> Option<char> {
        if self.strip_diacritics && is_arabic_diacritic(c) {
            return None;
        }
        if self.remove_tatweel && c == TATWEEL {
            return None;
        }
        let c = match c {
            '\u{0622}' | '\u{0623}' | '\u{0625}' if self.unify_alef => '\u{0627}',
            '\u{0649}' if self.unify_yaa => '\u{064A}',
            '\u{0629}' if self.unify_taa_marbuta => '\u{0647}',
            c => c,
        };
        Some(c)
    }
}

pub const TATWEEL: char = '\u{0640}';

/// Harakat, tanween, shadda, sukun, superscript alef and Quranic annotation marks.
pub fn is_arabic_diacritic(c: char) -> bool {
    matches!(c,
        '\u{0610}'..='\u{061A}'
        | '\u{064B}'..='\u{065F}'
        | '\u{0670}'
        | '\u{06D6}'..='\u{06DC}'
        | '\u{06DF}'..='\u{06E4}'
        | '\u{06E7}'..='\u{06E8}'
        | '\u{06EA}'..='\u{06ED}')
}

/// Bidirectional position map between an original text and its normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffsetMap {
    /// Original index → normalized index, `None` where the character was deleted.
    forward: Vec<Option<usize>>,
    /// Normalized index → original index; strictly increasing.
    backward: Vec<usize>,
}

impl OffsetMap {
    pub fn identity(len: usize) -> Self {
        Self {
            forward: (0..len).map(Some).collect(),
            backward: (0..len).collect(),
        }
    }

    pub fn original_len(&self) -> usize {
        self.forward.len()
    }

    pub fn normalized_len(&self) -> usize {
        self.backward.len()
    }

    pub fn forward(&self) -> &[Option<usize>] {
        &self.forward
    }

    pub fn backward(&self) -> &[usize] {
        &self.backward
    }

    pub fn is_identity(&self) -> bool {
        self.forward.len() == self.backward.len()
    }
}

/// A bare character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    fn check(self, len: usize) -> Result<(), OffsetError> {
        if self.start < self.end && self.end <= len {
            Ok(())
        } else {
            Err(OffsetError::OutOfBounds {
                start: self.start,
                end: self.end,
                len,
            })
        }
    }
}

pub fn normalize(text: &str, config: &NormalizationConfig) -> (String, OffsetMap) {
    let mut out = String::with_capacity(text.len());
    let mut forward = Vec::new();
    let mut backward = Vec::new();
    for (i, c) in text.chars().enumerate() {
        match config.map_char(c) {
            Some(mapped) => {
                forward.push(Some(backward.len()));
                backward.push(i);
                out.push(mapped);
            }
            None => forward.push(None),
        }
    }
    (out, OffsetMap { forward, backward })
}

/// Maps an original-text span into normalized coordinates, rounding inward to
/// the surviving characters. `Ok(None)` means every character was deleted.
pub fn project_span_forward(span: CharSpan, map: &OffsetMap) -> Result<Option<CharSpan>, OffsetError> {
    span.check(map.original_len())?;
    let survivors = &map.forward[span.start..span.end];
    let first = survivors.iter().find_map(|x| *x);
    let last = survivors.iter().rev().find_map(|x| *x);
    Ok(first.zip(last).map(|(s, e)| CharSpan::new(s, e + 1)))
}

/// Maps a normalized-text span back onto the original text.
pub fn project_span_backward(span: CharSpan, map: &OffsetMap) -> Result<CharSpan, OffsetError> {
    span.check(map.normalized_len())?;
    Ok(CharSpan::new(
        map.backward[span.start],
        map.backward[span.end - 1] + 1,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn span(&self) -> CharSpan {
        CharSpan::new(self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Space,
    Word,
    Symbol,
    /// Combining marks and format characters (ZWJ, variation selectors)
    /// stay with whatever run they follow.
    Attach,
}

fn classify(c: char) -> CharClass {
    if c.is_whitespace() {
        CharClass::Space
    } else if c.is_alphanumeric() {
        CharClass::Word
    } else if c.is_mark() || c.is_other_format() {
        CharClass::Attach
    } else {
        CharClass::Symbol
    }
}

/// Splits on whitespace; maximal letter/digit runs and maximal
/// punctuation/symbol runs become separate tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current: Option<(CharClass, Token)> = None;
    for (i, c) in text.chars().enumerate() {
        let class = classify(c);
        let extend = match (&current, class) {
            (_, CharClass::Space) => false,
            (Some(_), CharClass::Attach) => true,
            (Some((run, _)), class) => *run == class,
            (None, _) => false,
        };
        if extend {
            let (_, token) = current.as_mut().expect("run is open");
            token.surface.push(c);
            token.end = i + 1;
            continue;
        }
        if let Some((_, token)) = current.take() {
            tokens.push(token);
        }
        if class != CharClass::Space {
            let run = if class == CharClass::Attach { CharClass::Word } else { class };
            current = Some((
                run,
                Token {
                    surface: c.to_string(),
                    start: i,
                    end: i + 1,
                },
            ));
        }
    }
    if let Some((_, token)) = current {
        tokens.push(token);
    }
    tokens
}
