//! Seeded generator for small labeled corpora where each technique is marked
//! by its own trigger word. Used for smoke tests and demos.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Genre, Sample, SpanAnnotation};

const FILLERS: &[&str] = &[
    "الناس", "في", "المدينة", "قال", "يوم", "الخبر", "هذا", "على", "من", "الحكومة", "بعد", "الشارع",
    "كتب", "الصحيفة", "عند", "العام", "الماضي", "جديد", "مع", "الوزير", "الشعب", "اليوم", "عن", "الأمس",
];

const TRIGGERS: &[&str] = &["فاسدون", "خونة", "كارثة", "عملاء", "مؤامرة", "أبطال"];

const DIACRITICS: &[char] = &['\u{064E}', '\u{064F}', '\u{0650}', '\u{0651}', '\u{0652}', '\u{064B}'];

#[derive(Debug, Clone)]
pub struct ToyCorpus {
    pub techniques: Vec<String>,
    pub triggers: Vec<String>,
    pub samples: Vec<Sample>,
}

/// `n` samples over `techniques` (at most 6) techniques. Each planted span
/// covers a technique's trigger word and the filler word after it; triggers
/// are never adjacent. When `diacritics` is set, some words get random Arabic vowel marks.
pub fn trigger_corpus(n: usize, techniques: usize, seed: u64, diacritics: bool) -> ToyCorpus {
    assert!((1..=TRIGGERS.len()).contains(&techniques));
    let names: Vec<String> = (0..techniques).map(|i| format!("Technique_{}", (b'A' + i as u8) as char)).collect();
    let triggers: Vec<String> = TRIGGERS[..techniques].iter().map(|s| s.to_string()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let fillers = rng.gen_range(4..12);
        let mut planted = vec![None; fillers];
        for _ in 0..rng.gen_range(0..=2) {
            let at = rng.gen_range(0..fillers);
            planted[at] = Some(rng.gen_range(0..techniques));
        }
        // each trigger goes right before a filler word, so triggers never touch
        let mut words: Vec<(String, Option<usize>)> = Vec::with_capacity(fillers + 2);
        for p in planted {
            if let Some(t) = p {
                words.push((triggers[t].clone(), Some(t)));
            }
            words.push((FILLERS.choose(&mut rng).expect("fillers").to_string(), None));
        }
        if diacritics {
            for (w, _) in words.iter_mut() {
                if rng.gen_bool(0.3) {
                    let mut marked = String::new();
                    for c in w.chars() {
                        marked.push(c);
                        if rng.gen_bool(0.5) {
                            marked.push(*DIACRITICS.choose(&mut rng).expect("marks"));
                        }
                    }
                    *w = marked;
                }
            }
        }

        let mut text = String::new();
        let mut offsets = Vec::with_capacity(words.len());
        let mut pos = 0;
        for (k, (w, _)) in words.iter().enumerate() {
            if k > 0 {
                text.push(' ');
                pos += 1;
            }
            let len = w.chars().count();
            offsets.push((pos, pos + len));
            text.push_str(w);
            pos += len;
        }
        let spans = words
            .iter()
            .enumerate()
            .filter_map(|(k, (_, t))| t.map(|t| SpanAnnotation::new(names[t].clone(), offsets[k].0, offsets[k + 1].1)))
            .collect();
        let mut sample = Sample::new(format!("toy-{i}"), text, spans);
        sample.genre = if rng.gen_bool(0.2) { Genre::Tweet } else { Genre::Paragraph };
        samples.push(sample);
    }
    ToyCorpus {
        techniques: names,
        triggers,
        samples,
    }
}

/// Adds, to roughly `rate` of the samples, one extra span over a random
/// unlabeled word with a random technique. The result is no longer
/// separable by word identity.
pub fn with_label_noise(corpus: &ToyCorpus, rate: f64, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    corpus
        .samples
        .iter()
        .map(|s| {
            let mut s = s.clone();
            if rng.gen_bool(rate) {
                let free: Vec<_> = crate::textnorm::tokenize(s.text())
                    .into_iter()
                    .filter(|t| !s.spans.iter().any(|sp| sp.start < t.end && t.start < sp.end))
                    .collect();
                if let Some(t) = free.choose(&mut rng) {
                    let technique = corpus.techniques.choose(&mut rng).expect("techniques").clone();
                    s.spans.push(SpanAnnotation::new(technique, t.start, t.end));
                    s.spans.sort_by_key(|sp| sp.start);
                }
            }
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_catalog, validate_sample};

    #[test]
    fn deterministic_and_valid() {
        let a = trigger_corpus(50, 3, 1, true);
        let b = trigger_corpus(50, 3, 1, true);
        assert_eq!(a.samples, b.samples);
        let catalog = build_catalog(&a.samples).unwrap();
        assert_eq!(catalog.len(), 3);
        for s in &a.samples {
            assert!(validate_sample(s, &catalog).is_empty(), "{s:?}");
        }
    }
}
