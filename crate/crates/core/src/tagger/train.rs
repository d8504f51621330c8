//! Two-phase structured-perceptron training.
//!
//! Phase 1 updates emission weights only and keeps transitions at zero, so
//! decoding is driven by emissions plus the BIO constraints. Phase 2 updates
//! emissions and transitions together.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bio_codec::{self, EncodingPolicy, TagId, TagSet, DEFAULT_MAX_LEN};
use crate::corpus::{Sample, SpanAnnotation, TechniqueCatalog};
use crate::scalar::Scalar;
use crate::scorer;
use crate::textnorm::{self, CharSpan, NormalizationConfig, OffsetMap, Token};

use super::features::{extract_all, FeatureConfig, FeatureId};
use super::model::{accumulate_emissions, truncated_tokens, ModelHeader, ModelParams, Weights};
use super::viterbi::{path_score, viterbi, Constraints};
use super::TaggerError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub phase1_epochs: usize,
    pub phase2_epochs: usize,
    pub phase1_step: f64,
    pub phase2_step: f64,
    pub shuffle_seed: u64,
    pub averaging: bool,
    pub max_len: usize,
    /// Return the snapshot with the best validation span F1 instead of the last one.
    pub keep_best: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            phase1_epochs: 10,
            phase2_epochs: 5,
            phase1_step: 1.0,
            phase2_step: 0.5,
            shuffle_seed: 0,
            averaging: true,
            max_len: DEFAULT_MAX_LEN,
            keep_best: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, step) in [("phase1_step", self.phase1_step), ("phase2_step", self.phase2_step)] {
            if !(step.is_finite() && step > 0.0) {
                return Err(format!("{name} must be a positive number, got {step}"));
            }
        }
        if self.max_len == 0 {
            return Err("max_len must be at least 1".into());
        }
        Ok(())
    }
}

/// All knobs a training run needs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainSetup {
    pub normalization: NormalizationConfig,
    pub encoding: EncodingPolicy,
    pub features: FeatureConfig,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub phase: u8,
    /// Mean per-token `max(0, score(predicted) - score(gold))`.
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub val_span_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub wall_time_secs: f64,
    /// 1-based epoch of the returned weights when `keep_best` picked a snapshot.
    pub selected_epoch: Option<usize>,
}

struct Prepared {
    features: Vec<Vec<FeatureId>>,
    gold: Vec<TagId>,
}

struct Heldout {
    prepared: Prepared,
    tokens: Vec<Token>,
    map: OffsetMap,
    /// Gold sample restricted to usable spans, under a positional id.
    gold: Sample,
}

fn usable_spans<'a>(
    sample: &'a Sample,
    catalog: &TechniqueCatalog,
) -> Result<Vec<&'a SpanAnnotation>, TaggerError> {
    let len = sample.text().chars().count();
    let mut out = Vec::new();
    for span in sample.valid_spans() {
        if span.start >= span.end || span.end > len {
            continue;
        }
        if !catalog.contains(&span.technique) {
            return Err(TaggerError::InconsistentCatalog {
                id: sample.id.clone(),
                technique: span.technique.clone(),
            });
        }
        out.push(span);
    }
    Ok(out)
}

fn prepare(
    sample: &Sample,
    catalog: &TechniqueCatalog,
    tagset: &TagSet,
    setup: &TrainSetup,
) -> Result<(Prepared, Vec<Token>, OffsetMap), TaggerError> {
    let (normalized, map) = textnorm::normalize(sample.text(), &setup.normalization);
    let mut projected = Vec::new();
    for span in usable_spans(sample, catalog)? {
        if let Some(p) = textnorm::project_span_forward(CharSpan::new(span.start, span.end), &map)? {
            projected.push(SpanAnnotation::new(span.technique.clone(), p.start, p.end));
        }
    }
    let tokens = truncated_tokens(&normalized, setup.train.max_len);
    let resolved = bio_codec::resolve_overlaps(&projected, &setup.encoding);
    let gold = bio_codec::encode(&tokens, &resolved, tagset, &setup.encoding)?;
    let features = extract_all(&tokens, &setup.features);
    Ok((Prepared { features, gold }, tokens, map))
}

/// Current or averaged weights, as seen by the decoder.
enum View<'a, F> {
    Plain(&'a Weights<F>),
    /// `w - u / c`
    Averaged {
        current: &'a Weights<F>,
        accum: &'a Weights<F>,
        count: F,
        transitions: Vec<F>,
    },
}

impl<'a, F: Scalar> View<'a, F> {
    fn averaged(current: &'a Weights<F>, accum: &'a Weights<F>, count: F) -> Self {
        let transitions = current
            .transitions
            .iter()
            .zip(&accum.transitions)
            .map(|(&w, &u)| w - u / count)
            .collect();
        View::Averaged {
            current,
            accum,
            count,
            transitions,
        }
    }

    fn transitions(&self) -> &[F] {
        match self {
            View::Plain(w) => &w.transitions,
            View::Averaged { transitions, .. } => transitions,
        }
    }

    fn emission_matrix(&self, features: &[Vec<FeatureId>], num_tags: usize) -> Vec<F> {
        let mut scores = vec![F::zero(); features.len() * num_tags];
        for (i, f) in features.iter().enumerate() {
            let out = &mut scores[i * num_tags..(i + 1) * num_tags];
            match self {
                View::Plain(w) => accumulate_emissions(&w.emissions, num_tags, f, out),
                View::Averaged {
                    current, accum, count, ..
                } => {
                    for &id in f {
                        let base = id as usize * num_tags;
                        for (t, o) in out.iter_mut().enumerate() {
                            *o += current.emissions[base + t] - accum.emissions[base + t] / *count;
                        }
                    }
                }
            }
        }
        scores
    }

    fn materialize(&self) -> Weights<F> {
        match self {
            View::Plain(w) => (*w).clone(),
            View::Averaged {
                current,
                accum,
                count,
                transitions,
            } => Weights {
                emissions: current
                    .emissions
                    .iter()
                    .zip(&accum.emissions)
                    .map(|(&w, &u)| w - u / *count)
                    .collect(),
                transitions: transitions.clone(),
            },
        }
    }

    /// (predicted path, per-sample hinge loss)
    fn decode(&self, p: &Prepared, constraints: &Constraints) -> Result<(Vec<TagId>, F), TaggerError> {
        let t = constraints.num_tags();
        let scores = self.emission_matrix(&p.features, t);
        let (path, best) = viterbi(&scores, self.transitions(), constraints)?;
        let gold = path_score(&scores, self.transitions(), t, &p.gold);
        let loss = if best > gold { best - gold } else { F::zero() };
        Ok((path, loss))
    }
}

struct Learner<F> {
    current: Weights<F>,
    accum: Weights<F>,
    /// Averaging counter, starts at 1 and grows by one per training instance.
    count: F,
    averaging: bool,
    num_tags: usize,
}

impl<F: Scalar> Learner<F> {
    fn bump(&mut self, emission: bool, index: usize, delta: F) {
        let (w, u) = if emission {
            (&mut self.current.emissions, &mut self.accum.emissions)
        } else {
            (&mut self.current.transitions, &mut self.accum.transitions)
        };
        w[index] += delta;
        if self.averaging {
            u[index] += self.count * delta;
        }
    }

    fn update(&mut self, p: &Prepared, predicted: &[TagId], step: F, with_transitions: bool) {
        let t = self.num_tags;
        for (i, (&gold, &pred)) in p.gold.iter().zip(predicted).enumerate() {
            if gold == pred {
                continue;
            }
            for &f in &p.features[i] {
                let base = f as usize * t;
                self.bump(true, base + gold as usize, step);
                self.bump(true, base + pred as usize, -step);
            }
        }
        if with_transitions {
            for i in 1..p.gold.len() {
                let gold_pair = (p.gold[i - 1], p.gold[i]);
                let pred_pair = (predicted[i - 1], predicted[i]);
                if gold_pair == pred_pair {
                    continue;
                }
                self.bump(false, gold_pair.0 as usize * t + gold_pair.1 as usize, step);
                self.bump(false, pred_pair.0 as usize * t + pred_pair.1 as usize, -step);
            }
        }
    }

    fn view(&self) -> View<'_, F> {
        if self.averaging {
            View::averaged(&self.current, &self.accum, self.count)
        } else {
            View::Plain(&self.current)
        }
    }
}

fn ratio(num: f64, den: usize) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num / den as f64
    }
}

fn evaluate<F: Scalar>(
    view: &View<'_, F>,
    heldout: &[Heldout],
    tagset: &TagSet,
    constraints: &Constraints,
) -> Result<(f64, f64, f64), TaggerError> {
    if heldout.is_empty() {
        return Ok((f64::NAN, f64::NAN, f64::NAN));
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    let mut tokens = 0usize;
    let mut gold = Vec::with_capacity(heldout.len());
    let mut pred = Vec::with_capacity(heldout.len());
    for h in heldout {
        gold.push(h.gold.clone());
        if h.tokens.is_empty() {
            continue;
        }
        let (path, l) = view.decode(&h.prepared, constraints)?;
        loss += l.to_f64().unwrap_or(f64::NAN);
        tokens += path.len();
        correct += path.iter().zip(&h.prepared.gold).filter(|(a, b)| a == b).count();
        let path = bio_codec::repair(&path, tagset);
        let mut spans = Vec::new();
        for s in bio_codec::decode(&h.tokens, &path, tagset)? {
            let raw = textnorm::project_span_backward(CharSpan::new(s.start, s.end), &h.map)?;
            spans.push(SpanAnnotation::new(s.technique, raw.start, raw.end));
        }
        pred.push(Sample::prediction(h.gold.id.clone(), spans));
    }
    let report = scorer::score_corpus::<f64>(&gold, &pred)?;
    Ok((ratio(loss, tokens), ratio(correct as f64, tokens), report.micro_f1))
}

pub fn train<F: Scalar>(
    samples: &[Sample],
    heldout: &[Sample],
    catalog: &TechniqueCatalog,
    setup: &TrainSetup,
) -> Result<(ModelParams<F>, TrainReport), TaggerError> {
    train_with_progress(samples, heldout, catalog, setup, |_| {})
}

/// As [`train`], calling `on_epoch` after every epoch.
pub fn train_with_progress<F: Scalar>(
    samples: &[Sample],
    heldout: &[Sample],
    catalog: &TechniqueCatalog,
    setup: &TrainSetup,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(ModelParams<F>, TrainReport), TaggerError> {
    let started = Instant::now();
    if samples.is_empty() {
        return Err(TaggerError::NoSamples);
    }
    setup.features.validate().map_err(TaggerError::Config)?;
    setup.train.validate().map_err(TaggerError::Config)?;
    if setup.encoding.min_overlap_chars == 0 {
        return Err(TaggerError::Config("min_overlap_chars must be at least 1".into()));
    }

    let tagset = TagSet::new(catalog);
    let constraints = Constraints::bio(&tagset);
    let num_tags = tagset.len();

    let train_set: Vec<Prepared> = samples
        .par_iter()
        .map(|s| prepare(s, catalog, &tagset, setup).map(|(p, _, _)| p))
        .collect::<Result<_, _>>()?;
    let heldout_set: Vec<Heldout> = heldout
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let (prepared, tokens, map) = prepare(s, catalog, &tagset, setup)?;
            let spans = usable_spans(s, catalog)?.into_iter().cloned().collect();
            Ok(Heldout {
                prepared,
                tokens,
                map,
                gold: Sample::new(i.to_string(), s.text(), spans),
            })
        })
        .collect::<Result<_, TaggerError>>()?;

    let hash_dim = setup.features.hash_dim;
    let mut learner = Learner {
        current: Weights::zeros(hash_dim, num_tags),
        accum: if setup.train.averaging {
            Weights::zeros(hash_dim, num_tags)
        } else {
            Weights::zeros(0, 0)
        },
        count: F::one(),
        averaging: setup.train.averaging,
        num_tags,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(setup.train.shuffle_seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let total_epochs = setup.train.phase1_epochs + setup.train.phase2_epochs;
    let mut epochs = Vec::with_capacity(total_epochs);
    let mut best: Option<(f64, usize, Weights<F>)> = None;

    for epoch in 0..total_epochs {
        let phase: u8 = if epoch < setup.train.phase1_epochs { 1 } else { 2 };
        let step = F::from_f64_lossy(if phase == 1 {
            setup.train.phase1_step
        } else {
            setup.train.phase2_step
        });
        order.shuffle(&mut rng);

        let mut loss = 0.0;
        let mut correct = 0usize;
        let mut tokens = 0usize;
        for &idx in &order {
            let p = &train_set[idx];
            if p.gold.is_empty() {
                continue;
            }
            let (path, l) = View::Plain(&learner.current).decode(p, &constraints)?;
            loss += l.to_f64().unwrap_or(f64::NAN);
            tokens += path.len();
            correct += path.iter().zip(&p.gold).filter(|(a, b)| a == b).count();
            if path != p.gold {
                learner.update(p, &path, step, phase == 2);
            }
            learner.count += F::one();
        }

        let view = learner.view();
        let (val_loss, val_acc, val_span_f1) = evaluate(&view, &heldout_set, &tagset, &constraints)?;
        let stats = EpochStats {
            epoch: epoch + 1,
            phase,
            train_loss: ratio(loss, tokens),
            train_acc: ratio(correct as f64, tokens),
            val_loss,
            val_acc,
            val_span_f1,
        };
        if setup.train.keep_best && !heldout_set.is_empty() && best.as_ref().is_none_or(|b| val_span_f1 > b.0) {
            best = Some((val_span_f1, epoch + 1, view.materialize()));
        }
        on_epoch(&stats);
        epochs.push(stats);
    }

    let (weights, selected_epoch) = match best {
        Some((_, epoch, weights)) => (weights, Some(epoch)),
        None => (learner.view().materialize(), None),
    };
    let header = ModelHeader {
        catalog: catalog.clone(),
        features: setup.features.clone(),
        normalization: setup.normalization,
        encoding: setup.encoding,
        max_len: setup.train.max_len,
    };
    let model = ModelParams::from_parts(header, weights);
    let report = TrainReport {
        epochs,
        wall_time_secs: started.elapsed().as_secs_f64(),
        selected_epoch,
    };
    Ok((model, report))
}
