//! Span-overlap scoring with partial credit.
//!
//! A predicted span `s` and a gold span `t` of the same technique earn
//! `|s ∩ t| / h` where `h` is `|s|` on the precision side and `|t|` on the
//! recall side. Precision averages over predicted spans, recall over gold
//! spans, pooled across the corpus for the micro figures.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::bio_codec::{resolve_overlaps, EncodingPolicy};
use crate::corpus::{Sample, SpanAnnotation, TechniqueCatalog};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("predicted id {0:?} does not occur in the gold file")]
    UnknownId(String),
    #[error("id {0:?} occurs more than once")]
    DuplicateId(String),
    #[error("sample {id:?}: span ({start},{end}) has start not before end")]
    InvalidSpan { id: String, start: usize, end: usize },
    #[error("gold sample {0:?} has no text; character-level analysis needs it")]
    MissingText(String),
    #[error("technique {0:?} is not in the catalog")]
    UnknownTechnique(String),
}

pub fn span_intersection(s: &SpanAnnotation, t: &SpanAnnotation) -> usize {
    s.end.min(t.end).saturating_sub(s.start.max(t.start))
}

fn check_spans(id: &str, spans: &[SpanAnnotation]) -> Result<(), ScoreError> {
    match spans.iter().find(|s| s.start >= s.end) {
        Some(s) => Err(ScoreError::InvalidSpan {
            id: id.to_string(),
            start: s.start,
            end: s.end,
        }),
        None => Ok(()),
    }
}

/// Unnormalized overlap sums for one pair of span lists.
#[derive(Debug, Clone, Copy, Default)]
struct Partial<F> {
    precision_sum: F,
    recall_sum: F,
    pred: usize,
    gold: usize,
}

impl<F: Scalar> Partial<F> {
    fn of<'a>(
        pred: impl Iterator<Item = &'a SpanAnnotation> + Clone,
        gold: impl Iterator<Item = &'a SpanAnnotation> + Clone,
    ) -> Self {
        let mut out = Partial {
            precision_sum: F::zero(),
            recall_sum: F::zero(),
            pred: 0,
            gold: gold.clone().count(),
        };
        for s in pred {
            out.pred += 1;
            for t in gold.clone() {
                if s.technique != t.technique {
                    continue;
                }
                let common = span_intersection(s, t);
                if common == 0 {
                    continue;
                }
                let common = F::from_usize_lossy(common);
                out.precision_sum += common / F::from_usize_lossy(s.len());
                out.recall_sum += common / F::from_usize_lossy(t.len());
            }
        }
        out
    }

    fn add(&mut self, other: Self) {
        self.precision_sum += other.precision_sum;
        self.recall_sum += other.recall_sum;
        self.pred += other.pred;
        self.gold += other.gold;
    }

    fn finish(self) -> (F, F) {
        match (self.pred, self.gold) {
            (0, 0) => (F::one(), F::one()),
            (p, g) => (
                if p == 0 { F::zero() } else { self.precision_sum / F::from_usize_lossy(p) },
                if g == 0 { F::zero() } else { self.recall_sum / F::from_usize_lossy(g) },
            ),
        }
    }
}

/// Overlap-credit precision and recall of `pred` against `gold` for one text.
/// Both empty gives `(1, 1)`; an empty side otherwise scores 0. Values stay
/// within `[0, 1]` as long as neither side repeats or overlaps a span of the
/// same technique.
pub fn precision_recall<F: Scalar>(
    pred: &[SpanAnnotation],
    gold: &[SpanAnnotation],
) -> Result<(F, F), ScoreError> {
    check_spans("", pred)?;
    check_spans("", gold)?;
    Ok(Partial::<F>::of(pred.iter(), gold.iter()).finish())
}

/// Harmonic mean; 0 when `p + r = 0`.
pub fn f1<F: Scalar>(p: F, r: F) -> F {
    if p + r > F::zero() {
        (F::one() + F::one()) * p * r / (p + r)
    } else {
        F::zero()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ScoreOptions {
    /// Macro-average over every technique in `catalog` plus those seen in
    /// either file, instead of only techniques present in gold.
    pub include_absent_techniques: bool,
    pub catalog: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TechniqueScore<F> {
    pub technique: String,
    pub precision: F,
    pub recall: F,
    pub f1: F,
    pub gold_spans: usize,
    pub pred_spans: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport<F> {
    pub micro_precision: F,
    pub micro_recall: F,
    pub micro_f1: F,
    pub macro_f1: F,
    /// Techniques the macro average ran over.
    pub macro_techniques: usize,
    pub gold_spans: usize,
    pub pred_spans: usize,
    pub samples: usize,
    /// Sorted by technique name.
    pub techniques: Vec<TechniqueScore<F>>,
}

/// Pairs each gold sample with its prediction (empty when absent), after
/// checking ids and span validity.
fn align<'a>(gold: &'a [Sample], pred: &'a [Sample]) -> Result<Vec<(&'a Sample, &'a [SpanAnnotation])>, ScoreError> {
    let mut gold_ids = HashSet::with_capacity(gold.len());
    for g in gold {
        if !gold_ids.insert(g.id.as_str()) {
            return Err(ScoreError::DuplicateId(g.id.clone()));
        }
        check_spans(&g.id, &g.spans)?;
    }
    let mut by_id: HashMap<&str, &[SpanAnnotation]> = HashMap::with_capacity(pred.len());
    for p in pred {
        if !gold_ids.contains(p.id.as_str()) {
            return Err(ScoreError::UnknownId(p.id.clone()));
        }
        if by_id.insert(p.id.as_str(), &p.spans).is_some() {
            return Err(ScoreError::DuplicateId(p.id.clone()));
        }
        check_spans(&p.id, &p.spans)?;
    }
    Ok(gold
        .iter()
        .map(|g| (g, by_id.get(g.id.as_str()).copied().unwrap_or(&[])))
        .collect())
}

pub fn score_corpus<F: Scalar>(gold: &[Sample], pred: &[Sample]) -> Result<ScoreReport<F>, ScoreError> {
    score_corpus_with(gold, pred, &ScoreOptions::default())
}

pub fn score_corpus_with<F: Scalar>(
    gold: &[Sample],
    pred: &[Sample],
    options: &ScoreOptions,
) -> Result<ScoreReport<F>, ScoreError> {
    let pairs = align(gold, pred)?;

    let mut micro = Partial::<F>::default();
    let mut gold_techniques = BTreeSet::new();
    let mut all_techniques = BTreeSet::new();
    for (g, p) in &pairs {
        micro.add(Partial::of(p.iter(), g.spans.iter()));
        gold_techniques.extend(g.spans.iter().map(|s| s.technique.as_str()));
        all_techniques.extend(g.spans.iter().chain(p.iter()).map(|s| s.technique.as_str()));
    }
    if options.include_absent_techniques {
        all_techniques.extend(options.catalog.iter().map(String::as_str));
    }
    let (micro_precision, micro_recall) = micro.finish();
    let micro_f1 = f1(micro_precision, micro_recall);

    let mut techniques = Vec::with_capacity(all_techniques.len());
    for &name in &all_techniques {
        let mut part = Partial::<F>::default();
        for (g, p) in &pairs {
            part.add(Partial::of(
                p.iter().filter(|s| s.technique == name),
                g.spans.iter().filter(|s| s.technique == name),
            ));
        }
        let (precision, recall) = if part.gold == 0 && part.pred == 0 {
            (F::zero(), F::zero())
        } else {
            part.finish()
        };
        techniques.push(TechniqueScore {
            technique: name.to_string(),
            precision,
            recall,
            f1: f1(precision, recall),
            gold_spans: part.gold,
            pred_spans: part.pred,
        });
    }

    let basis: Vec<&TechniqueScore<F>> = techniques
        .iter()
        .filter(|t| options.include_absent_techniques || gold_techniques.contains(t.technique.as_str()))
        .collect();
    let macro_f1 = if basis.is_empty() {
        micro_f1
    } else {
        basis.iter().map(|t| t.f1).sum::<F>() / F::from_usize_lossy(basis.len())
    };

    Ok(ScoreReport {
        micro_precision,
        micro_recall,
        micro_f1,
        macro_f1,
        macro_techniques: basis.len(),
        gold_spans: micro.gold,
        pred_spans: micro.pred,
        samples: gold.len(),
        techniques,
    })
}

/// Exact micro precision and recall.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactScore {
    pub precision: BigRational,
    pub recall: BigRational,
}

impl ExactScore {
    pub fn to_f64(&self) -> (f64, f64) {
        (
            self.precision.to_f64().unwrap_or(f64::NAN),
            self.recall.to_f64().unwrap_or(f64::NAN),
        )
    }
}

/// Independent check of the micro figures: every span becomes an explicit
/// set of character positions, overlaps are counted by set intersection,
/// and all sums are exact rationals.
pub fn brute_force_oracle(gold: &[Sample], pred: &[Sample]) -> Result<ExactScore, ScoreError> {
    let pairs = align(gold, pred)?;
    let positions = |s: &SpanAnnotation| -> BTreeSet<usize> { (s.start..s.end).collect() };
    let mut precision_sum = BigRational::zero();
    let mut recall_sum = BigRational::zero();
    let mut n_pred = 0usize;
    let mut n_gold = 0usize;
    for (g, p) in pairs {
        n_gold += g.spans.len();
        n_pred += p.len();
        for s in p {
            let s_pos = positions(s);
            for t in &g.spans {
                if s.technique != t.technique {
                    continue;
                }
                let t_pos = positions(t);
                let common = s_pos.intersection(&t_pos).count();
                precision_sum += BigRational::new(BigInt::from(common), BigInt::from(s_pos.len()));
                recall_sum += BigRational::new(BigInt::from(common), BigInt::from(t_pos.len()));
            }
        }
    }
    let one = || BigRational::from_integer(BigInt::from(1));
    let ratio = |sum: BigRational, n: usize| {
        if n == 0 {
            BigRational::zero()
        } else {
            sum / BigRational::from_integer(BigInt::from(n))
        }
    };
    Ok(if n_pred == 0 && n_gold == 0 {
        ExactScore {
            precision: one(),
            recall: one(),
        }
    } else {
        ExactScore {
            precision: ratio(precision_sum, n_pred),
            recall: ratio(recall_sum, n_gold),
        }
    })
}

/// Character-level confusion counts. Class 0 is `O`; class `k + 1` is
/// catalog technique `k`. `counts[gold][pred]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusedPair {
    pub gold: String,
    pub pred: String,
    pub chars: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TechniqueRecall {
    pub technique: String,
    pub gold_chars: u64,
    pub recall: f64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn diagonal(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn off_diagonal(&self) -> u64 {
        self.total() - self.diagonal()
    }

    pub fn get(&self, gold: &str, pred: &str) -> Option<u64> {
        let g = self.classes.iter().position(|c| c == gold)?;
        let p = self.classes.iter().position(|c| c == pred)?;
        Some(self.counts[g][p])
    }

    /// Technique-to-technique confusions (both sides non-`O`), largest first.
    pub fn top_confused(&self, k: usize) -> Vec<ConfusedPair> {
        let n = self.classes.len();
        let mut pairs: Vec<ConfusedPair> = (1..n)
            .flat_map(|g| (1..n).map(move |p| (g, p)))
            .filter(|&(g, p)| g != p && self.counts[g][p] > 0)
            .map(|(g, p)| ConfusedPair {
                gold: self.classes[g].clone(),
                pred: self.classes[p].clone(),
                chars: self.counts[g][p],
            })
            .collect();
        pairs.sort_by(|a, b| {
            b.chars
                .cmp(&a.chars)
                .then_with(|| a.gold.cmp(&b.gold))
                .then_with(|| a.pred.cmp(&b.pred))
        });
        pairs.truncate(k);
        pairs
    }

    /// Character-level recall per technique present in gold, best first.
    pub fn recall_ranking(&self) -> Vec<TechniqueRecall> {
        let mut out: Vec<TechniqueRecall> = (1..self.classes.len())
            .filter_map(|g| {
                let gold_chars: u64 = self.counts[g].iter().sum();
                (gold_chars > 0).then(|| TechniqueRecall {
                    technique: self.classes[g].clone(),
                    gold_chars,
                    recall: self.counts[g][g] as f64 / gold_chars as f64,
                })
            })
            .collect();
        out.sort_by(|a, b| {
            b.recall
                .total_cmp(&a.recall)
                .then_with(|| a.technique.cmp(&b.technique))
        });
        out
    }
}

fn paint(
    spans: &[SpanAnnotation],
    len: usize,
    catalog: &TechniqueCatalog,
) -> Result<Vec<usize>, ScoreError> {
    let mut classes = vec![0usize; len];
    for span in resolve_overlaps(spans, &EncodingPolicy::default()) {
        let class = catalog
            .id(&span.technique)
            .ok_or_else(|| ScoreError::UnknownTechnique(span.technique.clone()))?
            + 1;
        for c in classes.iter_mut().take(span.end.min(len)).skip(span.start) {
            *c = class;
        }
    }
    Ok(classes)
}

/// Counts, for every character of every gold text, the (gold class, predicted
/// class) pair. Overlaps on either side are resolved longest-span-first.
pub fn confusion(
    gold: &[Sample],
    pred: &[Sample],
    catalog: &TechniqueCatalog,
) -> Result<ConfusionMatrix, ScoreError> {
    let pairs = align(gold, pred)?;
    let n = catalog.len() + 1;
    let mut counts = vec![vec![0u64; n]; n];
    for (g, p) in pairs {
        let len = g.char_len().ok_or_else(|| ScoreError::MissingText(g.id.clone()))?;
        let gold_classes = paint(&g.spans, len, catalog)?;
        let pred_classes = paint(p, len, catalog)?;
        for (gc, pc) in gold_classes.into_iter().zip(pred_classes) {
            counts[gc][pc] += 1;
        }
    }
    let mut classes = Vec::with_capacity(n);
    classes.push("O".to_string());
    classes.extend(catalog.names().iter().cloned());
    Ok(ConfusionMatrix { classes, counts })
}

impl<F: Scalar> fmt::Display for ScoreReport<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "samples {}  gold spans {}  predicted spans {}",
            self.samples, self.gold_spans, self.pred_spans
        )?;
        writeln!(f, "{:<10}{:>10}", "micro-F1", format!("{:.4}", self.micro_f1))?;
        writeln!(
            f,
            "{:<10}{:>10}   (over {} techniques)",
            "macro-F1",
            format!("{:.4}", self.macro_f1),
            self.macro_techniques
        )?;
        writeln!(f, "{:<10}{:>10}", "precision", format!("{:.4}", self.micro_precision))?;
        writeln!(f, "{:<10}{:>10}", "recall", format!("{:.4}", self.micro_recall))?;
        if self.techniques.is_empty() {
            return Ok(());
        }
        let width = self
            .techniques
            .iter()
            .map(|t| t.technique.chars().count())
            .max()
            .unwrap_or(0)
            .max("technique".len());
        writeln!(f)?;
        writeln!(
            f,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>6}  {:>6}",
            "technique", "precision", "recall", "f1", "gold", "pred"
        )?;
        for t in &self.techniques {
            writeln!(
                f,
                "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>6}  {:>6}",
                t.technique, t.precision, t.recall, t.f1, t.gold_spans, t.pred_spans
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderboardRow<F> {
    pub rank: usize,
    pub system: String,
    pub report: ScoreReport<F>,
}

/// Orders systems by micro-F1, best first; ties keep input order.
pub fn leaderboard<F: Scalar>(entries: Vec<(String, ScoreReport<F>)>) -> Vec<LeaderboardRow<F>> {
    let mut entries = entries;
    entries.sort_by(|a, b| {
        b.1.micro_f1
            .partial_cmp(&a.1.micro_f1)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    entries
        .into_iter()
        .enumerate()
        .map(|(i, (system, report))| LeaderboardRow {
            rank: i + 1,
            system,
            report,
        })
        .collect()
}

pub fn render_leaderboard<F: Scalar>(rows: &[LeaderboardRow<F>]) -> String {
    let width = rows
        .iter()
        .map(|r| r.system.chars().count())
        .max()
        .unwrap_or(0)
        .max("system".len());
    let mut out = format!(
        "{:>4}  {:<width$}  {:>8}  {:>8}  {:>9}  {:>8}\n",
        "rank", "system", "micro-F1", "macro-F1", "precision", "recall"
    );
    for r in rows {
        out.push_str(&format!(
            "{:>4}  {:<width$}  {:>8.4}  {:>8.4}  {:>9.4}  {:>8.4}\n",
            r.rank, r.system, r.report.micro_f1, r.report.macro_f1, r.report.micro_precision, r.report.micro_recall
        ));
    }
    out
}

/// Per-technique character totals, keyed by technique name, for cross-checks.
pub fn gold_chars_by_technique(matrix: &ConfusionMatrix) -> BTreeMap<String, u64> {
    matrix
        .classes
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, name)| (name.clone(), matrix.counts[i].iter().sum()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn span(t: &str, s: usize, e: usize) -> SpanAnnotation {
        SpanAnnotation::new(t, s, e)
    }

    fn gold(id: &str, len: usize, spans: Vec<SpanAnnotation>) -> Sample {
        Sample::new(id, "x".repeat(len), spans)
    }

    #[test]
    fn intersection_examples() {
        assert_eq!(span_intersection(&span("L", 0, 10), &span("L", 5, 15)), 5);
        assert_eq!(span_intersection(&span("L", 0, 3), &span("L", 3, 6)), 0);
        assert_eq!(span_intersection(&span("L", 2, 4), &span("L", 0, 10)), 2);
    }

    #[test]
    fn precision_recall_examples() {
        let g = [span("L", 0, 10)];
        assert_eq!(precision_recall::<f64>(&g, &g).unwrap(), (1.0, 1.0));
        assert_eq!(precision_recall::<f64>(&[span("L", 5, 15)], &g).unwrap(), (0.5, 0.5));
        assert_eq!(precision_recall::<f64>(&[span("N", 0, 10)], &g).unwrap(), (0.0, 0.0));
        assert_eq!(precision_recall::<f64>(&[], &[]).unwrap(), (1.0, 1.0));
        assert_eq!(precision_recall::<f64>(&[], &g).unwrap(), (0.0, 0.0));
        assert_eq!(precision_recall::<f64>(&g, &[]).unwrap(), (0.0, 0.0));
        assert!(precision_recall::<f64>(&[span("L", 4, 4)], &g).is_err());
        // f32 path agrees
        assert_eq!(precision_recall::<f32>(&[span("L", 5, 15)], &g).unwrap(), (0.5, 0.5));
    }

    #[test]
    fn f1_examples() {
        assert!((f1(0.2446f64, 0.3202) - 0.2773).abs() <= 0.0005);
        assert_eq!(f1(1.0f64, 1.0), 1.0);
        assert_eq!(f1(0.0f64, 0.0), 0.0);
        assert_eq!(f1(0.5f32, 0.5), 0.5);
    }

    #[test]
    fn corpus_identity_and_empty() {
        let g = vec![
            gold("1", 20, vec![span("L", 0, 10), span("N", 12, 18)]),
            gold("2", 20, vec![span("L", 3, 5)]),
        ];
        let pred: Vec<Sample> = g.iter().map(|s| Sample::prediction(&s.id, s.spans.clone())).collect();
        let r = score_corpus::<f64>(&g, &pred).unwrap();
        assert_eq!((r.micro_precision, r.micro_recall, r.micro_f1, r.macro_f1), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(r.macro_techniques, 2);

        let r = score_corpus::<f64>(&g, &[]).unwrap();
        assert_eq!(r.micro_f1, 0.0);
        assert_eq!(r.pred_spans, 0);
        assert_eq!(r.gold_spans, 3);
    }

    #[test]
    fn corpus_errors() {
        let g = vec![gold("1", 5, vec![])];
        assert_eq!(
            score_corpus::<f64>(&g, &[Sample::prediction("zz", vec![])]),
            Err(ScoreError::UnknownId("zz".into()))
        );
        let dup = vec![Sample::prediction("1", vec![]), Sample::prediction("1", vec![])];
        assert_eq!(score_corpus::<f64>(&g, &dup), Err(ScoreError::DuplicateId("1".into())));
    }

    #[test]
    fn macro_basis() {
        // gold has L only; pred adds a spurious N
        let g = vec![gold("1", 20, vec![span("L", 0, 10)])];
        let p = vec![Sample::prediction("1", vec![span("L", 0, 10), span("N", 12, 15)])];
        let r = score_corpus::<f64>(&g, &p).unwrap();
        assert_eq!(r.macro_techniques, 1);
        assert_eq!(r.macro_f1, 1.0);
        assert_eq!(r.techniques.len(), 2);
        let opts = ScoreOptions {
            include_absent_techniques: true,
            catalog: vec!["L".into(), "N".into(), "X".into()],
        };
        let r = score_corpus_with::<f64>(&g, &p, &opts).unwrap();
        assert_eq!(r.macro_techniques, 3);
        assert!((r.macro_f1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_examples() {
        let g = vec![gold("1", 15, vec![span("L", 0, 10)])];
        let p = vec![Sample::prediction("1", vec![span("L", 5, 15)])];
        assert_eq!(brute_force_oracle(&g, &p).unwrap().to_f64(), (0.5, 0.5));
        let same = vec![Sample::prediction("1", vec![span("L", 0, 10)])];
        assert_eq!(brute_force_oracle(&g, &same).unwrap().to_f64(), (1.0, 1.0));
    }

    #[test]
    fn confusion_examples() {
        let cat = TechniqueCatalog::from_names(["L", "N"]).unwrap();
        let g = vec![gold("1", 10, vec![span("L", 0, 10)])];
        let same = vec![Sample::prediction("1", vec![span("L", 0, 10)])];
        let m = confusion(&g, &same, &cat).unwrap();
        assert_eq!(m.off_diagonal(), 0);
        assert_eq!(m.get("L", "L"), Some(10));

        let swapped = vec![Sample::prediction("1", vec![span("N", 0, 10)])];
        let m = confusion(&g, &swapped, &cat).unwrap();
        assert_eq!(m.get("L", "N"), Some(10));
        assert_eq!(m.total(), 10);
        let top = m.top_confused(3);
        assert_eq!((top[0].gold.as_str(), top[0].pred.as_str(), top[0].chars), ("L", "N", 10));
        assert_eq!(m.recall_ranking()[0].recall, 0.0);

        let missing = vec![Sample::prediction("1", vec![])];
        let no_text = vec![Sample::prediction("1", vec![span("L", 0, 2)])];
        assert_eq!(confusion(&no_text, &missing, &cat), Err(ScoreError::MissingText("1".into())));
        let unknown = vec![Sample::prediction("1", vec![span("Q", 0, 2)])];
        assert!(matches!(confusion(&g, &unknown, &cat), Err(ScoreError::UnknownTechnique(_))));
    }

    #[test]
    fn leaderboard_sorts_by_micro_f1() {
        let g = vec![gold("1", 20, vec![span("L", 0, 10)])];
        let weak = score_corpus::<f64>(&g, &[Sample::prediction("1", vec![span("L", 8, 12)])]).unwrap();
        let strong = score_corpus::<f64>(&g, &[Sample::prediction("1", vec![span("L", 0, 9)])]).unwrap();
        let rows = leaderboard(vec![("weak".into(), weak), ("strong".into(), strong)]);
        assert_eq!(rows[0].system, "strong");
        assert_eq!(rows[1].rank, 2);
        let text = render_leaderboard(&rows);
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().contains("strong"));
    }
}
