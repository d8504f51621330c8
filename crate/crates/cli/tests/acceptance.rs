//! Acceptance criteria, one line per criterion. Runs as a plain binary so the
//! report is always printed; exits non-zero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use spantag::bio_codec::{self, build_tagset, EncodingPolicy, TagId, TagSet};
use spantag::corpus::{build_catalog, Sample, SpanAnnotation};
use spantag::scorer::{brute_force_oracle, f1, score_corpus};
use spantag::synthetic::{trigger_corpus, with_label_noise};
use spantag::tagger::{self, path_score, viterbi, Constraints};
use spantag::textnorm::{normalize, project_span_backward, project_span_forward, tokenize, CharSpan, Token};
use spantag::{NormalizationConfig, TechniqueCatalog, TrainSetup};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

enum Verdict {
    Done(Outcome),
    Skipped(String),
}

const TECHNIQUES: [&str; 3] = ["Doubt", "Loaded_Language", "Name_Calling"];

fn criterion_1() -> Outcome {
    let v: f64 = f1(0.2446, 0.3202);
    outcome((0.2769..=0.2779).contains(&v), format!("f1(0.2446, 0.3202) = {v:.5}, window [0.2769, 0.2779]"))
}

fn random_corpus(rng: &mut ChaCha8Rng) -> (Vec<Sample>, Vec<Sample>) {
    let alphabet = ['ا', 'ب', 'ت', ' ', 'َ', 'x'];
    let span = |rng: &mut ChaCha8Rng, len: usize| {
        let start = rng.gen_range(0..len);
        let end = rng.gen_range(start + 1..=len);
        SpanAnnotation::new(*TECHNIQUES.choose(rng).unwrap(), start, end)
    };
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for i in 0..rng.gen_range(1..=10) {
        let len = rng.gen_range(1..=50);
        let text: String = (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect();
        let g = (0..rng.gen_range(0..=5)).map(|_| span(rng, len)).collect();
        gold.push(Sample::new(i.to_string(), text, g));
        if rng.gen_bool(0.8) {
            let p = (0..rng.gen_range(0..=5)).map(|_| span(rng, len)).collect();
            pred.push(Sample::prediction(i.to_string(), p));
        }
    }
    (gold, pred)
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let runs = 1000;
    for _ in 0..runs {
        let (gold, pred) = random_corpus(&mut rng);
        let fast = score_corpus::<f64>(&gold, &pred).expect("valid corpus");
        let (p, r) = brute_force_oracle(&gold, &pred).expect("valid corpus").to_f64();
        worst = worst
            .max((fast.micro_precision - p).abs())
            .max((fast.micro_recall - r).abs());
    }
    outcome(worst <= 1e-12, format!("{runs} corpora, max |score - oracle| = {worst:.2e}"))
}

fn tagset() -> TagSet {
    build_tagset(&TechniqueCatalog::from_names(TECHNIQUES).unwrap())
}

fn respects_bio(tags: &[TagId], ts: &TagSet) -> bool {
    let mut prev = None;
    tags.iter().all(|&t| {
        let ok = ts.allowed(prev, t);
        prev = Some(t);
        ok
    })
}

/// Tokens separated by one space, and token-aligned disjoint spans over them.
fn aligned_set(rng: &mut ChaCha8Rng) -> (Vec<Token>, Vec<SpanAnnotation>) {
    let n = rng.gen_range(1..=30);
    let mut tokens = Vec::with_capacity(n);
    let mut pos = 0;
    for _ in 0..n {
        let len = rng.gen_range(1..6);
        tokens.push(Token {
            surface: "ب".repeat(len),
            start: pos,
            end: pos + len,
        });
        pos += len + 1;
    }
    let mut spans = Vec::new();
    let mut i = 0;
    while i < n {
        if rng.gen_bool(0.4) {
            let j = rng.gen_range(i..n.min(i + 4));
            spans.push(SpanAnnotation::new(*TECHNIQUES.choose(rng).unwrap(), tokens[i].start, tokens[j].end));
            i = j + 1;
        } else {
            i += 1;
        }
    }
    (tokens, spans)
}

fn criterion_3() -> Outcome {
    let ts = tagset();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let policy = EncodingPolicy::default();
    let sets = 2000;
    let mut round_trip_failures = 0;
    for _ in 0..sets {
        let (tokens, spans) = aligned_set(&mut rng);
        let tags = bio_codec::encode(&tokens, &spans, &ts, &policy).expect("disjoint spans");
        let mut back = bio_codec::decode(&tokens, &tags, &ts).expect("valid tags");
        let mut want = spans.clone();
        back.sort();
        want.sort();
        if back != want || !respects_bio(&tags, &ts) {
            round_trip_failures += 1;
        }
    }
    let mut repair_failures = 0;
    for _ in 0..sets {
        let raw: Vec<TagId> = (0..rng.gen_range(0..40)).map(|_| rng.gen_range(0..ts.len() as TagId)).collect();
        let once = bio_codec::repair(&raw, &ts);
        if bio_codec::repair(&once, &ts) != once || !respects_bio(&once, &ts) {
            repair_failures += 1;
        }
    }
    outcome(
        round_trip_failures == 0 && repair_failures == 0,
        format!(
            "{sets} span sets, {round_trip_failures} round-trip failures; {sets} tag sequences, {repair_failures} repair failures"
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let instances = 1000;
    let mut mismatches = 0;
    let mut violations = 0;
    for k in 0..instances {
        let techniques = rng.gen_range(1..=2);
        let ts = build_tagset(&TechniqueCatalog::from_names(TECHNIQUES[..techniques].iter().copied()).unwrap());
        let t = ts.len();
        let n = rng.gen_range(1..=6);
        // every fourth instance uses large weights that reward forbidden moves
        let scale = if k % 4 == 0 { 50.0 } else { 1.0 };
        let emissions: Vec<f64> = (0..n * t).map(|_| rng.gen_range(-scale..scale)).collect();
        let transitions: Vec<f64> = (0..t * t).map(|_| rng.gen_range(-scale..scale)).collect();
        let constraints = Constraints::bio(&ts);
        let (path, score) = viterbi(&emissions, &transitions, &constraints).expect("admissible path exists");

        let mut best = f64::NEG_INFINITY;
        let mut candidate = vec![0 as TagId; n];
        for code in 0..t.pow(n as u32) {
            let mut c = code;
            for slot in candidate.iter_mut() {
                *slot = (c % t) as TagId;
                c /= t;
            }
            if constraints.admits(&candidate) {
                best = best.max(path_score(&emissions, &transitions, t, &candidate));
            }
        }
        if (score - best).abs() > 1e-9 || (path_score(&emissions, &transitions, t, &path) - score).abs() > 1e-9 {
            mismatches += 1;
        }
        if !constraints.admits(&path) || !respects_bio(&path, &ts) {
            violations += 1;
        }
    }
    outcome(
        mismatches == 0 && violations == 0,
        format!("{instances} instances (n <= 6, 3 or 5 tags): {mismatches} score mismatches, {violations} BIO violations"),
    )
}

fn criterion_5() -> Outcome {
    let small = |phase1, phase2| {
        let mut setup = TrainSetup::default();
        setup.features.hash_dim = 1 << 16;
        setup.train.phase1_epochs = phase1;
        setup.train.phase2_epochs = phase2;
        setup
    };
    let toy = trigger_corpus(200, 3, 5, true);
    let catalog = build_catalog(&toy.samples).unwrap();
    let (model, _) = tagger::train::<f32>(&toy.samples, &[], &catalog, &small(10, 0)).unwrap();
    let phase1_zero = model.transitions().iter().all(|&w| w == 0.0);

    let noisy = with_label_noise(&toy, 0.3, 5);
    let (model, _) = tagger::train::<f32>(&noisy, &[], &catalog, &small(10, 5)).unwrap();
    let ts = model.tagset();
    let mut observed = std::collections::BTreeSet::new();
    let policy = EncodingPolicy::default();
    for s in &noisy {
        let (norm, map) = normalize(s.text(), &NormalizationConfig::default());
        let tokens = tokenize(&norm);
        let spans: Vec<SpanAnnotation> = s
            .spans
            .iter()
            .filter_map(|sp| {
                project_span_forward(CharSpan::new(sp.start, sp.end), &map)
                    .unwrap()
                    .map(|c| SpanAnnotation::new(sp.technique.clone(), c.start, c.end))
            })
            .collect();
        let spans = bio_codec::resolve_overlaps(&spans, &policy);
        let tags = bio_codec::encode(&tokens, &spans, ts, &policy).unwrap();
        observed.extend(tags.windows(2).map(|w| (w[0], w[1])));
    }
    let moved = observed.iter().filter(|&&(p, q)| model.transition(p, q) != 0.0).count();
    outcome(
        phase1_zero && moved > 0,
        format!(
            "phase 1: transitions all zero = {phase1_zero}; phase 2 on noisy corpus: {moved}/{} observed bigrams nonzero",
            observed.len()
        ),
    )
}

fn criterion_6() -> Outcome {
    let toy = trigger_corpus(500, 3, 6, false);
    let (train, heldout) = toy.samples.split_at(400);
    let catalog = build_catalog(train).unwrap();
    let setup = TrainSetup::default();
    let started = Instant::now();
    let (model, report) = tagger::train::<f32>(train, &[], &catalog, &setup).unwrap();
    let train_time = started.elapsed();
    let norm = model.header().normalization;
    let pred: Vec<Sample> = heldout
        .iter()
        .map(|s| Sample::prediction(s.id.clone(), tagger::predict(&model, s, &norm).unwrap()))
        .collect();
    let f = score_corpus::<f64>(heldout, &pred).unwrap().micro_f1;
    outcome(
        f >= 0.95 && train_time < Duration::from_secs(60) && report.epochs.len() == 15,
        format!(
            "400 train / 100 held out, 10+5 epochs, hash_dim 2^20: held-out micro-F1 {f:.4} (>= 0.95), training {:.1}s (< 60s)",
            train_time.as_secs_f64()
        ),
    )
}

fn diacritized_text(rng: &mut ChaCha8Rng) -> (String, Vec<(usize, usize)>) {
    let letters: Vec<char> = "ابتثجحخدذرزسشصضطظعغفقكلمنهويءأإآةى".chars().collect();
    let marks = ['\u{064B}', '\u{064C}', '\u{064D}', '\u{064E}', '\u{064F}', '\u{0650}', '\u{0651}', '\u{0652}', '\u{0670}', 'ـ'];
    let mut text = String::new();
    let mut words = Vec::new();
    let mut pos = 0;
    for w in 0..rng.gen_range(1..15) {
        if w > 0 {
            text.push(if rng.gen_bool(0.9) { ' ' } else { '،' });
            pos += 1;
            if rng.gen_bool(0.1) {
                text.push(' ');
                pos += 1;
            }
        }
        let start = pos;
        for _ in 0..rng.gen_range(1..7) {
            text.push(*letters.choose(rng).unwrap());
            pos += 1;
            while rng.gen_bool(0.35) {
                text.push(*marks.choose(rng).unwrap());
                pos += 1;
            }
        }
        words.push((start, pos));
    }
    (text, words)
}

fn stripped(text: &str, span: (usize, usize)) -> String {
    text.chars()
        .skip(span.0)
        .take(span.1 - span.0)
        .filter(|&c| !spantag::textnorm::is_arabic_diacritic(c) && c != spantag::textnorm::TATWEEL)
        .collect()
}

fn criterion_7() -> Outcome {
    let ts = tagset();
    let policy = EncodingPolicy::default();
    let config = NormalizationConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let strings = 2000;
    let (mut out_of_bounds, mut content_mismatches, mut checked) = (0, 0, 0);
    for _ in 0..strings {
        let (raw, words) = diacritized_text(&mut rng);
        let raw_len = raw.chars().count();
        let mut gold = Vec::new();
        let mut i = 0;
        while i < words.len() {
            if rng.gen_bool(0.5) {
                let j = rng.gen_range(i..words.len().min(i + 3));
                gold.push(SpanAnnotation::new(*TECHNIQUES.choose(&mut rng).unwrap(), words[i].0, words[j].1));
                i = j + 2;
            } else {
                i += 1;
            }
        }

        let (norm, map) = normalize(&raw, &config);
        let tokens = tokenize(&norm);
        let projected: Vec<SpanAnnotation> = gold
            .iter()
            .filter_map(|g| {
                project_span_forward(CharSpan::new(g.start, g.end), &map)
                    .unwrap()
                    .map(|c| SpanAnnotation::new(g.technique.clone(), c.start, c.end))
            })
            .collect();
        let tags = bio_codec::encode(&tokens, &projected, &ts, &policy).unwrap();
        let decoded = bio_codec::decode(&tokens, &tags, &ts).unwrap();
        let mut recovered: Vec<SpanAnnotation> = decoded
            .iter()
            .map(|d| {
                let c = project_span_backward(CharSpan::new(d.start, d.end), &map).unwrap();
                SpanAnnotation::new(d.technique.clone(), c.start, c.end)
            })
            .collect();
        out_of_bounds += recovered.iter().filter(|r| !(r.start < r.end && r.end <= raw_len)).count();

        recovered.sort_by_key(|r| r.start);
        let mut gold_sorted = gold.clone();
        gold_sorted.sort_by_key(|g| g.start);
        if recovered.len() != gold_sorted.len() {
            content_mismatches += 1;
            continue;
        }
        for (r, g) in recovered.iter().zip(&gold_sorted) {
            checked += 1;
            if r.technique != g.technique || stripped(&raw, (r.start, r.end)) != stripped(&raw, (g.start, g.end)) {
                content_mismatches += 1;
            }
        }
    }
    outcome(
        out_of_bounds == 0 && content_mismatches == 0,
        format!(
            "{strings} diacritized strings, {checked} spans: {out_of_bounds} out of bounds, {content_mismatches} content mismatches"
        ),
    )
}

fn find_split(dir: &Path, split: &str) -> Option<PathBuf> {
    let mut found: Vec<PathBuf> = walk(dir)
        .into_iter()
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("").to_lowercase();
            name.ends_with(".jsonl") && name.contains(split)
        })
        .collect();
    found.sort();
    found.into_iter().next()
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    if let Ok(entries) = fs::read_dir(dir) {
        for e in entries.flatten() {
            let p = e.path();
            if p.is_dir() {
                out.extend(walk(&p));
            } else {
                out.push(p);
            }
        }
    }
    out
}

fn spantag(args: &[&str]) -> Result<Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_spantag"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())
}

fn criterion_8() -> Verdict {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let splits: Vec<Option<PathBuf>> = ["train", "dev", "test"].iter().map(|s| find_split(&data, s)).collect();
    let [Some(train), Some(dev), Some(test)] = &splits[..] else {
        return Verdict::Skipped(format!(
            "ArAIEval train/dev/test *.jsonl files not found under {}",
            data.display()
        ));
    };
    let run = || -> Result<Outcome, String> {
        let mut counts = Vec::new();
        let mut loaded = f64::NAN;
        for (i, path) in [train, dev, test].into_iter().enumerate() {
            let v = spantag(&["--json", "--quiet", "stats", path.to_str().unwrap()])?;
            counts.push(v[0]["samples"].as_u64().unwrap_or(0));
            if i == 0 {
                loaded = v[0]["techniques"]
                    .as_array()
                    .and_then(|ts| ts.iter().find(|t| t["technique"] == "Loaded_Language"))
                    .and_then(|t| t["percent"].as_f64())
                    .unwrap_or(f64::NAN);
            }
        }
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let model = dir.path().join("model.bin");
        let pred = dir.path().join("dev.pred.jsonl");
        let (model, pred) = (model.to_str().unwrap(), pred.to_str().unwrap());
        spantag(&["--json", "--quiet", "train", "--train", train.to_str().unwrap(), "--dev", dev.to_str().unwrap(), "--model", model])?;
        spantag(&["--json", "--quiet", "predict", model, dev.to_str().unwrap(), pred])?;
        let report = spantag(&["--json", "--quiet", "score", dev.to_str().unwrap(), pred])?;
        let f = report["micro_f1"].as_f64().unwrap_or(f64::NAN);
        Ok(outcome(
            counts == [6997, 921, 1046] && (loaded - 55.69).abs() <= 0.2 && f > 0.0151,
            format!(
                "samples {counts:?} (want [6997, 921, 1046]), Loaded Language {loaded:.2}% (55.69 ± 0.2), dev micro-F1 {f:.4} (> 0.0151)"
            ),
        ))
    };
    Verdict::Done(run().unwrap_or_else(|e| outcome(false, format!("command failed: {e}"))))
}

type Check = Box<dyn Fn() -> Verdict>;

fn main() -> ExitCode {
    // libtest flags such as --nocapture or a name filter are accepted and ignored
    let criteria: Vec<(&str, &str, Duration, Check)> = vec![
        ("1", "harmonic-mean consistency", Duration::from_secs(1), Box::new(|| Verdict::Done(criterion_1()))),
        ("2", "scorer-oracle equivalence", Duration::from_secs(10), Box::new(|| Verdict::Done(criterion_2()))),
        ("3", "codec round trip", Duration::from_secs(10), Box::new(|| Verdict::Done(criterion_3()))),
        ("4", "viterbi optimality", Duration::from_secs(10), Box::new(|| Verdict::Done(criterion_4()))),
        ("5", "two-phase contract", Duration::from_secs(30), Box::new(|| Verdict::Done(criterion_5()))),
        ("6", "end-to-end learnability", Duration::MAX, Box::new(|| Verdict::Done(criterion_6()))),
        ("7", "offset safety", Duration::from_secs(10), Box::new(|| Verdict::Done(criterion_7()))),
        ("8", "ArAIEval consistency", Duration::MAX, Box::new(criterion_8)),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let started = Instant::now();
        let verdict = check();
        let elapsed = started.elapsed();
        match verdict {
            Verdict::Skipped(why) => println!("SKIP  [{id}] {name}: {why}"),
            Verdict::Done(o) => {
                let in_time = elapsed <= budget;
                let pass = o.pass && in_time;
                let budget_note = if budget == Duration::MAX {
                    String::new()
                } else {
                    format!(", budget {}s", budget.as_secs())
                };
                println!(
                    "{}  [{id}] {name}: {} ({:.2}s{budget_note})",
                    if pass { "PASS" } else { "FAIL" },
                    o.detail,
                    elapsed.as_secs_f64()
                );
                if !pass {
                    failed += 1;
                }
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 8 criteria failed");
        ExitCode::FAILURE
    }
}
