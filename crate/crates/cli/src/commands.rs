use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use serde::Serialize;

use spantag::corpus::{self, compute_stats, serialize_predictions, CorpusStats, Sample};
use spantag::scorer::{self, confusion, leaderboard, render_leaderboard, ScoreOptions};
use spantag::tagger::{self, EpochStats, TrainReport};
use spantag::{Model, Report, TechniqueCatalog};

use crate::config::RunConfig;
use crate::fail::{CmdResult, Failure};

const SHOWN_WARNINGS: usize = 20;

pub struct Output {
    pub json: bool,
    pub quiet: bool,
}

impl Output {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn emit_json<T: Serialize>(&self, value: &T) -> CmdResult {
        let text = serde_json::to_string_pretty(value).map_err(Failure::internal)?;
        println!("{text}");
        Ok(())
    }
}

/// Reads a JSONL file, reporting warnings on stderr and dropping flagged spans.
fn load(path: &Path, out: &Output) -> CmdResult<Vec<Sample>> {
    let parsed = corpus::read_dataset(path, None).map_err(|e| Failure::user(e).context(format!("{}", path.display())))?;
    if !parsed.warnings.is_empty() {
        for w in parsed.warnings.iter().take(SHOWN_WARNINGS) {
            out.note(format!("warning: {}: {w}", path.display()));
        }
        if parsed.warnings.len() > SHOWN_WARNINGS {
            out.note(format!(
                "warning: {}: {} more warnings",
                path.display(),
                parsed.warnings.len() - SHOWN_WARNINGS
            ));
        }
    }
    Ok(parsed
        .samples
        .into_iter()
        .map(|s| {
            let spans = s.valid_spans().cloned().collect();
            Sample { spans, flagged: Vec::new(), ..s }
        })
        .collect())
}

fn require(path: Option<PathBuf>, what: &str) -> CmdResult<PathBuf> {
    path.ok_or_else(|| Failure::user(anyhow!("no {what} path given (pass it as an argument or set paths.{what})")))
}

fn create(path: &Path) -> CmdResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::user(e).context(format!("cannot create {}", path.display())))
}

/// Sorted union of `extra` and every technique used in `sets`.
fn catalog_of<'a>(extra: &[String], sets: impl IntoIterator<Item = &'a [Sample]>) -> CmdResult<TechniqueCatalog> {
    let mut names: Vec<String> = extra.to_vec();
    for set in sets {
        names.extend(set.iter().flat_map(|s| s.spans.iter().map(|t| t.technique.clone())));
    }
    names.sort();
    names.dedup();
    TechniqueCatalog::from_names(names).map_err(Failure::user)
}

fn ratio(x: f64) -> String {
    if x.is_nan() {
        "n/a".to_string()
    } else {
        format!("{x:.4}")
    }
}

#[derive(Serialize)]
struct FileStats<'a> {
    path: &'a Path,
    #[serde(flatten)]
    stats: CorpusStats,
}

fn render_stats(path: &Path, stats: &CorpusStats) -> String {
    let mut out = format!("{}\n", path.display());
    out += &format!("  samples                {:>8}\n", stats.samples);
    for (genre, n) in &stats.genres {
        out += &format!("    {:<20} {:>8}\n", genre.as_str(), n);
    }
    out += &format!("  spans                  {:>8}\n", stats.total_spans);
    out += &format!("  samples without spans  {:>8}\n", stats.samples_without_spans);
    if !stats.techniques.is_empty() {
        let width = stats
            .techniques
            .iter()
            .map(|t| t.technique.chars().count())
            .max()
            .unwrap_or(0)
            .max("technique".len());
        out += &format!("\n  {:<width$}  {:>7}  {:>7}\n", "technique", "spans", "share");
        for t in &stats.techniques {
            out += &format!("  {:<width$}  {:>7}  {:>6.2}%\n", t.technique, t.count, t.percent);
        }
        out += &format!("\n  {:<12}  {:>7}\n", "span length", "spans");
        for b in &stats.span_lengths {
            let range = if b.lo == b.hi { b.lo.to_string() } else { format!("{}-{}", b.lo, b.hi) };
            out += &format!("  {:<12}  {:>7}\n", range, b.count);
        }
    }
    out
}

pub fn stats(paths: &[PathBuf], out: &Output) -> CmdResult {
    let mut all = Vec::with_capacity(paths.len());
    for path in paths {
        let samples = load(path, out)?;
        if samples.is_empty() {
            return Err(Failure::user(anyhow!("{}: no valid samples", path.display())));
        }
        all.push(FileStats {
            path,
            stats: compute_stats(&samples),
        });
    }
    if out.json {
        return out.emit_json(&all);
    }
    let text: Vec<String> = all.iter().map(|f| render_stats(f.path, &f.stats)).collect();
    print!("{}", text.join("\n"));
    Ok(())
}

pub struct TrainArgs {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub telemetry: Option<PathBuf>,
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    model: &'a Path,
    telemetry: &'a Path,
    train_samples: usize,
    dev_samples: usize,
    techniques: &'a [String],
    selected_epoch: Option<usize>,
    final_val_span_f1: Option<f64>,
    epochs: &'a [EpochStats],
}

fn telemetry_path(model: &Path) -> PathBuf {
    let mut name = model.as_os_str().to_owned();
    name.push(".csv");
    PathBuf::from(name)
}

fn write_telemetry(path: &Path, report: &TrainReport) -> CmdResult {
    let mut writer = csv::Writer::from_writer(create(path)?);
    for row in &report.epochs {
        writer.serialize(row).map_err(Failure::internal)?;
    }
    writer
        .flush()
        .map_err(|e| Failure::user(e).context(format!("cannot write {}", path.display())))
}

pub fn train(config: &RunConfig, args: TrainArgs, out: &Output) -> CmdResult {
    let train_path = require(args.train.or_else(|| config.paths.train.clone()), "train")?;
    let model_path = require(args.model.or_else(|| config.paths.model.clone()), "model")?;
    let dev_path = args.dev.or_else(|| config.paths.dev.clone());
    let telemetry = args
        .telemetry
        .or_else(|| config.paths.telemetry.clone())
        .unwrap_or_else(|| telemetry_path(&model_path));

    let samples = load(&train_path, out)?;
    let heldout = match &dev_path {
        Some(path) => load(path, out)?,
        None => {
            out.note("note: no dev set given; validation metrics will be n/a");
            Vec::new()
        }
    };
    let catalog = catalog_of(&config.scorer.catalog, [&samples[..], &heldout[..]])?;
    out.note(format!(
        "training on {} samples ({} held out), {} techniques",
        samples.len(),
        heldout.len(),
        catalog.len()
    ));

    let (model, report) = tagger::train_with_progress::<f32>(&samples, &heldout, &catalog, &config.setup(), |e| {
        out.note(format!(
            "epoch {:>3}  phase {}  train loss {:.4}  acc {:.4}  val loss {}  acc {}  span F1 {}",
            e.epoch,
            e.phase,
            e.train_loss,
            e.train_acc,
            ratio(e.val_loss),
            ratio(e.val_acc),
            ratio(e.val_span_f1)
        ))
    })?;
    out.note(format!("trained in {:.1}s", report.wall_time_secs));

    let mut writer = create(&model_path)?;
    model.save(&mut writer)?;
    writer
        .flush()
        .map_err(|e| Failure::user(e).context(format!("cannot write {}", model_path.display())))?;
    write_telemetry(&telemetry, &report)?;

    let final_f1 = report
        .selected_epoch
        .and_then(|i| report.epochs.iter().find(|e| e.epoch == i))
        .or(report.epochs.last())
        .map(|e| e.val_span_f1)
        .filter(|f| !f.is_nan());
    if out.json {
        return out.emit_json(&TrainSummary {
            model: &model_path,
            telemetry: &telemetry,
            train_samples: samples.len(),
            dev_samples: heldout.len(),
            techniques: catalog.names(),
            selected_epoch: report.selected_epoch,
            final_val_span_f1: final_f1,
            epochs: &report.epochs,
        });
    }
    println!("model written to {}", model_path.display());
    println!("telemetry written to {}", telemetry.display());
    println!("final validation span micro-F1: {}", final_f1.map_or("n/a".to_string(), |f| format!("{f:.4}")));
    Ok(())
}

pub struct PredictArgs {
    pub model: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub with_text: bool,
}

pub fn load_model(path: &Path) -> CmdResult<Model> {
    let file = File::open(path).map_err(|e| Failure::user(e).context(format!("cannot open model {}", path.display())))?;
    Model::load(BufReader::new(file)).map_err(|e| Failure::from(e).context(format!("cannot load model {}", path.display())))
}

pub fn predict(config: &RunConfig, args: PredictArgs, out: &Output) -> CmdResult {
    let model_path = require(args.model.or_else(|| config.paths.model.clone()), "model")?;
    let input = require(args.input.or_else(|| config.paths.test.clone()), "test")?;
    let output = require(args.output.or_else(|| config.paths.output.clone()), "output")?;

    let model = load_model(&model_path)?;
    let samples = load(&input, out)?;
    let normalization = model.header().normalization;
    let mut predictions = Vec::with_capacity(samples.len());
    for sample in &samples {
        if sample.text.is_none() {
            out.note(format!("warning: sample {:?} has no text; predicting no spans", sample.id));
        }
        let spans = tagger::predict(&model, sample, &normalization)?;
        let mut p = Sample::prediction(sample.id.clone(), spans);
        p.text = sample.text.clone();
        predictions.push(p);
    }
    let lines = serialize_predictions(&predictions, args.with_text).map_err(Failure::internal)?;
    let mut writer = create(&output)?;
    for line in &lines {
        writeln!(writer, "{line}").map_err(Failure::user)?;
    }
    writer.flush().map_err(Failure::user)?;

    let spans: usize = predictions.iter().map(|p| p.spans.len()).sum();
    if out.json {
        #[derive(Serialize)]
        struct Summary<'a> {
            output: &'a Path,
            samples: usize,
            spans: usize,
        }
        return out.emit_json(&Summary {
            output: &output,
            samples: predictions.len(),
            spans,
        });
    }
    if !out.quiet {
        println!("{} predictions ({spans} spans) written to {}", predictions.len(), output.display());
    }
    Ok(())
}

fn score_options(config: &RunConfig) -> ScoreOptions {
    ScoreOptions {
        include_absent_techniques: config.scorer.include_absent_techniques,
        catalog: config.scorer.catalog.clone(),
    }
}

fn score_one(gold: &[Sample], pred: &[Sample], options: &ScoreOptions, pred_path: &Path) -> CmdResult<Report> {
    scorer::score_corpus_with(gold, pred, options).map_err(|e| Failure::user(e).context(format!("{}", pred_path.display())))
}

pub fn score(config: &RunConfig, gold_path: &Path, pred_paths: &[PathBuf], out: &Output) -> CmdResult {
    let gold = load(gold_path, out)?;
    let options = score_options(config);
    if let [pred_path] = pred_paths {
        let pred = load(pred_path, out)?;
        let report = score_one(&gold, &pred, &options, pred_path)?;
        if out.json {
            return out.emit_json(&report);
        }
        print!("{report}");
        return Ok(());
    }
    let mut entries = Vec::with_capacity(pred_paths.len());
    for path in pred_paths {
        let pred = load(path, out)?;
        entries.push((path.display().to_string(), score_one(&gold, &pred, &options, path)?));
    }
    let rows = leaderboard(entries);
    if out.json {
        return out.emit_json(&rows);
    }
    print!("{}", render_leaderboard(&rows));
    Ok(())
}

#[derive(Serialize)]
struct Analysis {
    gold_spans: usize,
    pred_spans: usize,
    total_chars: u64,
    off_diagonal_chars: u64,
    confusion: scorer::ConfusionMatrix,
    top_confused: Vec<scorer::ConfusedPair>,
    recall_ranking: Vec<scorer::TechniqueRecall>,
}

fn render_analysis(a: &Analysis) -> String {
    let m = &a.confusion;
    let mut out = format!("gold spans {}  predicted spans {}\n", a.gold_spans, a.pred_spans);
    out += &format!(
        "characters {}  off-diagonal {} ({:.2}%)\n\n",
        a.total_chars,
        a.off_diagonal_chars,
        if a.total_chars == 0 { 0.0 } else { 100.0 * a.off_diagonal_chars as f64 / a.total_chars as f64 }
    );

    let name_width = m.classes.iter().map(|c| c.chars().count()).max().unwrap_or(1) + 5;
    let cell = m
        .counts
        .iter()
        .flatten()
        .map(|c| c.to_string().len())
        .max()
        .unwrap_or(1)
        .max(m.classes.len().to_string().len() + 2)
        + 1;
    out += "confusion (rows gold, columns predicted, characters)\n";
    out += &format!("{:<name_width$}", "");
    for j in 0..m.classes.len() {
        out += &format!("{:>cell$}", format!("[{j}]"));
    }
    out += "\n";
    for (i, row) in m.counts.iter().enumerate() {
        out += &format!("{:<name_width$}", format!("[{i}] {}", m.classes[i]));
        for c in row {
            out += &format!("{c:>cell$}");
        }
        out += "\n";
    }

    out += "\nmost confused pairs (gold -> predicted)\n";
    if a.top_confused.is_empty() {
        out += "  none\n";
    }
    for p in &a.top_confused {
        out += &format!("  {} -> {}  {} chars\n", p.gold, p.pred, p.chars);
    }

    out += "\nrecall by technique\n";
    let width = a
        .recall_ranking
        .iter()
        .map(|r| r.technique.chars().count())
        .max()
        .unwrap_or(0)
        .max("technique".len());
    out += &format!("  {:<width$}  {:>10}  {:>7}\n", "technique", "gold chars", "recall");
    for r in &a.recall_ranking {
        out += &format!("  {:<width$}  {:>10}  {:>7.4}\n", r.technique, r.gold_chars, r.recall);
    }
    out
}

pub fn analyze(config: &RunConfig, gold_path: &Path, pred_path: &Path, top_k: usize, out: &Output) -> CmdResult {
    let gold = load(gold_path, out)?;
    let pred = load(pred_path, out)?;
    let report = score_one(&gold, &pred, &score_options(config), pred_path)?;

    let catalog = catalog_of(&config.scorer.catalog, [&gold[..], &pred[..]])?;
    let matrix = confusion(&gold, &pred, &catalog).map_err(|e| Failure::user(e).context(format!("{}", pred_path.display())))?;

    let analysis = Analysis {
        gold_spans: report.gold_spans,
        pred_spans: report.pred_spans,
        total_chars: matrix.total(),
        off_diagonal_chars: matrix.off_diagonal(),
        top_confused: matrix.top_confused(top_k),
        recall_ranking: matrix.recall_ranking(),
        confusion: matrix,
    };
    if out.json {
        return out.emit_json(&analysis);
    }
    print!("{}", render_analysis(&analysis));
    io::stdout().flush().map_err(Failure::internal)
}
