//! Command-line driver for the punctuation toolkit.
//!
//! One binary, eleven subcommands covering the whole pipeline: corpus
//! preparation (`normalize`, `segment`, `mask`, `stats`, `split`,
//! `oversample`), training (`train`), restoration (`punctuate`) and scoring
//! (`evaluate`, `compare`, `ablate`). The driver is a thin sequential layer:
//! every subcommand reads files, calls into the library and writes files or
//! standard output. All randomness flows from `--seed` (or the config file),
//! so any subcommand that takes a seed is bit-reproducible.
//!
//! Exit codes: 0 on success, 1 on usage errors (unknown flags, bad
//! argument combinations — help goes to standard error), 2 on data errors
//! (unreadable files, malformed corpora, model failures).

use std::fmt;
use std::fs;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use maskpunct_core::dataset::{
    corpus_stats, filter_articles, oversample_questions, prepare_articles, read_articles,
    render_stats_table, shuffle_merge, split_articles, subword_view, window_samples, SplitRatios,
    SplitRole,
};
use maskpunct_core::eval::{
    builtin_baselines, compare_runs, render_delta, render_table, score, EvalReport,
};
use maskpunct_core::inference::{
    punctuate, punctuate_file, SlotPredictor, WindowPolicy, DEFAULT_OVERLAP_SLOTS,
};
use maskpunct_core::model::{train as train_model, PunctModel, TrainConfig};
use maskpunct_core::segment::{CharSplitter, Lexicon, SegmentationMode, Segmenter};
use maskpunct_core::slotmask::{extract_labels, read_jsonl, write_jsonl, LabeledSequence};
use maskpunct_core::textnorm::normalize;
use maskpunct_core::Lang;

/// Environment variable naming the default corpus root for `stats` and
/// `split` when no path argument is given.
const DATA_DIR_VAR: &str = "PUNCT_DATA_DIR";

type DynError = Box<dyn std::error::Error>;

/// Error class that exits with code 1 (command line problem) instead of 2
/// (data problem).
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> DynError {
    Box::new(UsageError(msg.into()))
}

#[derive(Parser)]
#[command(
    name = "maskpunct",
    version,
    about = "Restore punctuation in unpunctuated transcripts (English, Mandarin, Malay)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize raw text: unify punctuation variants, verbalize Malay
    /// digits and currency, lowercase Latin scripts, collapse whitespace.
    Normalize(NormalizeArgs),
    /// Split text into words (whitespace for en/ms, lexicon for zh) or
    /// subword pieces; one space-joined line out per line in.
    Segment(SegmentArgs),
    /// Turn punctuated lines into labeled word sequences (JSON lines).
    Mask(MaskArgs),
    /// Count sequences, words and per-class labels of corpora or splits.
    Stats(StatsArgs),
    /// Normalize a corpus and split it into train/valid/test JSONL files.
    Split(SplitArgs),
    /// Duplicate question sentences in a training split to fight class
    /// imbalance.
    Oversample(OversampleArgs),
    /// Train a slot classifier and write a checkpoint directory.
    Train(TrainArgs),
    /// Restore punctuation in plain text with a trained checkpoint.
    Punctuate(PunctuateArgs),
    /// Score predicted sequences against references.
    Evaluate(EvaluateArgs),
    /// Compare two saved evaluation reports, or print the bundled reference
    /// scores.
    Compare(CompareArgs),
    /// Word-level versus subword-level slotting: evaluate two checkpoints or
    /// train both variants, then report the difference.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct NormalizeArgs {
    /// Language of the input text.
    #[arg(long, default_value = "en")]
    lang: Lang,
    /// Input file (standard input when omitted).
    input: Option<PathBuf>,
    /// Output file (standard output when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long, default_value = "en")]
    lang: Lang,
    /// Word or subword granularity.
    #[arg(long, default_value = "word")]
    mode: SegmentationMode,
    /// Word lexicon (TSV: word, frequency). Defaults to the bundled Mandarin
    /// lexicon for zh word mode.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    input: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MaskArgs {
    #[arg(long, default_value = "en")]
    lang: Lang,
    #[arg(long, default_value = "word")]
    mode: SegmentationMode,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Punctuated text, one sequence per line (standard input when omitted).
    input: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long, default_value = "en")]
    lang: Lang,
    #[arg(long, default_value = "word")]
    mode: SegmentationMode,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Corpus files/directories or prepared .jsonl splits; one table row
    /// each ($PUNCT_DATA_DIR when omitted).
    paths: Vec<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long, default_value = "en")]
    lang: Lang,
    #[arg(long, default_value = "word")]
    mode: SegmentationMode,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Corpus file or directory ($PUNCT_DATA_DIR when omitted).
    path: Option<PathBuf>,
    /// Directory for train.jsonl, valid.jsonl and test.jsonl.
    #[arg(long, default_value = "splits")]
    out_dir: PathBuf,
    /// Train fraction.
    #[arg(long, default_value_t = 0.8)]
    train: f64,
    /// Validation fraction.
    #[arg(long, default_value_t = 0.1)]
    valid: f64,
    /// Test fraction.
    #[arg(long, default_value_t = 0.1)]
    test: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep articles with two sentences or fewer instead of dropping them.
    #[arg(long)]
    keep_short: bool,
}

#[derive(Args)]
struct OversampleArgs {
    /// Training split (JSONL).
    input: PathBuf,
    /// Target ratio of question sentences relative to the current count.
    #[arg(long, default_value_t = 2.0)]
    multiplier: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Training split (JSONL); repeat the flag to shuffle-merge several
    /// languages into one multilingual run.
    #[arg(long, required = true)]
    train: Vec<PathBuf>,
    /// Validation split (JSONL); picks the checkpoint with the best overall
    /// F1 when given.
    #[arg(long)]
    valid: Option<PathBuf>,
    /// Checkpoint directory to write.
    #[arg(long)]
    out: PathBuf,
    /// key=value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Single config override, e.g. --set max_steps=500 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct PunctuateArgs {
    #[arg(long, default_value = "en")]
    lang: Lang,
    #[arg(long, default_value = "word")]
    mode: SegmentationMode,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Checkpoint directory written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Window width in slots (defaults to the checkpoint's capacity).
    #[arg(long)]
    window: Option<usize>,
    /// Overlap between consecutive windows in slots.
    #[arg(long)]
    overlap: Option<usize>,
    /// Input file (standard input when omitted).
    input: Option<PathBuf>,
    /// Output file (standard output when omitted). With both --output and an
    /// input file, a JSON run summary is printed to standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Predicted sequences (JSONL).
    #[arg(long)]
    pred: PathBuf,
    /// Reference sequences (JSONL), same word streams in the same order.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Row label in the rendered table.
    #[arg(long, default_value = "run")]
    name: String,
    /// Also write the report as JSON (readable by `compare`).
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Two report files saved by `evaluate --json`; the delta row is
    /// first minus second, in percentage points.
    reports: Vec<PathBuf>,
    /// Print the bundled reference scores instead.
    #[arg(long)]
    builtin: bool,
    /// Restrict --builtin output to one language.
    #[arg(long)]
    lang: Option<Lang>,
}

#[derive(Args)]
struct AblateArgs {
    /// Word-level test split (JSONL).
    #[arg(long)]
    test: PathBuf,
    /// Train both variants from this word-level split (the subword variant
    /// re-expresses it at subword granularity; same text, more slots).
    #[arg(long)]
    train: Option<PathBuf>,
    /// Validation split for the trained variants (JSONL, word-level).
    #[arg(long)]
    valid: Option<PathBuf>,
    /// Evaluate this checkpoint as the word-granularity run.
    #[arg(long)]
    word_model: Option<PathBuf>,
    /// Evaluate this checkpoint as the subword-granularity run. With
    /// checkpoints the test split is used exactly as given for both rows, so
    /// identical checkpoints score identically.
    #[arg(long)]
    subword_model: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Directory for the two trained checkpoints (word/ and subword/).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let is_usage_error = err.use_stderr();
            let _ = err.print();
            return if is_usage_error {
                ExitCode::from(1)
            } else {
                // --help and --version land here; they are not errors.
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) if err.is::<UsageError>() => {
            eprintln!("usage error: {err}");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), DynError> {
    match command {
        Command::Normalize(args) => run_normalize(args),
        Command::Segment(args) => run_segment(args),
        Command::Mask(args) => run_mask(args),
        Command::Stats(args) => run_stats(args),
        Command::Split(args) => run_split(args),
        Command::Oversample(args) => run_oversample(args),
        Command::Train(args) => run_train(args),
        Command::Punctuate(args) => run_punctuate(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Compare(args) => run_compare(args),
        Command::Ablate(args) => run_ablate(args),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing

/// Owns the segmenter's borrowed parts (lexicon, subword splitter) for the
/// duration of a subcommand.
struct SegmenterParts {
    lang: Lang,
    mode: SegmentationMode,
    lexicon: Option<Lexicon>,
    splitter: CharSplitter,
}

impl SegmenterParts {
    fn new(
        lang: Lang,
        mode: SegmentationMode,
        lexicon_path: Option<&Path>,
    ) -> Result<SegmenterParts, DynError> {
        let lexicon = match (lang, mode, lexicon_path) {
            (_, _, Some(path)) => Some(Lexicon::from_path(path)?),
            (Lang::Zh, SegmentationMode::Word, None) => Some(Lexicon::builtin_zh()),
            _ => None,
        };
        Ok(SegmenterParts {
            lang,
            mode,
            lexicon,
            splitter: CharSplitter,
        })
    }

    fn segmenter(&self) -> Segmenter<'_> {
        let segmenter = Segmenter::new(self.lang, self.mode, self.lexicon.as_ref());
        match self.mode {
            SegmentationMode::Subword => segmenter.with_splitter(&self.splitter),
            SegmentationMode::Word => segmenter,
        }
    }
}

fn read_input(path: Option<&Path>) -> Result<String, DynError> {
    match path {
        Some(path) => Ok(fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?),
        None => {
            let mut text = String::new();
            io::stdin().read_to_string(&mut text)?;
            Ok(text)
        }
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), DynError> {
    match path {
        Some(path) => fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()))?,
        None => io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn read_jsonl_path(path: &Path) -> Result<Vec<LabeledSequence>, DynError> {
    let file = fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(read_jsonl(BufReader::new(file)).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn write_jsonl_path(path: Option<&Path>, seqs: &[LabeledSequence]) -> Result<(), DynError> {
    let mut buf = Vec::new();
    write_jsonl(seqs, &mut buf)?;
    write_output(path, &buf)
}

/// Corpus paths from the command line, or the `PUNCT_DATA_DIR` default.
fn resolve_paths(paths: Vec<PathBuf>) -> Result<Vec<PathBuf>, DynError> {
    if !paths.is_empty() {
        return Ok(paths);
    }
    match std::env::var_os(DATA_DIR_VAR) {
        Some(dir) if !dir.is_empty() => Ok(vec![PathBuf::from(dir)]),
        _ => Err(usage(format!(
            "no corpus path given and {DATA_DIR_VAR} is not set"
        ))),
    }
}

/// Reads sequences from a prepared `.jsonl` split or from a raw corpus
/// (normalizing and extracting labels). Returns the sequences and the count
/// of stray glyphs dropped during extraction.
fn load_sequences(
    path: &Path,
    lang: Lang,
    segmenter: &Segmenter<'_>,
) -> Result<(Vec<LabeledSequence>, usize), DynError> {
    if path.extension().is_some_and(|ext| ext == "jsonl") {
        Ok((read_jsonl_path(path)?, 0))
    } else {
        let articles = read_articles(path, lang)?;
        Ok(prepare_articles(&articles, segmenter)?)
    }
}

fn row_label(path: &Path) -> String {
    path.file_stem()
        .map(|stem| stem.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Config file, then `--set key=value` pairs, then the `--seed` flag.
fn load_train_config(
    config: Option<&Path>,
    seed: Option<u64>,
    overrides: &[String],
) -> Result<TrainConfig, DynError> {
    let mut cfg = match config {
        Some(path) => TrainConfig::from_kv_text(
            &fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?,
        )?,
        None => TrainConfig::default(),
    };
    for pair in overrides {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{pair}`")))?;
        cfg.set(key.trim(), value.trim())
            .map_err(|e| usage(e.to_string()))?;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Windows `seqs` to the model's capacity, predicts every window and scores
/// the predictions against the labels.
fn evaluate_model(model: &PunctModel, seqs: &[LabeledSequence]) -> Result<EvalReport, DynError> {
    let windows = window_samples(seqs, model.max_slots().max(1))?;
    let mut refs = Vec::with_capacity(windows.len());
    let mut preds = Vec::with_capacity(windows.len());
    for window in windows {
        let labels = model.predict(&window.words)?;
        preds.push(LabeledSequence::new(
            window.lang,
            window.words.clone(),
            labels,
        )?);
        refs.push(window);
    }
    Ok(EvalReport::from_counts(score(&refs, &preds)?))
}

// ---------------------------------------------------------------------------
// Subcommands

fn run_normalize(args: NormalizeArgs) -> Result<(), DynError> {
    let text = read_input(args.input.as_deref())?;
    let mut out = String::new();
    for (index, line) in text.lines().enumerate() {
        let normalized =
            normalize(line, args.lang).map_err(|e| format!("line {}: {e}", index + 1))?;
        out.push_str(&normalized);
        out.push('\n');
    }
    write_output(args.output.as_deref(), out.as_bytes())
}

fn run_segment(args: SegmentArgs) -> Result<(), DynError> {
    let parts = SegmenterParts::new(args.lang, args.mode, args.lexicon.as_deref())?;
    let segmenter = parts.segmenter();
    let text = read_input(args.input.as_deref())?;
    let mut out = String::new();
    for (index, line) in text.lines().enumerate() {
        let words = segmenter
            .words(line)
            .map_err(|e| format!("line {}: {e}", index + 1))?;
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    write_output(args.output.as_deref(), out.as_bytes())
}

fn run_mask(args: MaskArgs) -> Result<(), DynError> {
    let parts = SegmenterParts::new(args.lang, args.mode, args.lexicon.as_deref())?;
    let segmenter = parts.segmenter();
    let text = read_input(args.input.as_deref())?;
    let mut seqs = Vec::new();
    let mut dropped = 0;
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let context = |e: &dyn fmt::Display| format!("line {}: {e}", index + 1);
        let normalized = normalize(line, args.lang).map_err(|e| context(&e))?;
        let extraction = extract_labels(&normalized, &segmenter).map_err(|e| context(&e))?;
        dropped += extraction.dropped_glyphs;
        if !extraction.seq.words.is_empty() {
            seqs.push(extraction.seq);
        }
    }
    write_jsonl_path(args.output.as_deref(), &seqs)?;
    if dropped > 0 {
        eprintln!("note: {dropped} stray punctuation glyph(s) dropped or collapsed");
    }
    Ok(())
}

fn run_stats(args: StatsArgs) -> Result<(), DynError> {
    let parts = SegmenterParts::new(args.lang, args.mode, args.lexicon.as_deref())?;
    let segmenter = parts.segmenter();
    let mut rows = Vec::new();
    let mut dropped = 0;
    for path in resolve_paths(args.paths)? {
        let (seqs, d) = load_sequences(&path, args.lang, &segmenter)?;
        dropped += d;
        rows.push((row_label(&path), corpus_stats(&seqs)));
    }
    print!("{}", render_stats_table(&rows));
    if dropped > 0 {
        eprintln!("note: {dropped} stray punctuation glyph(s) dropped or collapsed");
    }
    Ok(())
}

fn run_split(args: SplitArgs) -> Result<(), DynError> {
    let parts = SegmenterParts::new(args.lang, args.mode, args.lexicon.as_deref())?;
    let segmenter = parts.segmenter();
    let path = resolve_paths(args.path.into_iter().collect())?.remove(0);
    let articles = read_articles(&path, args.lang)?;
    let (mut seqs, dropped) = prepare_articles(&articles, &segmenter)?;
    if !args.keep_short {
        seqs = filter_articles(seqs);
    }
    let ratios = SplitRatios::new(args.train, args.valid, args.test)?;
    let sets = split_articles(seqs, &ratios, args.seed);

    fs::create_dir_all(&args.out_dir).map_err(|e| format!("{}: {e}", args.out_dir.display()))?;
    let mut rows = Vec::new();
    for (name, seqs) in [
        ("train", &sets.train),
        ("valid", &sets.valid),
        ("test", &sets.test),
    ] {
        write_jsonl_path(Some(&args.out_dir.join(format!("{name}.jsonl"))), seqs)?;
        rows.push((name.to_string(), corpus_stats(seqs)));
    }
    print!("{}", render_stats_table(&rows));
    if dropped > 0 {
        eprintln!("note: {dropped} stray punctuation glyph(s) dropped or collapsed");
    }
    Ok(())
}

fn run_oversample(args: OversampleArgs) -> Result<(), DynError> {
    let seqs = read_jsonl_path(&args.input)?;
    let before = corpus_stats(&seqs).questions;
    let seqs = oversample_questions(seqs, args.multiplier, args.seed, SplitRole::Train)?;
    let after = corpus_stats(&seqs).questions;
    write_jsonl_path(args.output.as_deref(), &seqs)?;
    eprintln!("questions: {before} -> {after}");
    Ok(())
}

fn run_train(args: TrainArgs) -> Result<(), DynError> {
    let cfg = load_train_config(args.config.as_deref(), args.seed, &args.set)?;
    let sets = args
        .train
        .iter()
        .map(|path| read_jsonl_path(path))
        .collect::<Result<Vec<_>, _>>()?;
    let merged = shuffle_merge(sets, cfg.seed);
    let train_windows = window_samples(&merged, cfg.window_slots())?;
    let valid_windows = match &args.valid {
        Some(path) => window_samples(&read_jsonl_path(path)?, cfg.window_slots())?,
        None => Vec::new(),
    };

    fs::create_dir_all(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;
    let (_, report) = train_model(&cfg, &train_windows, &valid_windows, Some(&args.out))?;
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "out_dir": args.out,
            "train_windows": train_windows.len(),
            "valid_windows": valid_windows.len(),
            "steps": cfg.max_steps,
            "best_step": report.best_step,
            "best_val_f1": report.best_val_f1,
            "final_train_loss": report.final_train_loss,
        }))?
    );
    Ok(())
}

fn run_punctuate(args: PunctuateArgs) -> Result<(), DynError> {
    let model = PunctModel::load(&args.model)?;
    let parts = SegmenterParts::new(args.lang, args.mode, args.lexicon.as_deref())?;
    let segmenter = parts.segmenter();
    let default_policy = WindowPolicy::for_predictor(&model);
    let policy = match (args.window, args.overlap) {
        (None, None) => default_policy,
        (window, overlap) => {
            let window = window.unwrap_or(default_policy.window_slots);
            let overlap = overlap.unwrap_or_else(|| DEFAULT_OVERLAP_SLOTS.min(window / 2));
            WindowPolicy::new(window, overlap)?
        }
    };

    if let (Some(input), Some(output)) = (&args.input, &args.output) {
        let summary = punctuate_file(input, output, &segmenter, &model, &policy)?;
        if summary.stripped_glyphs > 0 {
            eprintln!(
                "note: stripped {} existing punctuation glyph(s) before restoring",
                summary.stripped_glyphs
            );
        }
        println!("{}", serde_json::to_string_pretty(&summary)?);
        return Ok(());
    }

    let text = read_input(args.input.as_deref())?;
    let mut out = String::new();
    let mut stripped = 0;
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            out.push('\n');
            continue;
        }
        let restored = punctuate(line, &segmenter, &model, &policy)
            .map_err(|e| format!("line {}: {e}", index + 1))?;
        stripped += restored.stripped_glyphs;
        out.push_str(&restored.text);
        out.push('\n');
    }
    write_output(args.output.as_deref(), out.as_bytes())?;
    if stripped > 0 {
        eprintln!("note: stripped {stripped} existing punctuation glyph(s) before restoring");
    }
    Ok(())
}

fn run_evaluate(args: EvaluateArgs) -> Result<(), DynError> {
    let refs = read_jsonl_path(&args.reference)?;
    let preds = read_jsonl_path(&args.pred)?;
    let report = EvalReport::from_counts(score(&refs, &preds)?);
    print!("{}", render_table(&[(args.name, report.clone())]));
    if let Some(path) = &args.json {
        fs::write(path, serde_json::to_string_pretty(&report)?)
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}

fn run_compare(args: CompareArgs) -> Result<(), DynError> {
    if args.builtin {
        if !args.reports.is_empty() {
            return Err(usage("--builtin takes no report files"));
        }
        print_builtin_baselines(args.lang);
        return Ok(());
    }
    if args.lang.is_some() {
        return Err(usage("--lang only applies to --builtin"));
    }
    let [first, second] = args.reports.as_slice() else {
        return Err(usage(
            "compare takes exactly two report files (or --builtin)",
        ));
    };
    let read_report = |path: &Path| -> Result<EvalReport, DynError> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?)
    };
    let a = read_report(first)?;
    let b = read_report(second)?;
    let (name_a, name_b) = (row_label(first), row_label(second));
    print!(
        "{}",
        render_table(&[(name_a.clone(), a.clone()), (name_b.clone(), b.clone())])
    );
    print!(
        "{}",
        render_delta(&format!("{name_a} - {name_b}"), &compare_runs(&a, &b))
    );
    Ok(())
}

fn print_builtin_baselines(lang: Option<Lang>) {
    let table = builtin_baselines();
    let triple = |t: [f64; 3]| format!("{:.1}/{:.1}/{:.1}", t[0], t[1], t[2]);
    println!(
        "bundled reference scores, version {} (PR/RC/F1, %)",
        table.version
    );
    println!(
        "{:<22} {:<5} {:<18} {:<18} {:<18} {:<18}",
        "system", "lang", "period", "comma", "question", "overall"
    );
    for row in table
        .systems
        .iter()
        .filter(|r| lang.is_none_or(|l| l == r.lang))
    {
        println!(
            "{:<22} {:<5} {:<18} {:<18} {:<18} {:<18}",
            row.system,
            row.lang.code(),
            triple(row.period),
            triple(row.comma),
            triple(row.question),
            triple(row.overall),
        );
    }
}

fn run_ablate(args: AblateArgs) -> Result<(), DynError> {
    let test = read_jsonl_path(&args.test)?;
    let (word_report, subword_report) = match (&args.word_model, &args.subword_model, &args.train) {
        (Some(word_dir), Some(subword_dir), None) => {
            let word = PunctModel::load(word_dir)?;
            let subword = PunctModel::load(subword_dir)?;
            (
                evaluate_model(&word, &test)?,
                evaluate_model(&subword, &test)?,
            )
        }
        (None, None, Some(train_path)) => {
            let cfg = load_train_config(args.config.as_deref(), args.seed, &args.set)?;
            let train_seqs = read_jsonl_path(train_path)?;
            let valid_seqs = match &args.valid {
                Some(path) => read_jsonl_path(path)?,
                None => Vec::new(),
            };
            let splitter = CharSplitter;
            let sub_train = subword_view(&train_seqs, &splitter)?;
            let sub_valid = subword_view(&valid_seqs, &splitter)?;
            let sub_test = subword_view(&test, &splitter)?;

            let (word_out, subword_out) = match &args.out {
                Some(dir) => {
                    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
                    (Some(dir.join("word")), Some(dir.join("subword")))
                }
                None => (None, None),
            };
            let windows = |seqs: &[LabeledSequence]| window_samples(seqs, cfg.window_slots());
            let (word_model, _) = train_model(
                &cfg,
                &windows(&train_seqs)?,
                &windows(&valid_seqs)?,
                word_out.as_deref(),
            )?;
            let (subword_model, _) = train_model(
                &cfg,
                &windows(&sub_train)?,
                &windows(&sub_valid)?,
                subword_out.as_deref(),
            )?;
            (
                evaluate_model(&word_model, &test)?,
                evaluate_model(&subword_model, &sub_test)?,
            )
        }
        _ => {
            return Err(usage(
                "ablate needs either --word-model and --subword-model, or --train \
                 (optionally --valid) to train both variants",
            ))
        }
    };
    print!(
        "{}",
        render_table(&[
            ("word".to_string(), word_report.clone()),
            ("subword".to_string(), subword_report.clone()),
        ])
    );
    print!(
        "{}",
        render_delta(
            "word - subword",
            &compare_runs(&word_report, &subword_report)
        )
    );
    Ok(())
}
