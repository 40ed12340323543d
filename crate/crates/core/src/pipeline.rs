//! File-based pipeline behind the `punctuate` command line tool.
//!
//! Every stage reads its inputs from, and writes its outputs to, a single
//! output directory:
//!
//! ```text
//! out/labeled/<id>.tsv            prepare
//! out/splits/{train,validation,test}.txt
//! out/distribution.txt
//! out/vocab.txt, out/cooc.txt     cooc
//! out/embeddings/trained.{txt,log}      train-embeddings
//! out/embeddings/retrofitted.{txt,log}  retrofit
//! out/model/{tagger.ckpt,tagger.log,embeddings.txt}  train-tagger
//! out/eval/{metrics,confusion}.{tsv,txt}, out/eval/summary.txt  evaluate
//! out/similarity.tsv              similarity
//! ```
//!
//! Configuration is a flat `section.key = value` file. Values given on the
//! command line win over the file, which wins over the built-in defaults.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use thiserror::Error;

use crate::cooc::{build_cooc, build_vocab, CoocError, CoocMatrix, Vocabulary};
use crate::corpus::{
    class_distribution, label_conversation, parse_punctuated, parse_time_annotated, read_labeled,
    render_punctuated, split_dataset, write_labeled, AlignScoring, Conversation, CorpusError,
    PunctuationClass,
};
use crate::embeddings::{final_embedding, train, EmbeddingError, EmbeddingTable, TrainConfig};
use crate::eval::{
    render_confusion_table, render_confusion_tsv, render_metrics_table, render_metrics_tsv, score,
    similarity_report, ConfusionMatrix, EvalError,
};
use crate::synth::{sample_data, SampleSpec};
use crate::tagger::{
    load_model, make_windows, predict, render_log, save_model, train_model, CnnConfig, CnnModel, LayerShape,
    TaggerError, TrainSchedule,
};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Config(String),
    #[error("missing {what}: {path}")]
    MissingInput { what: String, path: PathBuf },
    #[error("transcripts without a counterpart: {}", .0.join(", "))]
    StemMismatch(Vec<String>),
    #[error("conversation '{id}': {source}")]
    Conversation { id: String, source: CorpusError },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Cooc(#[from] CoocError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Tagger(#[from] TaggerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl PipelineError {
    /// Short stable identifier, printed as `error[code]`.
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::MissingInput { .. } => "missing-input",
            PipelineError::StemMismatch(_) => "stem-mismatch",
            PipelineError::Conversation { .. } | PipelineError::Corpus(_) => "corpus",
            PipelineError::Cooc(_) => "cooc",
            PipelineError::Embedding(EmbeddingError::OutOfVocabulary(_)) => "oov",
            PipelineError::Embedding(EmbeddingError::Config(_)) => "config",
            PipelineError::Embedding(EmbeddingError::Diverged { .. }) => "diverged",
            PipelineError::Embedding(_) => "embedding",
            PipelineError::Tagger(TaggerError::Diverged { .. }) => "diverged",
            PipelineError::Tagger(TaggerError::Config(_)) => "config",
            PipelineError::Tagger(_) => "tagger",
            PipelineError::Eval(EvalError::OutOfVocabulary(_)) => "oov",
            PipelineError::Eval(_) => "eval",
            PipelineError::Io { .. } => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// Which vectors feed the tagger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmbeddingSource {
    /// The full pre-trained table.
    Pretrained,
    /// Pre-trained vectors of vocabulary words only.
    VocabRestricted,
    /// Vectors trained on the corpus from scratch.
    Trained,
    /// Pre-trained vectors adapted to the corpus.
    #[default]
    Retrofitted,
}

impl FromStr for EmbeddingSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pretrained" => Ok(EmbeddingSource::Pretrained),
            "vocab-restricted" => Ok(EmbeddingSource::VocabRestricted),
            "trained" => Ok(EmbeddingSource::Trained),
            "retrofitted" => Ok(EmbeddingSource::Retrofitted),
            other => Err(format!(
                "unknown embedding source '{other}' (pretrained, vocab-restricted, trained, retrofitted)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Directory of time-annotated transcripts, one file per conversation.
    pub timed: Option<PathBuf>,
    /// Directory of punctuated transcripts with the same file stems.
    pub punctuated: Option<PathBuf>,
    pub pretrained: Option<PathBuf>,
    pub out: PathBuf,
    pub vocab_max_size: usize,
    pub vocab_min_count: u64,
    pub cooc_window: usize,
    pub embeddings: TrainConfig,
    pub tagger_embeddings: EmbeddingSource,
    pub cnn: CnnConfig,
    pub schedule: TrainSchedule,
    pub align: AlignScoring,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let mut cfg = PipelineConfig {
            timed: None,
            punctuated: None,
            pretrained: None,
            out: PathBuf::from("out"),
            vocab_max_size: 50_000,
            vocab_min_count: 1,
            cooc_window: 10,
            embeddings: TrainConfig::default(),
            tagger_embeddings: EmbeddingSource::default(),
            cnn: CnnConfig::default(),
            schedule: TrainSchedule::default(),
            align: AlignScoring::default(),
            seed: DEFAULT_SEED,
        };
        cfg.set_seed(DEFAULT_SEED);
        cfg
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("bad value '{value}' for {key}"))
}

fn parse_layers(value: &str) -> std::result::Result<Vec<LayerShape>, String> {
    value
        .split(',')
        .map(|spec| {
            let (k, d) = spec
                .trim()
                .split_once('x')
                .ok_or_else(|| format!("layer '{spec}' is not KERNELxDILATION"))?;
            let kernel = k.parse().map_err(|_| format!("bad kernel in '{spec}'"))?;
            let dilation = d.parse().map_err(|_| format!("bad dilation in '{spec}'"))?;
            Ok(LayerShape::new(kernel, dilation))
        })
        .collect()
}

impl PipelineConfig {
    /// Parses config text. Relative paths are taken relative to `base`.
    pub fn parse(text: &str, base: &Path, origin: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        let mut seen = HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| PipelineError::Config(format!("{origin}:{}: {m}", n + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'key = value', found '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key {key}")));
            }
            cfg.set(key, value, base).map_err(err)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base, &path.display().to_string())
    }

    fn set(&mut self, key: &str, value: &str, base: &Path) -> std::result::Result<(), String> {
        let path = || base.join(value);
        match key {
            "paths.timed" => self.timed = Some(path()),
            "paths.punctuated" => self.punctuated = Some(path()),
            "paths.pretrained" => self.pretrained = Some(path()),
            "paths.out" => self.out = path(),
            "vocab.max_size" => self.vocab_max_size = parse_value(key, value)?,
            "vocab.min_count" => self.vocab_min_count = parse_value(key, value)?,
            "embeddings.window" => self.cooc_window = parse_value(key, value)?,
            "embeddings.dim" => self.embeddings.dim = parse_value(key, value)?,
            "embeddings.x_max" => self.embeddings.x_max = parse_value(key, value)?,
            "embeddings.alpha" => self.embeddings.alpha = parse_value(key, value)?,
            "embeddings.mu" => self.embeddings.mu = parse_value(key, value)?,
            "embeddings.lr" => self.embeddings.learning_rate = parse_value(key, value)?,
            "embeddings.iters" => self.embeddings.iterations = parse_value(key, value)?,
            "tagger.embeddings" => self.tagger_embeddings = value.parse()?,
            "tagger.window" => self.cnn.window_len = parse_value(key, value)?,
            "tagger.offset_mode" => self.cnn.offset_mode = value.parse()?,
            "tagger.filters" => self.cnn.filters = parse_value(key, value)?,
            "tagger.layers" => self.cnn.layers = parse_layers(value)?,
            "tagger.dropout" => self.cnn.regularization.dropout = parse_value(key, value)?,
            "tagger.noise" => self.cnn.regularization.noise_sigma = parse_value(key, value)?,
            "tagger.weight_decay" => self.cnn.regularization.weight_decay = parse_value(key, value)?,
            "tagger.batch_size" => self.schedule.batch_size = parse_value(key, value)?,
            "tagger.epochs" => self.schedule.epochs = parse_value(key, value)?,
            "tagger.lr" => self.schedule.learning_rate = parse_value(key, value)?,
            "tagger.plateau_factor" => self.schedule.plateau_factor = parse_value(key, value)?,
            "tagger.patience" => self.schedule.patience = parse_value(key, value)?,
            "tagger.min_lr" => self.schedule.min_learning_rate = parse_value(key, value)?,
            "align.match" => self.align.match_score = parse_value(key, value)?,
            "align.mismatch" => self.align.mismatch = parse_value(key, value)?,
            "align.gap" => self.align.gap = parse_value(key, value)?,
            "seed" => self.set_seed(parse_value(key, value)?),
            other => return Err(format!("unknown key {other}")),
        }
        Ok(())
    }

    /// One seed drives the split, embedding training and the tagger.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.embeddings.seed = seed;
        self.cnn.seed = seed;
        self.schedule.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.vocab_max_size == 0 || self.vocab_min_count == 0 {
            return bad("vocab.max_size and vocab.min_count must be positive".into());
        }
        if self.cooc_window == 0 {
            return bad("embeddings.window must be at least 1".into());
        }
        self.embeddings.validate()?;
        CnnConfig {
            embedding_dim: self.embeddings.dim,
            ..self.cnn.clone()
        }
        .validate()?;
        self.schedule.validate().map_err(PipelineError::Config)?;
        self.align.validate().map_err(PipelineError::Config)?;
        Ok(())
    }

    fn input_dir(&self, dir: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
        let dir = dir
            .clone()
            .ok_or_else(|| PipelineError::Config(format!("{key} is not set")))?;
        if !dir.is_dir() {
            return Err(PipelineError::MissingInput {
                what: format!("directory ({key})"),
                path: dir,
            });
        }
        Ok(dir)
    }

    fn pretrained_table(&self) -> Result<EmbeddingTable> {
        let path = self
            .pretrained
            .clone()
            .ok_or_else(|| PipelineError::Config("paths.pretrained is not set".into()))?;
        let (table, warnings) = EmbeddingTable::load(&require(&path, "pre-trained vectors")?, None)?;
        if warnings.total() > 0 {
            log::warn!("{}: skipped {} malformed lines", path.display(), warnings.total());
        }
        Ok(table.to_lowercase_keys())
    }

    fn out_path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }
}

fn require(path: &Path, what: &str) -> Result<PathBuf> {
    if path.exists() {
        Ok(path.to_path_buf())
    } else {
        Err(PipelineError::MissingInput {
            what: what.to_string(),
            path: path.to_path_buf(),
        })
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn open(path: &Path, what: &str) -> Result<BufReader<File>> {
    let path = require(path, what)?;
    File::open(&path).map(BufReader::new).map_err(io_err(&path))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut out = create(path)?;
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(io_err(path))
}

fn save_table(table: &EmbeddingTable, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    table.write(&mut out)?;
    flush(out, path)
}

fn flush(mut out: BufWriter<File>, path: &Path) -> Result<()> {
    out.flush().map_err(io_err(path))
}

/// Regular files of `dir` keyed by file stem.
fn files_by_stem(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if !path.is_file() {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            if !stem.starts_with('.') {
                out.insert(stem.to_string(), path);
            }
        }
    }
    Ok(out)
}

fn read_split(cfg: &PipelineConfig, part: &str) -> Result<Vec<Conversation>> {
    let path = cfg.out_path(&format!("splits/{part}.txt"));
    let ids = read_text(&require(&path, "split manifest (run prepare first)")?)?;
    ids.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|id| {
            let path = cfg.out_path(&format!("labeled/{id}.tsv"));
            read_labeled(id, open(&path, "labeled conversation")?).map_err(|source| PipelineError::Conversation {
                id: id.to_string(),
                source,
            })
        })
        .collect()
}

/// Aligns every transcript pair, writes the labeled dataset, the split
/// manifests and the class distribution.
pub fn cmd_prepare(cfg: &PipelineConfig) -> Result<()> {
    let timed = files_by_stem(&cfg.input_dir(&cfg.timed, "paths.timed")?)?;
    let punct = files_by_stem(&cfg.input_dir(&cfg.punctuated, "paths.punctuated")?)?;
    let timed_stems: BTreeSet<&String> = timed.keys().collect();
    let punct_stems: BTreeSet<&String> = punct.keys().collect();
    let unmatched: Vec<String> = timed_stems
        .symmetric_difference(&punct_stems)
        .map(|s| s.to_string())
        .collect();
    if !unmatched.is_empty() {
        return Err(PipelineError::StemMismatch(unmatched));
    }

    let mut convs = Vec::with_capacity(timed.len());
    for (id, path) in &timed {
        let wrap = |source| PipelineError::Conversation { id: id.clone(), source };
        let conv = parse_time_annotated(id, open(path, "transcript")?).map_err(wrap)?;
        let marks = parse_punctuated(&read_text(&punct[id])?);
        convs.push(label_conversation(&conv, &marks, &cfg.align).map_err(wrap)?);
    }

    let labeled = cfg.out_path("labeled");
    if labeled.exists() {
        fs::remove_dir_all(&labeled).map_err(io_err(&labeled))?;
    }
    for conv in &convs {
        let path = labeled.join(format!("{}.tsv", conv.id));
        let mut out = create(&path)?;
        write_labeled(conv, &mut out)?;
        flush(out, &path)?;
    }

    let ids: Vec<&str> = convs.iter().map(|c| c.id.as_str()).collect();
    let split = split_dataset(ids, cfg.seed)?;
    for (part, ids) in [("train", &split.train), ("validation", &split.validation), ("test", &split.test)] {
        let mut text = ids.join("\n");
        text.push('\n');
        write_text(&cfg.out_path(&format!("splits/{part}.txt")), &text)?;
    }
    let dist = class_distribution(&convs)?;
    write_text(&cfg.out_path("distribution.txt"), &dist.render())?;
    let (tr, va, te) = split.sizes();
    info!(
        "prepared {} conversations, {} tokens; split {tr}/{va}/{te}",
        convs.len(),
        dist.total()
    );
    Ok(())
}

/// Vocabulary and co-occurrence counts of the training split.
pub fn cmd_cooc(cfg: &PipelineConfig) -> Result<()> {
    let train = read_split(cfg, "train")?;
    let vocab = build_vocab(&train, cfg.vocab_max_size, cfg.vocab_min_count)?;
    let x = build_cooc(&train, &vocab, cfg.cooc_window);
    let vocab_path = cfg.out_path("vocab.txt");
    let mut out = create(&vocab_path)?;
    vocab.write(&mut out)?;
    flush(out, &vocab_path)?;
    let cooc_path = cfg.out_path("cooc.txt");
    let mut out = create(&cooc_path)?;
    x.write(&mut out)?;
    flush(out, &cooc_path)?;
    info!("vocabulary {} words, {} co-occurring pairs", vocab.len(), x.nnz() / 2);
    Ok(())
}

fn read_cooc(cfg: &PipelineConfig) -> Result<(Vocabulary, CoocMatrix)> {
    let vocab = Vocabulary::read(open(&cfg.out_path("vocab.txt"), "vocabulary (run cooc first)")?)?;
    let x = CoocMatrix::read(open(&cfg.out_path("cooc.txt"), "co-occurrence counts (run cooc first)")?)?;
    Ok((vocab, x))
}

fn run_embeddings(cfg: &PipelineConfig, pretrained: Option<&EmbeddingTable>, name: &str) -> Result<()> {
    cfg.embeddings.validate()?;
    let (vocab, x) = read_cooc(cfg)?;
    let outcome = train(&x, &vocab, &cfg.embeddings, pretrained)?;
    save_table(
        &final_embedding(&outcome.params, &vocab),
        &cfg.out_path(&format!("embeddings/{name}.txt")),
    )?;
    let log_path = cfg.out_path(&format!("embeddings/{name}.log"));
    let mut out = create(&log_path)?;
    outcome.write_log(&mut out).map_err(io_err(&log_path))?;
    flush(out, &log_path)?;
    info!(
        "{name} embeddings: {} words, cost {:.4} -> {:.4}, {} anchored",
        vocab.len(),
        outcome.costs.first().copied().unwrap_or(f64::NAN),
        outcome.costs.last().copied().unwrap_or(f64::NAN),
        outcome.anchors.len()
    );
    Ok(())
}

/// Plain GloVe vectors of the training vocabulary.
pub fn cmd_train_embeddings(cfg: &PipelineConfig) -> Result<()> {
    run_embeddings(cfg, None, "trained")
}

/// GloVe training pulled toward the pre-trained vectors with weight `mu`.
pub fn cmd_retrofit(cfg: &PipelineConfig) -> Result<()> {
    cfg.embeddings.validate()?;
    let table = cfg.pretrained_table()?;
    if table.dim() != cfg.embeddings.dim {
        return Err(PipelineError::Config(format!(
            "embeddings.dim is {} but the pre-trained vectors have dimension {}",
            cfg.embeddings.dim,
            table.dim()
        )));
    }
    run_embeddings(cfg, Some(&table), "retrofitted")
}

fn tagger_table(cfg: &PipelineConfig) -> Result<EmbeddingTable> {
    Ok(match cfg.tagger_embeddings {
        EmbeddingSource::Pretrained => cfg.pretrained_table()?,
        EmbeddingSource::VocabRestricted => {
            let vocab = Vocabulary::read(open(&cfg.out_path("vocab.txt"), "vocabulary (run cooc first)")?)?;
            cfg.pretrained_table()?.restricted_to(|w| vocab.get(w).is_some())
        }
        EmbeddingSource::Trained => load_table(&cfg.out_path("embeddings/trained.txt"), "train-embeddings")?,
        EmbeddingSource::Retrofitted => load_table(&cfg.out_path("embeddings/retrofitted.txt"), "retrofit")?,
    })
}

fn load_table(path: &Path, stage: &str) -> Result<EmbeddingTable> {
    let path = require(path, &format!("embeddings (run {stage} first)"))?;
    Ok(EmbeddingTable::load(&path, None)?.0)
}

/// Trains the tagger on the training split, keeping the epoch with the
/// lowest validation loss.
pub fn cmd_train_tagger(cfg: &PipelineConfig) -> Result<()> {
    cfg.schedule.validate().map_err(PipelineError::Config)?;
    let table = tagger_table(cfg)?;
    let windows = |convs: &[Conversation]| -> Vec<_> {
        convs
            .iter()
            .flat_map(|c| make_windows(c, &table, cfg.cnn.offset_mode, cfg.cnn.window_len))
            .collect()
    };
    let train_w = windows(&read_split(cfg, "train")?);
    let val_w = windows(&read_split(cfg, "validation")?);
    let model = CnnModel::new(CnnConfig {
        embedding_dim: table.dim(),
        ..cfg.cnn.clone()
    })?;
    info!(
        "training on {} windows ({} parameters), validating on {}",
        train_w.len(),
        model.param_count(),
        val_w.len()
    );
    let trained = train_model(&train_w, &val_w, model, &cfg.schedule)?;
    let ckpt = cfg.out_path("model/tagger.ckpt");
    let mut out = create(&ckpt)?;
    save_model(&trained.model, &mut out)?;
    flush(out, &ckpt)?;
    write_text(&cfg.out_path("model/tagger.log"), &render_log(&trained.log))?;
    save_table(&table, &cfg.out_path("model/embeddings.txt"))?;
    info!("kept epoch {}", trained.best_epoch);
    Ok(())
}

fn load_tagger(cfg: &PipelineConfig) -> Result<(CnnModel, EmbeddingTable)> {
    let model = load_model(open(&cfg.out_path("model/tagger.ckpt"), "checkpoint (run train-tagger first)")?)?;
    let table = load_table(&cfg.out_path("model/embeddings.txt"), "train-tagger")?;
    Ok((model, table))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub tokens: u64,
    pub accuracy: f64,
    /// Accuracy of always predicting blank.
    pub majority_baseline: f64,
}

impl EvalSummary {
    pub fn render(&self) -> String {
        format!(
            "tokens\t{}\naccuracy\t{:.4}\nmajority_baseline\t{:.4}\n",
            self.tokens, self.accuracy, self.majority_baseline
        )
    }
}

/// Tags the test split and writes the reports. With `self_test` the gold
/// labels stand in for the predictions.
pub fn cmd_evaluate(cfg: &PipelineConfig, self_test: bool) -> Result<EvalSummary> {
    let test = read_split(cfg, "test")?;
    let tagger = if self_test { None } else { Some(load_tagger(cfg)?) };
    let mut preds = Vec::new();
    let mut golds = Vec::new();
    for conv in &test {
        let gold = conv.labels()?;
        match &tagger {
            Some((model, table)) => preds.extend(predict(model, conv, table)?),
            None => preds.extend_from_slice(&gold),
        }
        golds.extend(gold);
    }
    let (metrics, confusion) = score(&preds, &golds)?;
    let blank = vec![PunctuationClass::Blank; golds.len()];
    let baseline = ConfusionMatrix::from_sequences(&blank, &golds)?;
    let summary = EvalSummary {
        tokens: confusion.total(),
        accuracy: confusion.accuracy(),
        majority_baseline: baseline.accuracy(),
    };
    write_text(&cfg.out_path("eval/metrics.tsv"), &render_metrics_tsv(&metrics))?;
    write_text(&cfg.out_path("eval/metrics.txt"), &render_metrics_table(&metrics))?;
    write_text(&cfg.out_path("eval/confusion.tsv"), &render_confusion_tsv(&confusion))?;
    write_text(&cfg.out_path("eval/confusion.txt"), &render_confusion_table(&confusion))?;
    write_text(&cfg.out_path("eval/summary.txt"), &summary.render())?;
    Ok(summary)
}

/// Punctuates one time-annotated transcript.
pub fn cmd_predict(cfg: &PipelineConfig, input: &Path) -> Result<String> {
    let (model, table) = load_tagger(cfg)?;
    let id = input.file_stem().and_then(|s| s.to_str()).unwrap_or("input");
    let conv = parse_time_annotated(id, open(input, "transcript")?).map_err(|source| {
        PipelineError::Conversation {
            id: id.to_string(),
            source,
        }
    })?;
    let classes = predict(&model, &conv, &table)?;
    let words: Vec<(&str, PunctuationClass)> = conv.texts().into_iter().zip(classes).collect();
    let mut text = render_punctuated(&words);
    text.push('\n');
    Ok(text)
}

/// Reads `phrase a | phrase b` lines.
pub fn read_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let text = read_text(&require(path, "pairs file")?)?;
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (a, b) = line.split_once('|').ok_or_else(|| {
            PipelineError::Config(format!("{}:{}: expected 'phrase | phrase'", path.display(), n + 1))
        })?;
        pairs.push((a.trim().to_lowercase(), b.trim().to_lowercase()));
    }
    Ok(pairs)
}

/// Phrase similarities before and after retrofitting.
pub fn cmd_similarity(cfg: &PipelineConfig, pairs_path: &Path) -> Result<String> {
    let pairs = read_pairs(pairs_path)?;
    let original = cfg.pretrained_table()?;
    let retrofitted = load_table(&cfg.out_path("embeddings/retrofitted.txt"), "retrofit")?;
    let report = similarity_report(&pairs, &original, &retrofitted)?;
    let text = report.render_tsv();
    write_text(&cfg.out_path("similarity.tsv"), &text)?;
    Ok(text)
}

/// Config written next to the generated sample: small enough to run the
/// whole chain in a few minutes on one core.
pub fn sample_config(seed: u64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Synthetic sample corpus. Paths are relative to this file.");
    for line in [
        "paths.timed = timed",
        "paths.punctuated = punct",
        "paths.pretrained = pretrained.txt",
        "paths.out = out",
        "",
        "embeddings.dim = 16",
        "embeddings.window = 10",
        "embeddings.mu = 0.1",
        "embeddings.iters = 200",
        "",
        "tagger.embeddings = retrofitted",
        "tagger.window = 200",
        "tagger.filters = 32",
        "tagger.epochs = 20",
        "tagger.batch_size = 8",
        "tagger.lr = 0.003",
    ] {
        let _ = writeln!(s, "{line}");
    }
    let _ = writeln!(s, "\nseed = {seed}");
    s
}

/// Writes a synthetic corpus: `timed/`, `punct/`, `pretrained.txt`,
/// `pairs.txt` and `pipeline.conf`.
pub fn make_sample(dir: &Path, spec: &SampleSpec, seed: u64) -> Result<()> {
    let data = sample_data(spec);
    for sub in ["timed", "punct"] {
        let path = dir.join(sub);
        if path.exists() {
            fs::remove_dir_all(&path).map_err(io_err(&path))?;
        }
    }
    for conv in &data.conversations {
        write_text(&dir.join(format!("timed/{}.txt", conv.id)), &conv.timed)?;
        write_text(&dir.join(format!("punct/{}.txt", conv.id)), &conv.punctuated)?;
    }
    save_table(&data.pretrained, &dir.join("pretrained.txt"))?;
    let pairs: String = data.pairs.iter().map(|(a, b)| format!("{a} | {b}\n")).collect();
    write_text(&dir.join("pairs.txt"), &pairs)?;
    write_text(&dir.join("pipeline.conf"), &sample_config(seed))?;
    info!("wrote {} conversations to {}", data.conversations.len(), dir.display());
    Ok(())
}
