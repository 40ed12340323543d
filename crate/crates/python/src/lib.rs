//! Python bindings: label transcripts, punctuate with a trained model and
//! score predictions.

use std::io::Cursor;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use punctuate_core::corpus::{
    label_conversation, parse_punctuated, parse_time_annotated, render_punctuated, AlignScoring, PunctuationClass,
};
use punctuate_core::embeddings::{phrase_similarity, EmbeddingTable};
use punctuate_core::eval::score as score_sequences;
use punctuate_core::pipeline;
use punctuate_core::synth::SampleSpec;
use punctuate_core::tagger::{load_model, predict, CnnModel};

type LabeledRow = (f64, f64, String, String, String);
type ScoreRow = (String, f64, f64, f64, u64);

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn class_of(name: &str) -> PyResult<PunctuationClass> {
    PunctuationClass::ALL
        .into_iter()
        .find(|c| c.name() == name || c.symbol() == name)
        .ok_or_else(|| value_err(format!("unknown class '{name}'")))
}

/// Aligns a time-annotated transcript with its punctuated text and returns
/// `(start, duration, side, word, class)` per spoken token.
#[pyfunction]
fn label(timed: &str, punctuated: &str) -> PyResult<Vec<LabeledRow>> {
    let conv = parse_time_annotated("input", Cursor::new(timed)).map_err(value_err)?;
    let labeled =
        label_conversation(&conv, &parse_punctuated(punctuated), &AlignScoring::default()).map_err(value_err)?;
    let labels = labeled.labels().map_err(value_err)?;
    Ok(labeled
        .tokens
        .iter()
        .zip(labels)
        .map(|(t, c)| (t.start, t.duration, t.side.to_string(), t.text.clone(), c.name().to_string()))
        .collect())
}

/// Per-class `(precision, recall, f1, support)` keyed by class name.
#[pyfunction]
fn score(preds: Vec<String>, golds: Vec<String>) -> PyResult<Vec<ScoreRow>> {
    let parse = |v: &[String]| v.iter().map(|s| class_of(s)).collect::<PyResult<Vec<_>>>();
    let (metrics, _) = score_sequences(&parse(&preds)?, &parse(&golds)?).map_err(value_err)?;
    Ok(PunctuationClass::ALL
        .into_iter()
        .map(|c| {
            let s = metrics.get(c);
            (c.name().to_string(), s.precision, s.recall, s.f1, s.support)
        })
        .collect())
}

/// Cosine of the mean vectors of two phrases.
#[pyfunction]
fn similarity(vectors: PathBuf, a: &str, b: &str) -> PyResult<f64> {
    let (table, _) = EmbeddingTable::load(&vectors, None).map_err(|e| PyIOError::new_err(e.to_string()))?;
    let table = table.to_lowercase_keys();
    let lower = |s: &str| s.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>();
    phrase_similarity(&lower(a), &lower(b), &table).map_err(value_err)
}

/// Writes the synthetic sample corpus and its config to `dir`.
#[pyfunction]
#[pyo3(signature = (dir, conversations = 30, seed = 42))]
fn make_sample(dir: PathBuf, conversations: usize, seed: u64) -> PyResult<()> {
    let spec = SampleSpec {
        conversations,
        ..SampleSpec::default()
    };
    pipeline::make_sample(&dir, &spec, seed).map_err(value_err)
}

/// A trained tagger with the embedding table it was trained on.
#[pyclass(frozen)]
struct Tagger {
    model: CnnModel,
    embeddings: EmbeddingTable,
}

#[pymethods]
impl Tagger {
    #[new]
    fn new(checkpoint: PathBuf, embeddings: PathBuf) -> PyResult<Self> {
        let file = std::fs::File::open(&checkpoint).map_err(|e| PyIOError::new_err(e.to_string()))?;
        let model = load_model(std::io::BufReader::new(file)).map_err(value_err)?;
        let (embeddings, _) = EmbeddingTable::load(&embeddings, None).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(Tagger { model, embeddings })
    }

    /// Punctuates a time-annotated transcript.
    fn punctuate(&self, timed: &str) -> PyResult<String> {
        let conv = parse_time_annotated("input", Cursor::new(timed)).map_err(value_err)?;
        let classes = predict(&self.model, &conv, &self.embeddings).map_err(value_err)?;
        let words: Vec<(&str, PunctuationClass)> = conv.texts().into_iter().zip(classes).collect();
        Ok(render_punctuated(&words))
    }

    /// Class name for every token of a time-annotated transcript.
    fn classes(&self, timed: &str) -> PyResult<Vec<String>> {
        let conv = parse_time_annotated("input", Cursor::new(timed)).map_err(value_err)?;
        let classes = predict(&self.model, &conv, &self.embeddings).map_err(value_err)?;
        Ok(classes.into_iter().map(|c| c.name().to_string()).collect())
    }

    #[getter]
    fn parameters(&self) -> usize {
        self.model.param_count()
    }
}

#[pymodule]
fn punctuate(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(label, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(similarity, m)?)?;
    m.add_function(wrap_pyfunction!(make_sample, m)?)?;
    m.add_class::<Tagger>()?;
    Ok(())
}
