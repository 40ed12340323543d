//! Word vectors: GloVe training, retrofitting against pre-trained vectors,
//! and the similarity diagnostics used to inspect homonyms.

mod glove;

pub use glove::{
    final_embedding, glove_cost, gradients, mittens_cost, train, weighting, Anchors, GloveParams,
    TrainConfig, TrainOutcome,
};

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use indexmap::IndexMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("vector for '{0}' has zero norm")]
    ZeroNorm(String),
    #[error("no embedding for: {}", .0.join(", "))]
    OutOfVocabulary(Vec<String>),
    #[error("no usable vectors in {0}")]
    NoVectors(String),
    #[error("training diverged at iteration {iteration}: {detail}")]
    Diverged { iteration: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Token to vector map with a fixed dimension. Insertion order is kept so
/// that saved files are stable.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: IndexMap<String, Vec<f64>>,
}

/// Pre-trained vectors that retrofitting anchors to.
pub type PretrainedTable = EmbeddingTable;

/// Problems skipped while loading a vector file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadWarnings {
    pub wrong_dimension: usize,
    pub duplicates: usize,
    pub unparsable: usize,
}

impl LoadWarnings {
    pub fn total(&self) -> usize {
        self.wrong_dimension + self.duplicates + self.unparsable
    }
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: IndexMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vectors.contains_key(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(t, v)| (t.as_str(), v.as_slice()))
    }

    /// Inserts or replaces a vector. Returns true when the token was new.
    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<bool, EmbeddingError> {
        let token = token.into();
        if vector.len() != self.dim {
            return Err(EmbeddingError::Dimension(format!(
                "'{token}' has {} components, table has {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(EmbeddingError::Dimension(format!("'{token}' has non-finite components")));
        }
        Ok(self.vectors.insert(token, vector).is_none())
    }

    /// Keeps only the tokens accepted by `keep`.
    pub fn restricted_to(&self, mut keep: impl FnMut(&str) -> bool) -> Self {
        EmbeddingTable {
            dim: self.dim,
            vectors: self
                .vectors
                .iter()
                .filter(|(t, _)| keep(t))
                .map(|(t, v)| (t.clone(), v.clone()))
                .collect(),
        }
    }

    /// Case-insensitive view: every key lowercased. An exactly lowercase key
    /// wins over a differently cased one.
    pub fn lowercased(&self) -> HashMap<String, &[f64]> {
        let mut out: HashMap<String, &[f64]> = HashMap::new();
        for (t, v) in &self.vectors {
            let lower = t.to_lowercase();
            if lower == *t || !out.contains_key(&lower) {
                out.insert(lower, v);
            }
        }
        out
    }

    /// Table keyed by lowercased tokens, with the same precedence as
    /// [`lowercased`](Self::lowercased) and first-seen order.
    pub fn to_lowercase_keys(&self) -> Self {
        let mut vectors: IndexMap<String, Vec<f64>> = IndexMap::new();
        for (t, v) in &self.vectors {
            let lower = t.to_lowercase();
            if lower == *t || !vectors.contains_key(&lower) {
                vectors.insert(lower, v.clone());
            }
        }
        EmbeddingTable { dim: self.dim, vectors }
    }

    /// Parses the GloVe text format, `token v1 ... vd` per line. With
    /// `expected_dim` unset, the first vector line fixes the dimension.
    /// Lines of the wrong width are skipped; a repeated token replaces the
    /// earlier vector. Both are counted in the returned warnings.
    pub fn read<R: BufRead>(
        input: R,
        expected_dim: Option<usize>,
    ) -> Result<(Self, LoadWarnings), EmbeddingError> {
        let mut warnings = LoadWarnings::default();
        let mut table: Option<EmbeddingTable> = expected_dim.map(EmbeddingTable::new);
        for line in input.lines() {
            let line = line?;
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let values: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
            let Ok(values) = values else {
                warnings.unparsable += 1;
                continue;
            };
            if values.iter().any(|x| !x.is_finite()) {
                warnings.unparsable += 1;
                continue;
            }
            let table = table.get_or_insert_with(|| EmbeddingTable::new(values.len()));
            if values.len() != table.dim || values.is_empty() {
                warnings.wrong_dimension += 1;
                continue;
            }
            if !table.insert(token, values)? {
                warnings.duplicates += 1;
            }
        }
        match table {
            Some(t) if !t.is_empty() => Ok((t, warnings)),
            _ => Err(EmbeddingError::NoVectors("input".into())),
        }
    }

    pub fn load(path: &Path, expected_dim: Option<usize>) -> Result<(Self, LoadWarnings), EmbeddingError> {
        let file = File::open(path)?;
        let (table, warnings) = Self::read(BufReader::new(file), expected_dim).map_err(|e| match e {
            EmbeddingError::NoVectors(_) => EmbeddingError::NoVectors(path.display().to_string()),
            other => other,
        })?;
        if warnings.total() > 0 {
            log::warn!(
                "{}: skipped {} lines of wrong dimension, {} unparsable, {} duplicate tokens",
                path.display(),
                warnings.wrong_dimension,
                warnings.unparsable,
                warnings.duplicates
            );
        }
        Ok((table, warnings))
    }

    /// Writes the GloVe text format with round-trip precision.
    pub fn write<W: Write>(&self, mut out: W) -> Result<(), EmbeddingError> {
        for (t, v) in &self.vectors {
            out.write_all(t.as_bytes())?;
            for x in v {
                write!(out, " {x}")?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), EmbeddingError> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write(&mut out)?;
        out.flush()?;
        Ok(())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity. Zero vectors are an error rather than similarity 0.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::Dimension(format!("{} vs {}", u.len(), v.len())));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 {
        return Err(EmbeddingError::ZeroNorm("u".into()));
    }
    if nv == 0.0 {
        return Err(EmbeddingError::ZeroNorm("v".into()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Mean of the word vectors of a phrase.
pub fn phrase_vector<S: AsRef<str>>(words: &[S], table: &EmbeddingTable) -> Result<Vec<f64>, EmbeddingError> {
    let missing: Vec<String> = words
        .iter()
        .map(AsRef::as_ref)
        .filter(|w| !table.contains(w))
        .map(String::from)
        .collect();
    if !missing.is_empty() {
        return Err(EmbeddingError::OutOfVocabulary(missing));
    }
    if words.is_empty() {
        return Err(EmbeddingError::OutOfVocabulary(vec!["<empty phrase>".into()]));
    }
    let mut mean = vec![0.0; table.dim()];
    for w in words {
        for (m, x) in mean.iter_mut().zip(table.get(w.as_ref()).unwrap()) {
            *m += x;
        }
    }
    let n = words.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

/// Cosine of the unweighted mean vectors of two phrases.
pub fn phrase_similarity<S: AsRef<str>, T: AsRef<str>>(
    phrase_a: &[S],
    phrase_b: &[T],
    table: &EmbeddingTable,
) -> Result<f64, EmbeddingError> {
    let a = phrase_vector(phrase_a, table);
    let b = phrase_vector(phrase_b, table);
    match (a, b) {
        (Ok(a), Ok(b)) => cosine(&a, &b),
        (Err(EmbeddingError::OutOfVocabulary(mut m1)), Err(EmbeddingError::OutOfVocabulary(m2))) => {
            for w in m2 {
                if !m1.contains(&w) {
                    m1.push(w);
                }
            }
            Err(EmbeddingError::OutOfVocabulary(m1))
        }
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}
