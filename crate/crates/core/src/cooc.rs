//! Vocabulary and harmonic-weighted word co-occurrence counts.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::corpus::Conversation;

#[derive(Debug, Error)]
pub enum CoocError {
    #[error("corpus has no tokens")]
    EmptyCorpus,
    #[error("no token occurs at least {0} times")]
    EmptyVocabulary(u64),
    #[error("invalid vocabulary settings: {0}")]
    Settings(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Tokens ranked by corpus frequency (ties broken lexicographically).
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    entries: Vec<(String, u64)>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from already ranked entries.
    pub fn from_entries(entries: Vec<(String, u64)>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i))
            .collect();
        Vocabulary { entries, index }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.entries[index].0
    }

    pub fn frequency(&self, index: usize) -> u64 {
        self.entries[index].1
    }

    pub fn entries(&self) -> &[(String, u64)] {
        &self.entries
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(t, _)| t.as_str())
    }

    /// Same vocabulary with `token` removed and indices compacted.
    pub fn without(&self, token: &str) -> Self {
        Self::from_entries(
            self.entries
                .iter()
                .filter(|(t, _)| t != token)
                .cloned()
                .collect(),
        )
    }

    /// `token<TAB>frequency` per line, in index order.
    pub fn write<W: Write>(&self, mut out: W) -> Result<(), CoocError> {
        for (t, f) in &self.entries {
            writeln!(out, "{t}\t{f}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self, CoocError> {
        let mut entries = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (token, freq) = line.split_once('\t').ok_or_else(|| CoocError::Parse {
                line: n + 1,
                message: "expected token<TAB>frequency".into(),
            })?;
            let freq = freq.parse().map_err(|_| CoocError::Parse {
                line: n + 1,
                message: format!("bad frequency '{freq}'"),
            })?;
            entries.push((token.to_string(), freq));
        }
        Ok(Self::from_entries(entries))
    }
}

/// Counts token frequencies over all conversations and keeps the
/// `max_size` most frequent tokens seen at least `min_count` times.
pub fn build_vocab(
    convs: &[Conversation],
    max_size: usize,
    min_count: u64,
) -> Result<Vocabulary, CoocError> {
    if max_size == 0 || min_count == 0 {
        return Err(CoocError::Settings(format!(
            "max_size {max_size} and min_count {min_count} must be positive"
        )));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for conv in convs {
        for t in &conv.tokens {
            *counts.entry(t.text.as_str()).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return Err(CoocError::EmptyCorpus);
    }
    let mut ranked: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(t, c)| (t.to_string(), c))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_size);
    if ranked.is_empty() {
        return Err(CoocError::EmptyVocabulary(min_count));
    }
    Ok(Vocabulary::from_entries(ranked))
}

/// Symmetric sparse co-occurrence matrix. Only the strict upper triangle is
/// stored; the diagonal is always zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoocMatrix {
    vocab_size: usize,
    upper: BTreeMap<(u32, u32), f64>,
}

impl CoocMatrix {
    pub fn new(vocab_size: usize) -> Self {
        CoocMatrix {
            vocab_size,
            upper: BTreeMap::new(),
        }
    }

    /// Builds a matrix from explicit `(i, j, x)` triples; each unordered
    /// pair is added once, so `(i, j)` and `(j, i)` accumulate.
    pub fn from_triples(vocab_size: usize, triples: &[(usize, usize, f64)]) -> Self {
        let mut m = CoocMatrix::new(vocab_size);
        for &(i, j, x) in triples {
            m.add(i, j, x);
        }
        m
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Number of stored upper-triangle entries.
    pub fn nnz(&self) -> usize {
        self.upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.upper.is_empty()
    }

    fn key(i: usize, j: usize) -> (u32, u32) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        (lo as u32, hi as u32)
    }

    /// Adds `x` to both `X_ij` and `X_ji`. Diagonal additions are ignored.
    pub fn add(&mut self, i: usize, j: usize, x: f64) {
        if i == j || x == 0.0 {
            return;
        }
        *self.upper.entry(Self::key(i, j)).or_insert(0.0) += x;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        self.upper.get(&Self::key(i, j)).copied().unwrap_or(0.0)
    }

    /// Upper-triangle entries `(i, j, x)` with `i < j`, sorted.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.upper
            .iter()
            .map(|(&(i, j), &x)| (i as usize, j as usize, x))
    }

    /// Every nonzero entry of the full symmetric matrix, both orientations.
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(2 * self.upper.len());
        for (i, j, x) in self.upper_entries() {
            out.push((i, j, x));
            out.push((j, i, x));
        }
        out
    }

    /// Sum over all `X_ij` of the full matrix.
    pub fn total_mass(&self) -> f64 {
        2.0 * self.upper.values().sum::<f64>()
    }

    /// Entry-wise sum with another shard over the same vocabulary.
    pub fn merge(&mut self, other: &CoocMatrix) {
        for (&k, &x) in &other.upper {
            *self.upper.entry(k).or_insert(0.0) += x;
        }
    }

    /// Snapshot format: header `COOC v1 <vocab_size> <nnz>` followed by
    /// `i<TAB>j<TAB>x` lines with `i <= j`.
    pub fn write<W: Write>(&self, mut out: W) -> Result<(), CoocError> {
        writeln!(out, "COOC v1 {} {}", self.vocab_size, self.nnz())?;
        for (i, j, x) in self.upper_entries() {
            writeln!(out, "{i}\t{j}\t{x}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self, CoocError> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let fields: Vec<&str> = header.split_whitespace().collect();
        let bad_header = || CoocError::Parse {
            line: 1,
            message: format!("bad header '{header}'"),
        };
        if fields.len() != 4 || fields[0] != "COOC" || fields[1] != "v1" {
            return Err(bad_header());
        }
        let vocab_size: usize = fields[2].parse().map_err(|_| bad_header())?;
        let nnz: usize = fields[3].parse().map_err(|_| bad_header())?;
        let mut m = CoocMatrix::new(vocab_size);
        for (n, line) in lines.enumerate() {
            let line = line?;
            let lineno = n + 2;
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            let parse_err = |message: String| CoocError::Parse {
                line: lineno,
                message,
            };
            if parts.len() != 3 {
                return Err(parse_err("expected i<TAB>j<TAB>x".into()));
            }
            let i: usize = parts[0].parse().map_err(|_| parse_err(format!("bad index '{}'", parts[0])))?;
            let j: usize = parts[1].parse().map_err(|_| parse_err(format!("bad index '{}'", parts[1])))?;
            let x: f64 = parts[2].parse().map_err(|_| parse_err(format!("bad value '{}'", parts[2])))?;
            if i > j || j >= vocab_size {
                return Err(parse_err(format!("entry ({i}, {j}) outside the upper triangle of {vocab_size}")));
            }
            if !(x.is_finite() && x > 0.0) {
                return Err(parse_err(format!("entry value {x} must be positive")));
            }
            m.add(i, j, x);
        }
        if m.nnz() != nnz {
            return Err(CoocError::Parse {
                line: 1,
                message: format!("header announces {nnz} entries, found {}", m.nnz()),
            });
        }
        Ok(m)
    }
}

/// Counts co-occurrences within each conversation: every pair of
/// in-vocabulary tokens at distance `d <= window` adds `1/d` to the
/// matrix. Windows never cross conversations.
pub fn build_cooc(convs: &[Conversation], vocab: &Vocabulary, window: usize) -> CoocMatrix {
    let mut m = CoocMatrix::new(vocab.len());
    for conv in convs {
        let ids: Vec<Option<usize>> = conv.tokens.iter().map(|t| vocab.get(&t.text)).collect();
        for (pos, &center) in ids.iter().enumerate() {
            let Some(ci) = center else { continue };
            for d in 1..=window {
                let Some(&Some(other)) = ids.get(pos + d) else {
                    continue;
                };
                m.add(ci, other, 1.0 / d as f64);
            }
        }
    }
    m
}
