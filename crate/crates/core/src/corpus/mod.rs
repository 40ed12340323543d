//! Transcript parsing, label transfer and dataset handling.
//!
//! A conversation arrives as two files: a time-annotated transcript (one
//! token per line with start, duration and channel) and a punctuated
//! transcript (plain text). The time-annotated tokens are aligned against the
//! punctuated words and inherit their punctuation class.

mod align;
mod timing;

pub use align::{align, AlignOp, AlignScoring, Alignment};
pub use timing::{timing_features, OffsetMode, TimingFeatures};

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("alignment: {0}")]
    Alignment(String),
    #[error("token {index} ('{text}') has no label")]
    Unlabeled { index: usize, text: String },
    #[error("need at least 10 conversations to split 80/10/10, got {0}; add more data")]
    TooFewConversations(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The four punctuation classes. Discriminants are the class indices used by
/// the tagger and the evaluation tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PunctuationClass {
    Blank = 0,
    Period = 1,
    Question = 2,
    Comma = 3,
}

impl PunctuationClass {
    pub const ALL: [PunctuationClass; 4] = [
        PunctuationClass::Blank,
        PunctuationClass::Period,
        PunctuationClass::Question,
        PunctuationClass::Comma,
    ];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Label name used in dataset files.
    pub fn name(self) -> &'static str {
        match self {
            PunctuationClass::Blank => "BLANK",
            PunctuationClass::Period => "PERIOD",
            PunctuationClass::Question => "QUESTION",
            PunctuationClass::Comma => "COMMA",
        }
    }

    /// The mark rendered after a word, empty for blank.
    pub fn mark(self) -> &'static str {
        match self {
            PunctuationClass::Blank => "",
            PunctuationClass::Period => ".",
            PunctuationClass::Question => "?",
            PunctuationClass::Comma => ",",
        }
    }

    /// Short symbol for tables (`ε` for blank).
    pub fn symbol(self) -> &'static str {
        match self {
            PunctuationClass::Blank => "ε",
            other => other.mark(),
        }
    }

    /// Maps a punctuation character to a class. Anything outside the three
    /// retained marks is blank.
    pub fn from_mark(c: char) -> Self {
        match c {
            '.' => PunctuationClass::Period,
            '?' => PunctuationClass::Question,
            ',' => PunctuationClass::Comma,
            _ => PunctuationClass::Blank,
        }
    }
}

impl fmt::Display for PunctuationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PunctuationClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "BLANK" => Ok(PunctuationClass::Blank),
            "PERIOD" => Ok(PunctuationClass::Period),
            "QUESTION" => Ok(PunctuationClass::Question),
            "COMMA" => Ok(PunctuationClass::Comma),
            other => Err(format!("unknown label '{other}'")),
        }
    }
}

/// Conversation channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    A,
    B,
}

impl Side {
    /// Feature value fed to the tagger.
    pub fn indicator(self) -> f64 {
        match self {
            Side::A => 0.0,
            Side::B => 1.0,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" => Ok(Side::A),
            "B" => Ok(Side::B),
            other => Err(format!("invalid side '{other}'")),
        }
    }
}

/// One spoken word.
#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub text: String,
    pub side: Side,
    pub start: f64,
    pub duration: f64,
    pub label: Option<PunctuationClass>,
}

impl Token {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

/// Tokens of both channels merged into one chronological sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Conversation {
    pub id: String,
    pub tokens: Vec<Token>,
}

impl Conversation {
    /// Builds a conversation and sorts its tokens by start time. Ties keep
    /// side A first, then the given order.
    pub fn new(id: impl Into<String>, mut tokens: Vec<Token>) -> Self {
        sort_tokens(&mut tokens);
        Conversation {
            id: id.into(),
            tokens,
        }
    }

    /// Single-speaker conversation with words spaced 0.3 s apart. Handy for
    /// corpora where timing does not matter.
    pub fn from_words<S: AsRef<str>>(id: impl Into<String>, words: &[S]) -> Self {
        let tokens = words
            .iter()
            .enumerate()
            .map(|(i, w)| Token {
                text: w.as_ref().to_string(),
                side: Side::A,
                start: i as f64 * 0.3,
                duration: 0.25,
                label: None,
            })
            .collect();
        Conversation {
            id: id.into(),
            tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    /// Labels of all tokens, failing on the first unlabeled one.
    pub fn labels(&self) -> Result<Vec<PunctuationClass>, CorpusError> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(index, t)| {
                t.label.ok_or_else(|| CorpusError::Unlabeled {
                    index,
                    text: t.text.clone(),
                })
            })
            .collect()
    }
}

fn sort_tokens(tokens: &mut [Token]) {
    // stable: equal (start, side) keeps file order
    tokens.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.side.cmp(&b.side)));
}

/// Lowercases a word and strips everything except letters, digits and inner
/// apostrophes.
pub fn normalize_word(raw: &str) -> String {
    let kept: String = raw
        .chars()
        .filter(|c| c.is_alphanumeric() || *c == '\'')
        .flat_map(char::to_lowercase)
        .collect();
    kept.trim_matches('\'').to_string()
}

fn parse_seconds(field: &str, what: &str, line: usize) -> Result<f64, CorpusError> {
    let value: f64 = field.parse().map_err(|_| CorpusError::Parse {
        line,
        message: format!("non-numeric {what} '{field}'"),
    })?;
    if !value.is_finite() {
        return Err(CorpusError::Parse {
            line,
            message: format!("non-finite {what} '{field}'"),
        });
    }
    if value < 0.0 {
        return Err(CorpusError::Parse {
            line,
            message: format!("negative {what} {value}"),
        });
    }
    Ok(value)
}

/// Reads a time-annotated transcript: `start duration side token` per line,
/// whitespace separated, `#` comments and blank lines ignored.
///
/// Tokens whose text normalizes to nothing (pure punctuation) are dropped.
pub fn parse_time_annotated<R: BufRead>(id: &str, input: R) -> Result<Conversation, CorpusError> {
    let mut tokens = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(CorpusError::Parse {
                line: lineno,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let start = parse_seconds(fields[0], "start", lineno)?;
        let duration = parse_seconds(fields[1], "duration", lineno)?;
        let side: Side = fields[2].parse().map_err(|message| CorpusError::Parse {
            line: lineno,
            message,
        })?;
        let text = normalize_word(fields[3]);
        if text.is_empty() {
            continue;
        }
        tokens.push(Token {
            text,
            side,
            start,
            duration,
            label: None,
        });
    }
    Ok(Conversation::new(id, tokens))
}

/// Class of the punctuation run that trails a word. An ellipsis (`...` or
/// `…`) counts as blank; otherwise the first mark decides.
fn trailing_class(run: &str) -> PunctuationClass {
    if run.contains('…') || run.contains("..") {
        return PunctuationClass::Blank;
    }
    run.chars()
        .find(|c| !c.is_whitespace())
        .map(PunctuationClass::from_mark)
        .unwrap_or(PunctuationClass::Blank)
}

/// Splits punctuated text into lowercased words, each paired with the class
/// of the mark that follows it.
pub fn parse_punctuated(text: &str) -> Vec<(String, PunctuationClass)> {
    let mut out: Vec<(String, PunctuationClass)> = Vec::new();
    for chunk in text.split_whitespace() {
        let last_word_char = chunk
            .char_indices()
            .rfind(|(_, c)| c.is_alphanumeric())
            .map(|(i, c)| i + c.len_utf8());
        match last_word_char {
            Some(end) => {
                let word = normalize_word(&chunk[..end]);
                if word.is_empty() {
                    continue;
                }
                out.push((word, trailing_class(&chunk[end..])));
            }
            // a detached mark such as " , " belongs to the previous word
            None => {
                if let Some(last) = out.last_mut() {
                    if last.1 == PunctuationClass::Blank {
                        last.1 = trailing_class(chunk);
                    }
                }
            }
        }
    }
    out
}

/// Inverse of [`parse_punctuated`]: words joined by spaces, marks attached.
pub fn render_punctuated<S: AsRef<str>>(words: &[(S, PunctuationClass)]) -> String {
    words
        .iter()
        .map(|(w, c)| format!("{}{}", w.as_ref(), c.mark()))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Copies punctuation classes across an alignment. Matched or substituted
/// tokens take the punctuated word's class, tokens with no counterpart get
/// blank, and punctuated words with no counterpart are dropped.
pub fn transfer_labels(
    conv: &Conversation,
    punct: &[(String, PunctuationClass)],
    alignment: &Alignment,
) -> Result<Conversation, CorpusError> {
    alignment
        .validate(conv.len(), punct.len())
        .map_err(CorpusError::Alignment)?;
    let mut out = conv.clone();
    for op in &alignment.ops {
        match *op {
            AlignOp::Match(i, j) | AlignOp::Subst(i, j) => {
                out.tokens[i].label = Some(punct[j].1);
            }
            AlignOp::Delete(i) => out.tokens[i].label = Some(PunctuationClass::Blank),
            AlignOp::Insert(_) => {}
        }
    }
    Ok(out)
}

/// Aligns a time-annotated conversation with its punctuated transcript and
/// transfers the labels.
pub fn label_conversation(
    conv: &Conversation,
    punct: &[(String, PunctuationClass)],
    scoring: &AlignScoring,
) -> Result<Conversation, CorpusError> {
    if conv.is_empty() || punct.is_empty() {
        return Err(CorpusError::Alignment(format!(
            "conversation '{}' has an empty transcript",
            conv.id
        )));
    }
    let words: Vec<&str> = punct.iter().map(|(w, _)| w.as_str()).collect();
    let alignment = align(&conv.texts(), &words, scoring).map_err(CorpusError::Alignment)?;
    transfer_labels(conv, punct, &alignment)
}

/// Train / validation / test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
}

impl<T> Split<T> {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.validation.len(), self.test.len())
    }
}

/// Shuffles with `seed` and splits whole items 80/10/10; rounding leftovers
/// go to the training part.
pub fn split_dataset<T>(mut items: Vec<T>, seed: u64) -> Result<Split<T>, CorpusError> {
    let n = items.len();
    if n < 10 {
        return Err(CorpusError::TooFewConversations(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    items.shuffle(&mut rng);
    let n_held = n / 10;
    let test = items.split_off(n - n_held);
    let validation = items.split_off(n - 2 * n_held);
    Ok(Split {
        train: items,
        validation,
        test,
    })
}

/// Per-class token counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassDistribution {
    pub counts: [usize; PunctuationClass::COUNT],
}

impl ClassDistribution {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn count(&self, class: PunctuationClass) -> usize {
        self.counts[class.index()]
    }

    /// Percentage of each class; all zero for an empty corpus.
    pub fn percentages(&self) -> [f64; PunctuationClass::COUNT] {
        let total = self.total();
        let mut out = [0.0; PunctuationClass::COUNT];
        if total > 0 {
            for (p, &c) in out.iter_mut().zip(&self.counts) {
                *p = 100.0 * c as f64 / total as f64;
            }
        }
        out
    }

    /// Tab-separated `class count percentage` rows in class order.
    pub fn render(&self) -> String {
        let pct = self.percentages();
        let mut s = String::from("class\tcount\tpercentage\n");
        for class in PunctuationClass::ALL {
            s.push_str(&format!(
                "{}\t{}\t{:.1}\n",
                class.symbol(),
                self.count(class),
                pct[class.index()]
            ));
        }
        s
    }
}

pub fn class_distribution(convs: &[Conversation]) -> Result<ClassDistribution, CorpusError> {
    let mut dist = ClassDistribution::default();
    for conv in convs {
        for label in conv.labels()? {
            dist.counts[label.index()] += 1;
        }
    }
    Ok(dist)
}

/// Writes the labeled dataset format:
/// `start<TAB>duration<TAB>side<TAB>token<TAB>label`.
pub fn write_labeled<W: Write>(conv: &Conversation, mut out: W) -> Result<(), CorpusError> {
    for (index, t) in conv.tokens.iter().enumerate() {
        let label = t.label.ok_or_else(|| CorpusError::Unlabeled {
            index,
            text: t.text.clone(),
        })?;
        writeln!(out, "{}\t{}\t{}\t{}\t{}", t.start, t.duration, t.side, t.text, label)?;
    }
    Ok(())
}

pub fn read_labeled<R: BufRead>(id: &str, input: R) -> Result<Conversation, CorpusError> {
    let mut tokens = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(CorpusError::Parse {
                line: lineno,
                message: format!("expected 5 tab-separated fields, found {}", fields.len()),
            });
        }
        let parse_err = |message: String| CorpusError::Parse {
            line: lineno,
            message,
        };
        tokens.push(Token {
            start: parse_seconds(fields[0], "start", lineno)?,
            duration: parse_seconds(fields[1], "duration", lineno)?,
            side: fields[2].parse().map_err(parse_err)?,
            text: fields[3].to_string(),
            label: Some(fields[4].parse().map_err(parse_err)?),
        });
    }
    Ok(Conversation::new(id, tokens))
}
