//! Synthetic two-speaker telephone conversations for demos and tests.
//!
//! Each conversation exists in three forms: the clean labeled token stream,
//! a punctuated transcript, and an "ASR" time-annotated transcript with
//! fillers, dropped words and homophone-style substitutions (`cancel` is
//! heard as `cancer`, `thank` as `think`). Pauses and word lengthening
//! follow sentence structure, so the timing features carry signal.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::{Conversation, PunctuationClass, Side, Token};
use crate::embeddings::EmbeddingTable;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpec {
    pub conversations: usize,
    /// Spoken words per conversation, at least.
    pub min_words: usize,
    pub dim: usize,
    /// Share of corpus words given a pre-trained vector.
    pub coverage: f64,
    /// Probability that a spoken `cancel` is transcribed as `cancer`.
    pub homophone_rate: f64,
    pub seed: u64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            conversations: 30,
            min_words: 380,
            dim: 16,
            coverage: 0.8,
            homophone_rate: 0.3,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConversation {
    pub id: String,
    /// What was said, with gold labels and timings.
    pub spoken: Conversation,
    /// Time-annotated recognizer output, one `start duration side word` line
    /// per token.
    pub timed: String,
    pub punctuated: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleData {
    pub conversations: Vec<SyntheticConversation>,
    pub pretrained: EmbeddingTable,
    pub pairs: Vec<(String, String)>,
}

/// Word groups; words of a group share a pre-trained cluster.
const QUESTION: &[&str] = &["what", "where", "when", "why", "how", "do", "did", "are", "can", "would"];
const PEOPLE: &[&str] = &[
    "i", "you", "we", "they", "he", "she", "my brother", "my wife", "our neighbors", "the kids", "my boss",
];
const VERBS: &[&str] = &[
    "like", "watch", "need", "want", "visit", "remember", "love", "hate", "bought", "cooked", "fixed", "called",
    "moved", "started", "sold", "found",
];
const THINGS: &[&str] = &[
    "the game", "a new car", "the movie", "my parents", "that show", "the garden", "some pizza", "the doctor",
    "our trip", "the weather", "my job", "the house", "a puppy", "the tickets", "the project", "dinner",
    "the flight", "my order", "the meeting", "the news",
];
const PLACES: &[&str] = &[
    "at home", "in the city", "on the weekend", "last summer", "every day", "after work", "near the school",
    "in texas", "downtown", "this year",
];
const ADJECTIVES: &[&str] = &["great", "pretty good", "really cold", "expensive", "funny", "crazy", "nice", "terrible"];
const STATES: &[&str] = &["working there", "in school", "watching it", "living downtown", "busy"];
const OPENERS: &[&str] = &["well", "so", "yeah", "oh", "okay", "actually", "you know", "i mean"];
const BACKCHANNELS: &[&str] = &["yeah", "right", "uh-huh", "okay", "mhm", "sure", "wow"];
const EXCLAIMS: &[&str] = &["oh wow!", "no way!", "that is amazing!", "oh my gosh!"];
const FILLERS: &[&str] = &["uh", "um"];
/// Pre-trained words absent from the conversations.
const DISTRACTORS: &[&str] = &[
    "hospital", "tumor", "patient", "nurse", "therapy", "terminate", "abort", "halt", "quit", "revoke",
    "keyboard", "planet", "violin", "harbor", "glacier",
];
/// Words that always get a pre-trained vector.
const PROTECTED: &[&str] = &["cancel", "cancer", "thank", "think", "you", "okay", "game", "movie", "the"];

fn pick<'a, R: Rng>(rng: &mut R, list: &[&'a str]) -> &'a str {
    list.choose(rng).expect("non-empty list")
}

/// A sentence as words with the mark that follows each one.
type Sentence = Vec<(String, char)>;

fn words(text: &str) -> Sentence {
    text.split_whitespace().map(|w| (w.to_string(), ' ')).collect()
}

fn finish(mut s: Sentence, mark: char) -> Sentence {
    if let Some(last) = s.last_mut() {
        last.1 = mark;
    }
    s
}

fn statement<R: Rng>(rng: &mut R) -> Sentence {
    let subj = pick(rng, PEOPLE);
    let core = match rng.random_range(0..9) {
        0 => format!("{subj} {} {}", pick(rng, VERBS), pick(rng, THINGS)),
        1 => format!("{subj} {} {} {}", pick(rng, VERBS), pick(rng, THINGS), pick(rng, PLACES)),
        2 => format!("i think {subj} {} {}", pick(rng, VERBS), pick(rng, THINGS)),
        3 => format!("it was {}", pick(rng, ADJECTIVES)),
        4 => format!("{subj} had to cancel {}", pick(rng, THINGS)),
        5 => format!("we might cancel {} {}", pick(rng, THINGS), pick(rng, PLACES)),
        6 => "thank you so much".to_string(),
        7 => {
            // list with commas
            let mut s = words(&format!("{subj} {}", pick(rng, VERBS)));
            s.extend(finish(words(pick(rng, THINGS)), ','));
            s.extend(finish(words(pick(rng, THINGS)), ','));
            s.extend(words("and"));
            s.extend(words(pick(rng, THINGS)));
            return finish(s, '.');
        }
        _ => format!("{} is {}", pick(rng, THINGS), pick(rng, ADJECTIVES)),
    };
    finish(words(&core), '.')
}

fn question<R: Rng>(rng: &mut R) -> Sentence {
    let core = match rng.random_range(0..8) {
        0 => format!("do you {} {}", pick(rng, VERBS), pick(rng, THINGS)),
        1 => format!("did {} {} {}", pick(rng, PEOPLE), pick(rng, VERBS), pick(rng, THINGS)),
        2 => format!("what do you think about {}", pick(rng, THINGS)),
        3 => "where do you live".to_string(),
        4 => format!("how was {}", pick(rng, THINGS)),
        5 => format!("are you still {}", pick(rng, STATES)),
        6 => format!("can you cancel {}", pick(rng, THINGS)),
        _ => format!("why did {} cancel {}", pick(rng, PEOPLE), pick(rng, THINGS)),
    };
    finish(words(&core), '?')
}

fn sentence<R: Rng>(rng: &mut R) -> Sentence {
    let roll: f64 = rng.random();
    if roll < 0.05 {
        let mut s = words(pick(rng, EXCLAIMS));
        let last = s.last_mut().expect("non-empty");
        last.0 = last.0.trim_end_matches('!').to_string();
        last.1 = '!';
        return s;
    }
    if roll < 0.08 {
        // trailing off
        let mut s = statement(rng);
        s.truncate(s.len().clamp(1, 3));
        return finish(s, '…');
    }
    let mut s = Vec::new();
    if rng.random_bool(0.3) {
        s.extend(finish(words(pick(rng, OPENERS)), ','));
    }
    if rng.random_bool(0.3) {
        s.extend(question(rng));
    } else {
        let body = statement(rng);
        if rng.random_bool(0.08) {
            // tag question
            s.extend(finish(body, ','));
            s.push(("right".to_string(), '?'));
        } else {
            s.extend(body);
        }
    }
    s
}

fn class_of(mark: char) -> PunctuationClass {
    PunctuationClass::from_mark(mark)
}

struct Spoken {
    text: String,
    side: Side,
    start: f64,
    duration: f64,
    mark: char,
    filler: bool,
}

fn word_duration<R: Rng>(rng: &mut R, word: &str) -> f64 {
    0.1 + 0.045 * word.chars().count() as f64 + rng.random_range(0.0..0.06)
}

/// Appends a sentence spoken by `side` starting at `t`; returns the end time.
fn speak<R: Rng>(rng: &mut R, out: &mut Vec<Spoken>, side: Side, sentence: &Sentence, mut t: f64) -> f64 {
    for (i, (w, mark)) in sentence.iter().enumerate() {
        if i > 0 && rng.random_bool(0.04) {
            let f = pick(rng, FILLERS);
            let d = 0.2 + rng.random_range(0.0..0.15);
            out.push(Spoken {
                text: f.to_string(),
                side,
                start: t,
                duration: d,
                mark: ' ',
                filler: true,
            });
            t += d + rng.random_range(0.02..0.1);
        }
        let last = i + 1 == sentence.len();
        let mut d = word_duration(rng, w);
        if last {
            d *= if *mark == '?' { 1.45 } else { 1.25 };
        }
        out.push(Spoken {
            text: w.clone(),
            side,
            start: t,
            duration: d,
            mark: *mark,
            filler: false,
        });
        t += d;
        t += match mark {
            ',' => rng.random_range(0.15..0.35),
            '.' | '?' | '!' | '…' => rng.random_range(0.35..0.8),
            _ => rng.random_range(0.0..0.06),
        };
    }
    t
}

fn capitalize(word: &str) -> String {
    let mut c = word.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn conversation<R: Rng>(rng: &mut R, id: &str, min_words: usize, homophone_rate: f64) -> SyntheticConversation {
    let mut spoken: Vec<Spoken> = Vec::new();
    let mut side = Side::A;
    let mut t = rng.random_range(0.0..1.0);
    let mut count = 0;
    while count < min_words {
        let turn_start = t;
        for _ in 0..rng.random_range(1..=3) {
            let s = sentence(rng);
            count += s.len();
            t = speak(rng, &mut spoken, side, &s, t);
        }
        let other = if side == Side::A { Side::B } else { Side::A };
        if t - turn_start > 2.5 && rng.random_bool(0.3) {
            let at = rng.random_range(turn_start + 0.5..t - 0.5);
            let bc = finish(words(pick(rng, BACKCHANNELS)), '.');
            count += 1;
            speak(rng, &mut spoken, other, &bc, at);
        }
        side = other;
        t += rng.random_range(-0.1..0.5);
    }
    // merged order, as the corpus reader sorts it
    spoken.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.side.cmp(&b.side)));

    let mut punctuated = String::new();
    let mut sentence_start = [true, true];
    for s in spoken.iter().filter(|s| !s.filler) {
        let slot = s.side as usize;
        let mut w = if sentence_start[slot] || s.text == "i" {
            capitalize(&s.text)
        } else {
            s.text.clone()
        };
        sentence_start[slot] = matches!(s.mark, '.' | '?' | '!');
        match s.mark {
            ' ' => {}
            '…' => w.push_str("..."),
            m => w.push(m),
        }
        if !punctuated.is_empty() {
            punctuated.push(' ');
        }
        punctuated.push_str(&w);
    }
    punctuated.push('\n');

    let mut timed = String::new();
    for s in &spoken {
        if !s.filler && rng.random_bool(0.01) {
            continue;
        }
        let heard = match s.text.as_str() {
            "cancel" if rng.random_bool(homophone_rate) => "cancer",
            "thank" if rng.random_bool(0.2) => "think",
            w => w,
        };
        writeln!(timed, "{:.2} {:.2} {} {}", s.start, s.duration, s.side, heard).expect("string write");
    }

    let tokens = spoken
        .iter()
        .flat_map(|s| {
            let label = if s.filler {
                PunctuationClass::Blank
            } else {
                class_of(s.mark)
            };
            let parts: Vec<String> = s.text.split_whitespace().map(crate::corpus::normalize_word).collect();
            parts.into_iter().map(move |text| Token {
                text,
                side: s.side,
                start: s.start,
                duration: s.duration,
                label: Some(label),
            })
        })
        .collect();
    SyntheticConversation {
        id: id.to_string(),
        spoken: Conversation::new(id, tokens),
        timed,
        punctuated,
    }
}

fn unit_gaussian<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn word_groups() -> Vec<(&'static str, Vec<String>)> {
    let split = |list: &[&str]| -> Vec<String> {
        list.iter()
            .flat_map(|p| p.split_whitespace())
            .map(crate::corpus::normalize_word)
            .collect()
    };
    vec![
        ("question", split(QUESTION)),
        ("people", split(PEOPLE)),
        ("verbs", split(VERBS)),
        ("things", split(THINGS)),
        ("places", split(PLACES)),
        ("adjectives", split(ADJECTIVES)),
        ("states", split(STATES)),
        ("openers", split(OPENERS)),
        ("backchannels", split(BACKCHANNELS)),
        ("exclaims", split(EXCLAIMS)),
        ("misc", split(&["i think it was thank so much had to might is and right"])),
        ("stop", split(&["cancel terminate abort halt quit revoke"])),
        ("health", split(&["cancer hospital tumor patient nurse therapy"])),
        ("other", split(&["keyboard planet violin harbor glacier"])),
    ]
}

/// Pre-trained vectors: one random direction per word group plus noise.
/// `cancel` and `cancer` sit at cosine 0.1. Uses its own random stream so
/// the table does not depend on the number of conversations.
fn pretrained_table(dim: usize, coverage: f64, seed: u64) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_7ab1e);
    let mut vectors: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut order = Vec::new();
    for (_, group) in word_groups() {
        let center = unit_gaussian(&mut rng, dim);
        for w in group {
            if vectors.contains_key(&w) {
                continue;
            }
            let noise = unit_gaussian(&mut rng, dim);
            let v: Vec<f64> = center.iter().zip(&noise).map(|(c, n)| 1.2 * c + 0.6 * n).collect();
            let keep = PROTECTED.contains(&w.as_str()) || DISTRACTORS.contains(&w.as_str()) || rng.random_bool(coverage);
            if keep {
                order.push(w.clone());
                vectors.insert(w, v);
            }
        }
    }
    let cancel = vectors["cancel"].clone();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let u: Vec<f64> = cancel.iter().map(|x| x / norm(&cancel)).collect();
    let raw = vectors["cancer"].clone();
    let along = raw.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
    let perp: Vec<f64> = raw.iter().zip(&u).map(|(r, x)| r - along * x).collect();
    let pn = norm(&perp);
    let target = norm(&raw);
    let cancer: Vec<f64> = u
        .iter()
        .zip(&perp)
        .map(|(a, p)| target * (0.1 * a + (1.0f64 - 0.01).sqrt() * p / pn))
        .collect();
    vectors.insert("cancer".into(), cancer);

    let mut table = EmbeddingTable::new(dim);
    for w in order {
        let v = vectors.remove(&w).expect("vector");
        // the pronoun is stored capitalized, as in cased vector files
        let key = if w == "i" { "I".to_string() } else { w };
        table.insert(key, v).expect("finite vector");
    }
    table
}

pub fn sample_data(spec: &SampleSpec) -> SampleData {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let conversations = (0..spec.conversations)
        .map(|i| conversation(&mut rng, &format!("conv{:03}", i + 1), spec.min_words, spec.homophone_rate))
        .collect();
    let pairs = [
        ("cancel", "cancer"),
        ("thank you", "think you"),
        ("the game", "the movie"),
        ("okay", "okay"),
    ]
    .iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect();
    SampleData {
        conversations,
        pretrained: pretrained_table(spec.dim, spec.coverage, spec.seed),
        pairs,
    }
}

/// The first `len` gold-labeled tokens of `count` fresh conversations.
pub fn labeled_conversations(count: usize, len: usize, seed: u64) -> Vec<Conversation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let mut c = conversation(&mut rng, &format!("syn{i}"), len, 0.0).spoken;
            c.tokens.truncate(len);
            c
        })
        .collect()
}
