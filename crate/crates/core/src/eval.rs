//! Per-class precision, recall and F1, confusion matrices, and the homonym
//! similarity report.

use std::fmt::Write as _;

use thiserror::Error;

use crate::corpus::PunctuationClass;
use crate::embeddings::{phrase_similarity, EmbeddingError, EmbeddingTable};

const K: usize = PunctuationClass::COUNT;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{preds} predictions for {golds} gold labels")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("no embedding for: {}", .0.join(", "))]
    OutOfVocabulary(Vec<String>),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold tokens of the class.
    pub support: u64,
    /// Tokens predicted as the class.
    pub predicted: u64,
}

impl ClassScore {
    fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let ratio = |n: u64, d: u64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ClassScore {
            precision,
            recall,
            f1,
            support: tp + fn_,
            predicted: tp + fp,
        }
    }
}

/// Scores indexed by [`PunctuationClass::index`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassMetrics {
    pub classes: [ClassScore; K],
}

impl ClassMetrics {
    pub fn get(&self, class: PunctuationClass) -> &ClassScore {
        &self.classes[class.index()]
    }
}

/// Rows are gold classes, columns predicted classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[u64; K]; K],
}

impl ConfusionMatrix {
    pub fn from_sequences(preds: &[PunctuationClass], golds: &[PunctuationClass]) -> Result<Self, EvalError> {
        check_lengths(preds, golds)?;
        let mut m = ConfusionMatrix::default();
        for (p, g) in preds.iter().zip(golds) {
            m.counts[g.index()][p.index()] += 1;
        }
        Ok(m)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..K).map(|i| self.counts[i][i]).sum()
    }

    /// Share of tokens on the diagonal; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.correct() as f64 / n as f64,
        }
    }

    /// Each row as percentages of its total; empty rows stay zero.
    pub fn row_percentages(&self) -> [[f64; K]; K] {
        let mut out = [[0.0; K]; K];
        for (row, counts) in out.iter_mut().zip(&self.counts) {
            let n: u64 = counts.iter().sum();
            if n > 0 {
                for (o, &c) in row.iter_mut().zip(counts) {
                    *o = 100.0 * c as f64 / n as f64;
                }
            }
        }
        out
    }

    pub fn diagonal_percentages(&self) -> [f64; K] {
        let p = self.row_percentages();
        std::array::from_fn(|i| p[i][i])
    }

    pub fn metrics(&self) -> ClassMetrics {
        ClassMetrics {
            classes: std::array::from_fn(|c| {
                let tp = self.counts[c][c];
                let row: u64 = self.counts[c].iter().sum();
                let col: u64 = self.counts.iter().map(|r| r[c]).sum();
                ClassScore::from_counts(tp, col - tp, row - tp)
            }),
        }
    }
}

fn check_lengths(preds: &[PunctuationClass], golds: &[PunctuationClass]) -> Result<(), EvalError> {
    if preds.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            preds: preds.len(),
            golds: golds.len(),
        });
    }
    Ok(())
}

/// Per-class metrics counted straight from the sequences, plus the
/// confusion matrix.
pub fn score(
    preds: &[PunctuationClass],
    golds: &[PunctuationClass],
) -> Result<(ClassMetrics, ConfusionMatrix), EvalError> {
    check_lengths(preds, golds)?;
    let classes = std::array::from_fn(|c| {
        let class = PunctuationClass::ALL[c];
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (&p, &g) in preds.iter().zip(golds) {
            match (p == class, g == class) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        ClassScore::from_counts(tp, fp, fn_)
    });
    Ok((ClassMetrics { classes }, ConfusionMatrix::from_sequences(preds, golds)?))
}

/// Change of each class's diagonal percentage from `before` to `after`.
pub fn compare_confusions(before: &ConfusionMatrix, after: &ConfusionMatrix) -> [f64; K] {
    let a = before.diagonal_percentages();
    let b = after.diagonal_percentages();
    std::array::from_fn(|i| b[i] - a[i])
}

/// `class<TAB>precision<TAB>recall<TAB>f1<TAB>support` with a header line.
pub fn render_metrics_tsv(metrics: &ClassMetrics) -> String {
    let mut out = String::from("class\tprecision\trecall\tf1\tsupport\n");
    for class in PunctuationClass::ALL {
        let s = metrics.get(class);
        writeln!(
            out,
            "{}\t{:.4}\t{:.4}\t{:.4}\t{}",
            class.name(),
            s.precision,
            s.recall,
            s.f1,
            s.support
        )
        .expect("string write");
    }
    out
}

/// Aligned table in percent, with a note on classes nothing was predicted
/// as or that never occur.
pub fn render_metrics_table(metrics: &ClassMetrics) -> String {
    let mut out = format!("{:<10}{:>10}{:>10}{:>10}{:>10}\n", "class", "precision", "recall", "f1", "support");
    for class in PunctuationClass::ALL {
        let s = metrics.get(class);
        write!(
            out,
            "{:<10}{:>10.1}{:>10.1}{:>10.1}{:>10}",
            class.name(),
            100.0 * s.precision,
            100.0 * s.recall,
            100.0 * s.f1,
            s.support
        )
        .expect("string write");
        if s.support == 0 {
            out.push_str("  (no gold tokens)");
        } else if s.predicted == 0 {
            out.push_str("  (never predicted)");
        }
        out.push('\n');
    }
    out
}

/// Four rows of four tab-separated row percentages, one decimal.
pub fn render_confusion_tsv(m: &ConfusionMatrix) -> String {
    m.row_percentages()
        .iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|p| format!("{p:.1}")).collect();
            cells.join("\t") + "\n"
        })
        .collect()
}

/// Labeled percentage table with raw counts per row.
pub fn render_confusion_table(m: &ConfusionMatrix) -> String {
    let mut out = format!("{:<10}", "gold\\pred");
    for c in PunctuationClass::ALL {
        write!(out, "{:>10}", c.name()).expect("string write");
    }
    out.push_str(&format!("{:>10}\n", "tokens"));
    for (i, row) in m.row_percentages().iter().enumerate() {
        write!(out, "{:<10}", PunctuationClass::ALL[i].name()).expect("string write");
        for p in row {
            write!(out, "{p:>10.1}").expect("string write");
        }
        writeln!(out, "{:>10}", m.counts[i].iter().sum::<u64>()).expect("string write");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityRow {
    pub left: String,
    pub right: String,
    pub original: f64,
    pub retrofitted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityReport {
    pub rows: Vec<SimilarityRow>,
}

impl SimilarityReport {
    /// Pairs that moved closer after retrofitting.
    pub fn increased(&self) -> usize {
        self.rows.iter().filter(|r| r.retrofitted > r.original).count()
    }

    pub fn render_tsv(&self) -> String {
        let mut out = String::from("pair\toriginal\tretrofitted\n");
        for r in &self.rows {
            writeln!(out, "{} | {}\t{:.4}\t{:.4}", r.left, r.right, r.original, r.retrofitted).expect("string write");
        }
        writeln!(out, "# increased {} of {}", self.increased(), self.rows.len()).expect("string write");
        out
    }
}

/// Cosine of each phrase pair in both embedding spaces. Every missing word
/// across all pairs and both tables is reported at once.
pub fn similarity_report<S: AsRef<str>>(
    pairs: &[(S, S)],
    original: &EmbeddingTable,
    retrofitted: &EmbeddingTable,
) -> Result<SimilarityReport, EvalError> {
    let mut missing: Vec<String> = Vec::new();
    for (a, b) in pairs {
        for w in a.as_ref().split_whitespace().chain(b.as_ref().split_whitespace()) {
            for (name, table) in [("original", original), ("retrofitted", retrofitted)] {
                let tag = format!("{w} ({name})");
                if !table.contains(w) && !missing.contains(&tag) {
                    missing.push(tag);
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(EvalError::OutOfVocabulary(missing));
    }
    let rows = pairs
        .iter()
        .map(|(a, b)| {
            let (a, b) = (a.as_ref(), b.as_ref());
            let wa: Vec<&str> = a.split_whitespace().collect();
            let wb: Vec<&str> = b.split_whitespace().collect();
            Ok(SimilarityRow {
                left: a.to_string(),
                right: b.to_string(),
                original: phrase_similarity(&wa, &wb, original)?,
                retrofitted: phrase_similarity(&wa, &wb, retrofitted)?,
            })
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(SimilarityReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use PunctuationClass::{Blank as E, Comma as C, Period as P, Question as Q};

    #[test]
    fn perfect_predictions() {
        let golds = [E, P, Q, C, E, E, P];
        let (m, cm) = score(&golds, &golds).unwrap();
        for s in m.classes {
            assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        }
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(cm.counts[i][j], 0);
                }
            }
        }
        assert_eq!(cm.accuracy(), 1.0);
    }

    #[test]
    fn hand_counted_example() {
        let golds = [P, P, Q, E];
        let preds = [P, E, Q, E];
        let (m, cm) = score(&preds, &golds).unwrap();
        let p = m.get(P);
        assert_eq!((p.precision, p.recall), (1.0, 0.5));
        assert_abs_diff_eq!(p.f1, 2.0 / 3.0, epsilon = 1e-12);
        let q = m.get(Q);
        assert_eq!((q.precision, q.recall, q.f1), (1.0, 1.0, 1.0));
        let e = m.get(E);
        assert_eq!((e.precision, e.recall), (0.5, 1.0));
        assert_abs_diff_eq!(e.f1, 2.0 / 3.0, epsilon = 1e-12);
        let c = m.get(C);
        assert_eq!((c.precision, c.recall, c.f1, c.support), (0.0, 0.0, 0.0, 0));
        let mut want = [[0u64; 4]; 4];
        want[0][0] = 1;
        want[1][1] = 1;
        want[1][0] = 1;
        want[2][2] = 1;
        assert_eq!(cm.counts, want);
        assert_eq!(cm.accuracy(), 0.75);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            score(&[E, P], &[E]),
            Err(EvalError::LengthMismatch { preds: 2, golds: 1 })
        ));
    }

    fn matrix_with_diagonal(diag_per_mille: [u64; 4]) -> ConfusionMatrix {
        let mut m = ConfusionMatrix::default();
        for (i, &d) in diag_per_mille.iter().enumerate() {
            m.counts[i][i] = d;
            m.counts[i][(i + 1) % 4] = 1000 - d;
        }
        m
    }

    #[test]
    fn confusion_deltas() {
        let before = matrix_with_diagonal([950, 587, 490, 550]);
        let after = matrix_with_diagonal([950, 677, 552, 619]);
        let d = compare_confusions(&before, &after);
        assert_abs_diff_eq!(d[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d[1], 9.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d[2], 6.2, epsilon = 1e-9);
        assert_abs_diff_eq!(d[3], 6.9, epsilon = 1e-9);
        let back = compare_confusions(&after, &before);
        for i in 0..4 {
            assert_eq!(back[i], -d[i]);
        }
        assert_eq!(compare_confusions(&before, &before), [0.0; 4]);
    }

    #[test]
    fn renderers() {
        let (m, cm) = score(&[P, E, Q, E], &[P, P, Q, E]).unwrap();
        let tsv = render_metrics_tsv(&m);
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines[0], "class\tprecision\trecall\tf1\tsupport");
        assert_eq!(lines[2], "PERIOD\t1.0000\t0.5000\t0.6667\t2");
        assert_eq!(lines.len(), 5);
        let conf = render_confusion_tsv(&cm);
        assert_eq!(conf, "100.0\t0.0\t0.0\t0.0\n50.0\t50.0\t0.0\t0.0\n0.0\t0.0\t100.0\t0.0\n0.0\t0.0\t0.0\t0.0\n");
        let table = render_metrics_table(&m);
        assert!(table.contains("COMMA") && table.contains("(no gold tokens)"));
        assert!(render_confusion_table(&cm).lines().count() == 5);
    }

    fn table(entries: &[(&str, [f64; 2])]) -> EmbeddingTable {
        let mut t = EmbeddingTable::new(2);
        for (w, v) in entries {
            t.insert(*w, v.to_vec()).unwrap();
        }
        t
    }

    #[test]
    fn similarity_rows() {
        let orig = table(&[("cancel", [1.0, 0.0]), ("cancer", [0.0, 1.0]), ("x", [0.3, 0.4])]);
        let retro = table(&[("cancel", [1.0, 0.2]), ("cancer", [0.9, 0.3]), ("x", [-1.0, 2.0])]);
        let r = similarity_report(&[("cancel", "cancer"), ("x", "x")], &orig, &retro).unwrap();
        assert_abs_diff_eq!(r.rows[0].original, 0.0, epsilon = 1e-12);
        assert!(r.rows[0].retrofitted > 0.9);
        assert_abs_diff_eq!(r.rows[1].original, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.rows[1].retrofitted, 1.0, epsilon = 1e-12);
        assert_eq!(r.increased(), 1);
        assert!(r.render_tsv().starts_with("pair\toriginal\tretrofitted\ncancel | cancer\t0.0000\t"));
        assert!(r.render_tsv().ends_with("# increased 1 of 2\n"));
    }

    #[test]
    fn similarity_lists_every_missing_word() {
        let orig = table(&[("a", [1.0, 0.0])]);
        let retro = table(&[("a", [1.0, 0.0]), ("b", [0.0, 1.0])]);
        match similarity_report(&[("a b", "c")], &orig, &retro) {
            Err(EvalError::OutOfVocabulary(words)) => {
                assert_eq!(words, vec!["b (original)", "c (original)", "c (retrofitted)"]);
            }
            other => panic!("{other:?}"),
        }
    }

    fn class() -> impl Strategy<Value = PunctuationClass> {
        (0usize..4).prop_map(|i| PunctuationClass::ALL[i])
    }

    proptest! {
        #[test]
        fn two_code_paths_agree(pairs in prop::collection::vec((class(), class()), 0..200)) {
            let (preds, golds): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let (direct, cm) = score(&preds, &golds).unwrap();
            prop_assert_eq!(direct, cm.metrics());
            prop_assert_eq!(cm.total(), preds.len() as u64);
            let acc = preds.iter().zip(&golds).filter(|(p, g)| p == g).count() as f64 / preds.len().max(1) as f64;
            prop_assert_eq!(cm.accuracy(), acc);
            for (row, counts) in cm.row_percentages().iter().zip(cm.counts) {
                if counts.iter().sum::<u64>() > 0 {
                    prop_assert!((row.iter().sum::<f64>() - 100.0).abs() < 0.1);
                }
            }
            for s in direct.classes {
                for v in [s.precision, s.recall, s.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }

        #[test]
        fn permutation_invariance(
            pairs in prop::collection::vec((class(), class()), 1..100),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (p1, g1): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let (p2, g2): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
            prop_assert_eq!(score(&p1, &g1).unwrap(), score(&p2, &g2).unwrap());
        }
    }
}
