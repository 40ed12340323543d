//! Needleman-Wunsch global alignment of word sequences.

/// Scores for the alignment recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignScoring {
    pub match_score: i64,
    pub mismatch: i64,
    pub gap: i64,
}

impl Default for AlignScoring {
    fn default() -> Self {
        AlignScoring {
            match_score: 1,
            mismatch: -1,
            gap: -1,
        }
    }
}

impl AlignScoring {
    pub fn validate(&self) -> Result<(), String> {
        if self.match_score <= self.mismatch || self.match_score <= self.gap {
            return Err(format!(
                "match score {} must exceed mismatch {} and gap {}",
                self.match_score, self.mismatch, self.gap
            ));
        }
        Ok(())
    }

    fn pair(&self, same: bool) -> i64 {
        if same {
            self.match_score
        } else {
            self.mismatch
        }
    }
}

/// One step of an alignment. `i` indexes the first (time-annotated)
/// sequence, `j` the second (punctuated) one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignOp {
    Match(usize, usize),
    Subst(usize, usize),
    /// `a[i]` has no counterpart.
    Delete(usize),
    /// `b[j]` has no counterpart.
    Insert(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub ops: Vec<AlignOp>,
    pub score: i64,
}

impl Alignment {
    /// Checks that the ops visit every index of both sequences exactly once
    /// and in order.
    pub fn validate(&self, len_a: usize, len_b: usize) -> Result<(), String> {
        let (mut next_i, mut next_j) = (0usize, 0usize);
        for op in &self.ops {
            let (i, j) = match *op {
                AlignOp::Match(i, j) | AlignOp::Subst(i, j) => (Some(i), Some(j)),
                AlignOp::Delete(i) => (Some(i), None),
                AlignOp::Insert(j) => (None, Some(j)),
            };
            if let Some(i) = i {
                if i != next_i || i >= len_a {
                    return Err(format!("{op:?}: expected a-index {next_i} of {len_a}"));
                }
                next_i += 1;
            }
            if let Some(j) = j {
                if j != next_j || j >= len_b {
                    return Err(format!("{op:?}: expected b-index {next_j} of {len_b}"));
                }
                next_j += 1;
            }
        }
        if next_i != len_a || next_j != len_b {
            return Err(format!(
                "alignment covers {next_i}/{len_a} and {next_j}/{len_b} positions"
            ));
        }
        Ok(())
    }
}

fn same_word(a: &str, b: &str) -> bool {
    a == b || a.to_lowercase() == b.to_lowercase()
}

/// Global alignment maximizing the total score. On ties the backtrace
/// prefers the diagonal, then a deletion, then an insertion.
pub fn align<S: AsRef<str>, T: AsRef<str>>(
    a: &[S],
    b: &[T],
    scoring: &AlignScoring,
) -> Result<Alignment, String> {
    scoring.validate()?;
    if a.is_empty() || b.is_empty() {
        return Err("cannot align an empty sequence".to_string());
    }
    let (n, m) = (a.len(), b.len());
    let width = m + 1;
    let mut h = vec![0i64; (n + 1) * width];
    for j in 0..=m {
        h[j] = j as i64 * scoring.gap;
    }
    for i in 1..=n {
        h[i * width] = i as i64 * scoring.gap;
        for j in 1..=m {
            let diag = h[(i - 1) * width + j - 1]
                + scoring.pair(same_word(a[i - 1].as_ref(), b[j - 1].as_ref()));
            let up = h[(i - 1) * width + j] + scoring.gap;
            let left = h[i * width + j - 1] + scoring.gap;
            h[i * width + j] = diag.max(up).max(left);
        }
    }

    let mut ops = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = h[i * width + j];
        if i > 0 && j > 0 {
            let same = same_word(a[i - 1].as_ref(), b[j - 1].as_ref());
            if here == h[(i - 1) * width + j - 1] + scoring.pair(same) {
                ops.push(if same {
                    AlignOp::Match(i - 1, j - 1)
                } else {
                    AlignOp::Subst(i - 1, j - 1)
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == h[(i - 1) * width + j] + scoring.gap {
            ops.push(AlignOp::Delete(i - 1));
            i -= 1;
        } else {
            ops.push(AlignOp::Insert(j - 1));
            j -= 1;
        }
    }
    ops.reverse();
    Ok(Alignment {
        ops,
        score: h[n * width + m],
    })
}
