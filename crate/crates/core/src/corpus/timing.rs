use std::str::FromStr;

use super::{Conversation, Side};

/// Which word counts as "previous" when measuring the pause before a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OffsetMode {
    /// Previous word of the merged two-channel sequence.
    #[default]
    Merged,
    /// Previous word of the same speaker.
    PerSpeaker,
}

impl FromStr for OffsetMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "merged" => Ok(OffsetMode::Merged),
            "per-speaker" | "per_speaker" => Ok(OffsetMode::PerSpeaker),
            other => Err(format!("unknown offset mode '{other}'")),
        }
    }
}

impl std::fmt::Display for OffsetMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OffsetMode::Merged => "merged",
            OffsetMode::PerSpeaker => "per-speaker",
        })
    }
}

/// Standardized pause and duration of one token.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TimingFeatures {
    pub offset: f64,
    pub duration_z: f64,
}

/// Spread below which a group is treated as constant.
const CONSTANT_EPS: f64 = 1e-12;

fn standardize(values: &mut [f64], members: &[usize]) {
    if members.len() < 2 {
        for &i in members {
            values[i] = 0.0;
        }
        return;
    }
    let n = members.len() as f64;
    let mean = members.iter().map(|&i| values[i]).sum::<f64>() / n;
    let var = members.iter().map(|&i| (values[i] - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for &i in members {
        values[i] = if std <= CONSTANT_EPS {
            0.0
        } else {
            (values[i] - mean) / std
        };
    }
}

/// Raw pause before each token: its start minus the end of the previous
/// word, zero for the first word.
pub fn raw_offsets(conv: &Conversation, mode: OffsetMode) -> Vec<f64> {
    let mut last_end: [Option<f64>; 2] = [None, None];
    let mut merged_end: Option<f64> = None;
    conv.tokens
        .iter()
        .map(|t| {
            let slot = t.side as usize;
            let prev = match mode {
                OffsetMode::Merged => merged_end,
                OffsetMode::PerSpeaker => last_end[slot],
            };
            merged_end = Some(t.end());
            last_end[slot] = Some(t.end());
            prev.map_or(0.0, |end| t.start - end)
        })
        .collect()
}

/// Offsets and durations z-scored within each speaker of the conversation
/// (population standard deviation). Groups that are constant or hold a
/// single token map to zero.
pub fn timing_features(conv: &Conversation, mode: OffsetMode) -> Vec<TimingFeatures> {
    let mut offsets = raw_offsets(conv, mode);
    let mut durations: Vec<f64> = conv.tokens.iter().map(|t| t.duration).collect();
    for side in [Side::A, Side::B] {
        let members: Vec<usize> = conv
            .tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.side == side)
            .map(|(i, _)| i)
            .collect();
        standardize(&mut offsets, &members);
        standardize(&mut durations, &members);
    }
    offsets
        .into_iter()
        .zip(durations)
        .map(|(offset, duration_z)| TimingFeatures { offset, duration_z })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn token(side: Side, start: f64, duration: f64) -> Token {
        Token {
            text: "w".into(),
            side,
            start,
            duration,
            label: None,
        }
    }

    #[test]
    fn single_speaker_offsets() {
        // raw offsets 0.0, 0.2, 0.4
        let conv = Conversation::new(
            "c",
            vec![
                token(Side::A, 0.0, 0.5),
                token(Side::A, 0.7, 0.5),
                token(Side::A, 1.6, 0.5),
            ],
        );
        let raw = raw_offsets(&conv, OffsetMode::Merged);
        assert_abs_diff_eq!(raw[1], 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(raw[2], 0.4, epsilon = 1e-12);
        let f = timing_features(&conv, OffsetMode::Merged);
        let expected = [-1.224_744_871_391_589, 0.0, 1.224_744_871_391_589];
        for (got, want) in f.iter().zip(expected) {
            assert_abs_diff_eq!(got.offset, want, epsilon = 1e-9);
            // all durations equal
            assert_eq!(got.duration_z, 0.0);
        }
    }

    #[test]
    fn speakers_are_standardized_separately() {
        let conv = Conversation::new(
            "c",
            vec![
                token(Side::A, 0.0, 0.1),
                token(Side::B, 0.2, 1.0),
                token(Side::A, 1.3, 0.3),
                token(Side::B, 1.7, 3.0),
            ],
        );
        let f = timing_features(&conv, OffsetMode::Merged);
        // each side has two distinct durations: z = -1, +1
        assert_abs_diff_eq!(f[0].duration_z, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f[2].duration_z, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f[1].duration_z, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f[3].duration_z, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn per_speaker_mode_uses_same_speaker_previous_word() {
        let conv = Conversation::new(
            "c",
            vec![
                token(Side::A, 0.0, 0.5),
                token(Side::B, 0.6, 0.5),
                token(Side::A, 1.5, 0.5),
            ],
        );
        let merged = raw_offsets(&conv, OffsetMode::Merged);
        let per = raw_offsets(&conv, OffsetMode::PerSpeaker);
        assert_abs_diff_eq!(merged[2], 1.5 - 1.1, epsilon = 1e-12);
        assert_abs_diff_eq!(per[2], 1.5 - 0.5, epsilon = 1e-12);
        assert_eq!(per[1], 0.0);
    }

    #[test]
    fn singleton_group_is_zero() {
        let conv = Conversation::new("c", vec![token(Side::A, 0.0, 0.3), token(Side::B, 1.0, 0.9)]);
        for f in timing_features(&conv, OffsetMode::Merged) {
            assert_eq!(f, TimingFeatures::default());
        }
    }

    proptest! {
        #[test]
        fn groups_have_zero_mean_unit_std(
            raw in prop::collection::vec((any::<bool>(), 0.0f64..3.0, 0.01f64..1.5), 2..40)
        ) {
            let mut t = 0.0;
            let tokens: Vec<Token> = raw.iter().map(|&(b, gap, dur)| {
                t += gap;
                let tok = token(if b { Side::B } else { Side::A }, t, dur);
                t += dur;
                tok
            }).collect();
            let conv = Conversation::new("p", tokens);
            let feats = timing_features(&conv, OffsetMode::Merged);
            let raw_off = raw_offsets(&conv, OffsetMode::Merged);
            for side in [Side::A, Side::B] {
                let idx: Vec<usize> = (0..conv.len()).filter(|&i| conv.tokens[i].side == side).collect();
                if idx.len() < 2 { continue; }
                let check = |z: Vec<f64>, raw: Vec<f64>| -> Result<(), TestCaseError> {
                    let n = z.len() as f64;
                    let rmean = raw.iter().sum::<f64>() / n;
                    let rstd = (raw.iter().map(|v| (v - rmean).powi(2)).sum::<f64>() / n).sqrt();
                    let mean = z.iter().sum::<f64>() / n;
                    let std = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                    if rstd > CONSTANT_EPS {
                        prop_assert!(mean.abs() < 1e-6);
                        prop_assert!((std - 1.0).abs() < 1e-6);
                    } else {
                        prop_assert!(z.iter().all(|&v| v == 0.0));
                    }
                    Ok(())
                };
                check(idx.iter().map(|&i| feats[i].offset).collect(), idx.iter().map(|&i| raw_off[i]).collect())?;
                check(idx.iter().map(|&i| feats[i].duration_z).collect(), idx.iter().map(|&i| conv.tokens[i].duration).collect())?;
            }
        }
    }
}
