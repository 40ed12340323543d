//! Dilated 1D-CNN sequence tagger that predicts the punctuation class of
//! each token from its word vector, pause, duration and speaker.

mod checkpoint;
mod conv;
mod model;
mod optim;
mod train;

pub use checkpoint::{load_model, save_model};
pub use conv::{selu, selu_grad, ConvLayer, LayerShape, SELU_ALPHA, SELU_LAMBDA};
pub use model::{
    argmax_rows, default_layers, CnnConfig, CnnModel, ForwardPass, Gradients, Mode, Regularization, WindowCache,
};
pub use optim::{adam_step, reduce_lr_on_plateau, AdamState, PlateauScheduler, TrainSchedule, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use train::{render_log, train_model, EpochLog, TrainedModel};

use ndarray::Array2;
use thiserror::Error;

use crate::corpus::{timing_features, Conversation, OffsetMode, PunctuationClass};
use crate::embeddings::EmbeddingTable;

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite activation in layer {layer}")]
    NonFinite { layer: usize },
    #[error("batch has no unmasked tokens")]
    EmptyBatch,
    #[error("backward pass needs a training forward pass")]
    MissingCache,
    #[error("training diverged at epoch {epoch}, batch {batch}: {detail}")]
    Diverged { epoch: usize, batch: usize, detail: String },
    #[error("{0}")]
    NoData(String),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A fixed-length slice of a conversation: `L x (d + 3)` features,
/// per-position class indices, and a mask that is false on padding.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureWindow {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub mask: Vec<bool>,
}

impl FeatureWindow {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn real_len(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Cuts a conversation into consecutive windows of `len` tokens. The last
/// window is zero-padded. Words missing from `embeddings` get a zero
/// vector; unlabeled tokens get class index 0.
pub fn make_windows(
    conv: &Conversation,
    embeddings: &EmbeddingTable,
    mode: OffsetMode,
    len: usize,
) -> Vec<FeatureWindow> {
    assert!(len > 0, "window length must be positive");
    let dim = embeddings.dim();
    let timing = timing_features(conv, mode);
    conv.tokens
        .chunks(len)
        .zip(timing.chunks(len))
        .map(|(tokens, times)| {
            let mut features = Array2::zeros((len, dim + 3));
            let mut labels = vec![0; len];
            let mut mask = vec![false; len];
            for (t, (tok, tf)) in tokens.iter().zip(times).enumerate() {
                let mut row = features.row_mut(t);
                if let Some(v) = embeddings.get(&tok.text) {
                    for (dst, &src) in row.iter_mut().zip(v) {
                        *dst = src;
                    }
                }
                row[dim] = tf.offset;
                row[dim + 1] = tf.duration_z;
                row[dim + 2] = tok.side.indicator();
                labels[t] = tok.label.map_or(0, PunctuationClass::index);
                mask[t] = true;
            }
            FeatureWindow { features, labels, mask }
        })
        .collect()
}

/// Most likely class for every token of `conv`.
pub fn predict(
    model: &CnnModel,
    conv: &Conversation,
    embeddings: &EmbeddingTable,
) -> Result<Vec<PunctuationClass>, TaggerError> {
    if embeddings.dim() != model.config.embedding_dim {
        return Err(TaggerError::Shape(format!(
            "embeddings have dimension {}, model expects {}",
            embeddings.dim(),
            model.config.embedding_dim
        )));
    }
    let mut out = Vec::with_capacity(conv.len());
    for w in make_windows(conv, embeddings, model.config.offset_mode, model.config.window_len) {
        let probs = model.predict_window(&w)?;
        out.extend(
            argmax_rows(&probs)
                .into_iter()
                .zip(&w.mask)
                .filter(|(_, &m)| m)
                .map(|(c, _)| PunctuationClass::from_index(c).expect("class index")),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Side, Token};

    fn conversation(n: usize) -> Conversation {
        let tokens = (0..n)
            .map(|i| Token {
                text: format!("w{}", i % 7),
                side: if i % 5 == 0 { Side::B } else { Side::A },
                start: i as f64 * 0.4 + (i % 3) as f64 * 0.05,
                duration: 0.2 + (i % 4) as f64 * 0.05,
                label: Some(PunctuationClass::ALL[i % 4]),
            })
            .collect();
        Conversation::new("c", tokens)
    }

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(2);
        for i in 0..5 {
            t.insert(format!("w{i}"), vec![i as f64, 1.0]).unwrap();
        }
        t
    }

    #[test]
    fn window_counts_and_padding() {
        let conv = conversation(450);
        let ws = make_windows(&conv, &table(), OffsetMode::Merged, 200);
        assert_eq!(ws.len(), 3);
        assert_eq!(ws[2].real_len(), 50);
        assert_eq!(ws[2].len(), 200);
        for t in 50..200 {
            assert!(!ws[2].mask[t]);
            assert!(ws[2].features.row(t).iter().all(|&v| v == 0.0));
        }
        let ws = make_windows(&conversation(200), &table(), OffsetMode::Merged, 200);
        assert_eq!(ws.len(), 1);
        assert!(ws[0].mask.iter().all(|&m| m));
        assert!(make_windows(&conversation(0), &table(), OffsetMode::Merged, 200).is_empty());
    }

    #[test]
    fn window_feature_layout() {
        let conv = conversation(12);
        let ws = make_windows(&conv, &table(), OffsetMode::Merged, 10);
        let timing = timing_features(&conv, OffsetMode::Merged);
        let w = &ws[0];
        assert_eq!(w.features.ncols(), 5);
        // w3 is in the table, w6 is not
        let i3 = conv.tokens.iter().position(|t| t.text == "w3").unwrap();
        assert_eq!(w.features[[i3, 0]], 3.0);
        assert_eq!(w.features[[i3, 1]], 1.0);
        let i6 = conv.tokens.iter().position(|t| t.text == "w6").unwrap();
        assert_eq!(w.features[[i6, 0]], 0.0);
        assert_eq!(w.features[[i6, 1]], 0.0);
        for t in 0..10 {
            assert_eq!(w.features[[t, 2]], timing[t].offset);
            assert_eq!(w.features[[t, 3]], timing[t].duration_z);
            assert_eq!(w.features[[t, 4]], conv.tokens[t].side.indicator());
            assert_eq!(w.labels[t], conv.tokens[t].label.unwrap().index());
        }
        // second window carries on from token 10
        assert_eq!(ws[1].labels[0], conv.tokens[10].label.unwrap().index());
        assert_eq!(ws[1].features[[1, 2]], timing[11].offset);
    }

    #[test]
    fn predict_covers_every_token_and_ignores_window_padding() {
        let cfg = CnnConfig {
            embedding_dim: 2,
            window_len: 200,
            filters: 8,
            layers: vec![LayerShape::new(3, 1), LayerShape::new(3, 2)],
            ..CnnConfig::default()
        };
        let model = CnnModel::new(cfg.clone()).unwrap();
        let conv = conversation(150);
        let preds = predict(&model, &conv, &table()).unwrap();
        assert_eq!(preds.len(), 150);
        let wide = CnnModel {
            config: CnnConfig { window_len: 320, ..cfg },
            ..model.clone()
        };
        assert_eq!(predict(&wide, &conv, &table()).unwrap(), preds);
        assert_eq!(predict(&model, &conversation(0), &table()).unwrap(), vec![]);
        assert!(matches!(
            predict(&model, &conv, &EmbeddingTable::new(3)),
            Err(TaggerError::Shape(_))
        ));
    }
}
