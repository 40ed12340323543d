use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::optim::{adam_step, AdamState, PlateauScheduler, TrainSchedule};
use super::{CnnModel, FeatureWindow, TaggerError};

/// One line of the training log. `lr` is the rate used during the epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    /// Weights from the epoch with the lowest validation loss.
    pub model: CnnModel,
    pub log: Vec<EpochLog>,
    pub best_epoch: usize,
}

/// `epoch<TAB>train_loss<TAB>val_loss<TAB>lr`, one line per epoch.
pub fn render_log(log: &[EpochLog]) -> String {
    log.iter()
        .map(|e| format!("{}\t{}\t{}\t{}\n", e.epoch, e.train_loss, e.val_loss, e.lr))
        .collect()
}

/// Adam training over shuffled batches with a plateau schedule on the
/// validation loss. Fully determined by `schedule.seed` and the model's
/// initial weights.
pub fn train_model(
    train: &[FeatureWindow],
    validation: &[FeatureWindow],
    mut model: CnnModel,
    schedule: &TrainSchedule,
) -> Result<TrainedModel, TaggerError> {
    schedule.validate().map_err(TaggerError::Config)?;
    if train.iter().all(|w| w.real_len() == 0) {
        return Err(TaggerError::NoData("training set has no tokens".into()));
    }
    if validation.iter().all(|w| w.real_len() == 0) {
        return Err(TaggerError::NoData("validation set has no tokens".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut scheduler = PlateauScheduler::new(schedule);
    let mut states: Vec<AdamState> = model.params().iter().map(|p| AdamState::new(p.len())).collect();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best: Option<(f64, usize, CnnModel)> = None;
    let mut log = Vec::with_capacity(schedule.epochs);

    for epoch in 1..=schedule.epochs {
        let lr = scheduler.lr();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut tokens = 0usize;
        for (bi, idx) in order.chunks(schedule.batch_size).enumerate() {
            let batch: Vec<&FeatureWindow> = idx.iter().map(|&i| &train[i]).collect();
            let n = batch.iter().map(|w| w.real_len()).sum::<usize>();
            let seed = rng.next_u64();
            if n == 0 {
                continue;
            }
            let diverged = |detail: String| TaggerError::Diverged {
                epoch,
                batch: bi + 1,
                detail,
            };
            let (loss, grads) = model.batch_gradients(&batch, seed).map_err(|e| match e {
                TaggerError::NonFinite { .. } => diverged(e.to_string()),
                other => other,
            })?;
            if !loss.is_finite() {
                return Err(diverged(format!("loss is {loss}")));
            }
            if !grads.max_abs().is_finite() {
                return Err(diverged("non-finite gradient".into()));
            }
            for ((w, g), s) in model.params_mut().into_iter().zip(grads.slices()).zip(&mut states) {
                adam_step(w, g, s, lr);
            }
            loss_sum += loss * n as f64;
            tokens += n;
        }
        let train_loss = loss_sum / tokens as f64;
        let val_loss = model.evaluate_loss(validation).map_err(|e| TaggerError::Diverged {
            epoch,
            batch: 0,
            detail: format!("validation: {e}"),
        })?;
        if !val_loss.is_finite() {
            return Err(TaggerError::Diverged {
                epoch,
                batch: 0,
                detail: format!("validation loss is {val_loss}"),
            });
        }
        log::info!("epoch {epoch}: train {train_loss:.5} val {val_loss:.5} lr {lr}");
        log.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
            lr,
        });
        if best.as_ref().is_none_or(|b| val_loss < b.0) {
            best = Some((val_loss, epoch, model.clone()));
        }
        scheduler.observe(val_loss);
    }
    let (_, best_epoch, model) = best.expect("at least one epoch");
    Ok(TrainedModel {
        model,
        log,
        best_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagger::{CnnConfig, LayerShape};
    use ndarray::Array2;

    fn toy_windows(n: usize, seed: u64) -> Vec<FeatureWindow> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let len = 16;
                let mut features = Array2::zeros((len, 5));
                let mut labels = vec![0; len];
                for t in 0..len {
                    let pause = (rng.next_u32() % 3) as f64;
                    features[[t, 3]] = pause;
                    features[[t, 0]] = (rng.next_u32() % 2) as f64;
                    labels[t] = if pause == 2.0 { 1 } else { 0 };
                }
                FeatureWindow {
                    features,
                    labels,
                    mask: vec![true; len],
                }
            })
            .collect()
    }

    fn small_model() -> CnnModel {
        CnnModel::new(CnnConfig {
            embedding_dim: 2,
            window_len: 16,
            filters: 6,
            layers: vec![LayerShape::new(3, 1), LayerShape::new(3, 2)],
            ..CnnConfig::default()
        })
        .unwrap()
    }

    fn schedule() -> TrainSchedule {
        TrainSchedule {
            batch_size: 4,
            epochs: 12,
            learning_rate: 0.01,
            seed: 3,
            ..TrainSchedule::default()
        }
    }

    #[test]
    fn training_is_reproducible_and_keeps_best() {
        let train = toy_windows(10, 1);
        let val = toy_windows(3, 2);
        let a = train_model(&train, &val, small_model(), &schedule()).unwrap();
        let b = train_model(&train, &val, small_model(), &schedule()).unwrap();
        assert_eq!(render_log(&a.log), render_log(&b.log));
        assert_eq!(a.model, b.model);
        assert_eq!(a.log.len(), 12);
        let best = a.model.evaluate_loss(&val).unwrap();
        for e in &a.log {
            assert!(best <= e.val_loss);
        }
        assert_eq!(a.log[a.best_epoch - 1].val_loss, best);
        assert!(a.log.windows(2).all(|p| p[1].lr <= p[0].lr));
        assert!(a.log.last().unwrap().val_loss < a.log[0].val_loss);
    }

    #[test]
    fn empty_sets_are_rejected() {
        let train = toy_windows(2, 1);
        let mut empty = toy_windows(1, 2);
        empty[0].mask.fill(false);
        assert!(matches!(
            train_model(&train, &empty, small_model(), &schedule()),
            Err(TaggerError::NoData(_))
        ));
        assert!(matches!(
            train_model(&[], &train, small_model(), &schedule()),
            Err(TaggerError::NoData(_))
        ));
    }

    #[test]
    fn divergence_reports_position() {
        let train = toy_windows(6, 1);
        let val = toy_windows(2, 2);
        let mut model = small_model();
        model.layers[0].weight.fill(1e300);
        model.layers[1].weight.fill(1e300);
        match train_model(&train, &val, model, &schedule()) {
            Err(TaggerError::Diverged { epoch, batch, .. }) => {
                assert_eq!((epoch, batch), (1, 1));
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn log_format() {
        let log = [EpochLog {
            epoch: 1,
            train_loss: 1.5,
            val_loss: 0.25,
            lr: 0.001,
        }];
        assert_eq!(render_log(&log), "1\t1.5\t0.25\t0.001\n");
    }
}
