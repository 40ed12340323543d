pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First and second moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(weights: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) {
    assert_eq!(weights.len(), grads.len(), "gradient length");
    assert_eq!(weights.len(), state.m.len(), "state length");
    state.t += 1;
    let c1 = 1.0 - ADAM_BETA1.powf(state.t as f64);
    let c2 = 1.0 - ADAM_BETA2.powf(state.t as f64);
    for (((w, &g), m), v) in weights.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *w -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSchedule {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub plateau_factor: f64,
    pub patience: usize,
    pub min_learning_rate: f64,
    /// Smallest decrease of the validation loss that counts as progress.
    pub improvement: f64,
    pub seed: u64,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        TrainSchedule {
            batch_size: 256,
            epochs: 30,
            learning_rate: 1e-3,
            plateau_factor: 0.5,
            patience: 3,
            min_learning_rate: 1e-5,
            improvement: 1e-4,
            seed: 42,
        }
    }
}

impl TrainSchedule {
    pub fn validate(&self) -> Result<(), String> {
        if self.batch_size == 0 || self.epochs == 0 || self.patience == 0 {
            return Err("batch_size, epochs and patience must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return Err(format!("plateau factor must be in (0, 1), got {}", self.plateau_factor));
        }
        if !(self.min_learning_rate >= 0.0 && self.min_learning_rate <= self.learning_rate) {
            return Err("min learning rate must be in [0, learning rate]".into());
        }
        if self.improvement.is_nan() || self.improvement < 0.0 {
            return Err("improvement threshold must be non-negative".into());
        }
        Ok(())
    }
}

/// Halves (by default) the learning rate after `patience` epochs without
/// progress on the validation loss.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    lr: f64,
    factor: f64,
    patience: usize,
    min_lr: f64,
    improvement: f64,
    best: Option<f64>,
    wait: usize,
}

impl PlateauScheduler {
    pub fn new(schedule: &TrainSchedule) -> Self {
        PlateauScheduler {
            lr: schedule.learning_rate.max(schedule.min_learning_rate),
            factor: schedule.plateau_factor,
            patience: schedule.patience,
            min_lr: schedule.min_learning_rate,
            improvement: schedule.improvement,
            best: None,
            wait: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Records one epoch's validation loss and returns the rate for the
    /// next epoch.
    pub fn observe(&mut self, loss: f64) -> f64 {
        match self.best {
            Some(best) if best - loss < self.improvement => {
                self.wait += 1;
                if self.wait >= self.patience {
                    self.lr = (self.lr * self.factor).max(self.min_lr);
                    self.wait = 0;
                }
            }
            _ => {
                self.best = Some(loss);
                self.wait = 0;
            }
        }
        self.lr
    }
}

/// Learning rate after each epoch of `history`.
pub fn reduce_lr_on_plateau(history: &[f64], schedule: &TrainSchedule) -> Vec<f64> {
    let mut s = PlateauScheduler::new(schedule);
    history.iter().map(|&l| s.observe(l)).collect()
}
