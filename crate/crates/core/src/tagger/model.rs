use ndarray::{Array1, Array2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::conv::{selu, selu_grad, ConvLayer, LayerShape};
use super::{FeatureWindow, TaggerError};
use crate::corpus::{OffsetMode, PunctuationClass};

/// Windows per parallel work unit when computing batch gradients. Partial
/// sums are combined in chunk order, so results do not depend on the
/// number of threads.
const GRAD_CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    /// Fraction of classifier inputs zeroed during training.
    pub dropout: f64,
    /// Std of the additive noise on conv pre-activations and classifier input.
    pub noise_sigma: f64,
    /// L2 coefficient on the classifier weights.
    pub weight_decay: f64,
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization {
            dropout: 0.5,
            noise_sigma: 0.1,
            weight_decay: 0.001,
        }
    }
}

impl Regularization {
    pub fn none() -> Self {
        Regularization {
            dropout: 0.0,
            noise_sigma: 0.0,
            weight_decay: 0.0,
        }
    }
}

pub fn default_layers() -> Vec<LayerShape> {
    let mut layers = vec![LayerShape::new(3, 1)];
    layers.extend(std::iter::repeat_n(LayerShape::new(3, 2), 4));
    layers.push(LayerShape::new(20, 1));
    layers
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnConfig {
    pub embedding_dim: usize,
    pub window_len: usize,
    pub offset_mode: OffsetMode,
    pub filters: usize,
    pub layers: Vec<LayerShape>,
    pub regularization: Regularization,
    pub seed: u64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            embedding_dim: 300,
            window_len: 200,
            offset_mode: OffsetMode::Merged,
            filters: 128,
            layers: default_layers(),
            regularization: Regularization::default(),
            seed: 42,
        }
    }
}

impl CnnConfig {
    /// Embedding, offset, duration and side indicator.
    pub fn input_features(&self) -> usize {
        self.embedding_dim + 3
    }

    pub fn validate(&self) -> Result<(), TaggerError> {
        let bad = |m: String| Err(TaggerError::Config(m));
        if self.embedding_dim == 0 || self.window_len == 0 || self.filters == 0 {
            return bad("embedding_dim, window_len and filters must be positive".into());
        }
        if self.layers.is_empty() {
            return bad("at least one conv layer is required".into());
        }
        if let Some(l) = self.layers.iter().find(|l| l.kernel == 0 || l.dilation == 0) {
            return bad(format!("invalid layer {}x{}", l.kernel, l.dilation));
        }
        let r = &self.regularization;
        if !(0.0..1.0).contains(&r.dropout) {
            return bad(format!("dropout must be in [0, 1), got {}", r.dropout));
        }
        if !(r.noise_sigma >= 0.0 && r.noise_sigma.is_finite()) {
            return bad(format!("noise sigma must be non-negative, got {}", r.noise_sigma));
        }
        if !(r.weight_decay >= 0.0 && r.weight_decay.is_finite()) {
            return bad(format!("weight decay must be non-negative, got {}", r.weight_decay));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Inference,
    /// Noise and dropout drawn from `seed`; window `i` of a batch uses
    /// stream `i` of that seed.
    Train { seed: u64 },
}

/// Activations kept from a training forward pass.
#[derive(Debug, Clone)]
pub struct WindowCache {
    cols: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    head_input: Array2<f64>,
    keep: Option<Array2<f64>>,
}

#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// One `L x 4` matrix per window.
    pub probs: Vec<Array2<f64>>,
    caches: Option<Vec<WindowCache>>,
}

impl ForwardPass {
    pub fn has_cache(&self) -> bool {
        self.caches.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
    pub head_weight: Array2<f64>,
    pub head_bias: Array1<f64>,
}

impl Gradients {
    pub fn zeros_like(model: &CnnModel) -> Self {
        Gradients {
            layers: model
                .layers
                .iter()
                .map(|l| (Array2::zeros(l.weight.raw_dim()), Array1::zeros(l.bias.len())))
                .collect(),
            head_weight: Array2::zeros(model.head_weight.raw_dim()),
            head_bias: Array1::zeros(model.head_bias.len()),
        }
    }

    fn add_assign(&mut self, other: &Gradients) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            *w += ow;
            *b += ob;
        }
        self.head_weight += &other.head_weight;
        self.head_bias += &other.head_bias;
    }

    /// Flat views in the same order as [`CnnModel::params`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len() + 2);
        for (w, b) in &self.layers {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        out.push(self.head_weight.as_slice().expect("standard layout"));
        out.push(self.head_bias.as_slice().expect("standard layout"));
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

/// Stack of dilated conv layers with SELU, then a per-step softmax
/// classifier over the punctuation classes.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub config: CnnConfig,
    pub layers: Vec<ConvLayer>,
    /// `classes x filters`.
    pub head_weight: Array2<f64>,
    pub head_bias: Array1<f64>,
}

fn zero_masked(a: &mut Array2<f64>, mask: &[bool]) {
    for (mut row, &m) in a.rows_mut().into_iter().zip(mask) {
        if !m {
            row.fill(0.0);
        }
    }
}

fn add_noise<R: Rng>(a: &mut Array2<f64>, sigma: f64, rng: &mut R) {
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("valid sigma");
        a.mapv_inplace(|v| v + normal.sample(rng));
    }
}

fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

fn all_finite(a: &Array2<f64>) -> bool {
    a.iter().all(|v| v.is_finite())
}

fn window_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

impl CnnModel {
    /// Fresh model with LeCun-normal weights drawn from `config.seed`.
    pub fn new(config: CnnConfig) -> Result<Self, TaggerError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut in_ch = config.input_features();
        let mut layers = Vec::with_capacity(config.layers.len());
        for &shape in &config.layers {
            layers.push(ConvLayer::lecun_normal(shape, in_ch, config.filters, &mut rng));
            in_ch = config.filters;
        }
        let head = ConvLayer::lecun_normal(LayerShape::new(1, 1), config.filters, PunctuationClass::COUNT, &mut rng);
        Ok(CnnModel {
            config,
            layers,
            head_weight: head.weight,
            head_bias: head.bias,
        })
    }

    /// Model with every weight zero, the layout `params` expects.
    pub fn zeros(config: CnnConfig) -> Result<Self, TaggerError> {
        config.validate()?;
        let mut in_ch = config.input_features();
        let mut layers = Vec::with_capacity(config.layers.len());
        for &shape in &config.layers {
            layers.push(ConvLayer::zeros(shape, in_ch, config.filters));
            in_ch = config.filters;
        }
        Ok(CnnModel {
            head_weight: Array2::zeros((PunctuationClass::COUNT, config.filters)),
            head_bias: Array1::zeros(PunctuationClass::COUNT),
            config,
            layers,
        })
    }

    /// Weight and bias of every layer, then the classifier.
    pub fn params(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len() + 2);
        for l in &self.layers {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        out.push(self.head_weight.as_slice().expect("standard layout"));
        out.push(self.head_bias.as_slice().expect("standard layout"));
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len() + 2);
        for l in &mut self.layers {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out.push(self.head_weight.as_slice_mut().expect("standard layout"));
        out.push(self.head_bias.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    fn check_window(&self, w: &FeatureWindow) -> Result<(), TaggerError> {
        let (len, feats) = w.features.dim();
        if feats != self.config.input_features() {
            return Err(TaggerError::Shape(format!(
                "window has {feats} features, model expects {}",
                self.config.input_features()
            )));
        }
        if w.labels.len() != len || w.mask.len() != len {
            return Err(TaggerError::Shape(format!(
                "window of length {len} has {} labels and {} mask entries",
                w.labels.len(),
                w.mask.len()
            )));
        }
        if let Some(&bad) = w.labels.iter().find(|&&l| l >= PunctuationClass::COUNT) {
            return Err(TaggerError::Shape(format!("label index {bad} out of range")));
        }
        Ok(())
    }

    fn run_window(
        &self,
        w: &FeatureWindow,
        mut rng: Option<&mut ChaCha8Rng>,
        keep_cache: bool,
    ) -> Result<(Array2<f64>, Option<WindowCache>), TaggerError> {
        self.check_window(w)?;
        let reg = self.config.regularization;
        let mut cols = Vec::new();
        let mut pres = Vec::new();
        let mut act: Option<Array2<f64>> = None;
        for (li, layer) in self.layers.iter().enumerate() {
            let input = act.as_ref().map_or(w.features.view(), |a| a.view());
            let col = layer.im2col(input);
            let mut z = layer.forward_col(&col);
            if let Some(r) = rng.as_deref_mut() {
                add_noise(&mut z, reg.noise_sigma, r);
            }
            let mut a = z.mapv(selu);
            zero_masked(&mut a, &w.mask);
            if !all_finite(&a) {
                return Err(TaggerError::NonFinite { layer: li + 1 });
            }
            if keep_cache {
                cols.push(col);
                pres.push(z);
            }
            act = Some(a);
        }
        let mut head_input = act.expect("at least one layer");
        let mut keep = None;
        if let Some(r) = rng {
            add_noise(&mut head_input, reg.noise_sigma, r);
            if reg.dropout > 0.0 {
                let scale = 1.0 / (1.0 - reg.dropout);
                let k = Array2::from_shape_fn(head_input.raw_dim(), |_| {
                    if r.random::<f64>() < reg.dropout {
                        0.0
                    } else {
                        scale
                    }
                });
                head_input *= &k;
                keep = Some(k);
            }
            zero_masked(&mut head_input, &w.mask);
        }
        let mut logits = head_input.dot(&self.head_weight.t());
        logits += &self.head_bias;
        if !all_finite(&logits) {
            return Err(TaggerError::NonFinite {
                layer: self.layers.len() + 1,
            });
        }
        softmax_rows(&mut logits);
        let cache = keep_cache.then(|| WindowCache {
            cols,
            pre: pres,
            head_input,
            keep,
        });
        Ok((logits, cache))
    }

    /// Class probabilities for every position of every window. Training mode
    /// adds noise and dropout and keeps the activations needed by
    /// [`backward`](Self::backward); that cache is large, so training loops
    /// should prefer [`batch_gradients`](Self::batch_gradients).
    pub fn forward(&self, batch: &[FeatureWindow], mode: Mode) -> Result<ForwardPass, TaggerError> {
        match mode {
            Mode::Inference => {
                let probs = batch
                    .iter()
                    .map(|w| self.run_window(w, None, false).map(|(p, _)| p))
                    .collect::<Result<_, _>>()?;
                Ok(ForwardPass { probs, caches: None })
            }
            Mode::Train { seed } => {
                let mut probs = Vec::with_capacity(batch.len());
                let mut caches = Vec::with_capacity(batch.len());
                for (i, w) in batch.iter().enumerate() {
                    let mut rng = window_rng(seed, i);
                    let (p, c) = self.run_window(w, Some(&mut rng), true)?;
                    probs.push(p);
                    caches.push(c.expect("cache requested"));
                }
                Ok(ForwardPass {
                    probs,
                    caches: Some(caches),
                })
            }
        }
    }

    /// Inference probabilities for one window.
    pub fn predict_window(&self, w: &FeatureWindow) -> Result<Array2<f64>, TaggerError> {
        self.run_window(w, None, false).map(|(p, _)| p)
    }

    fn decay_term(&self) -> f64 {
        self.config.regularization.weight_decay * self.head_weight.iter().map(|w| w * w).sum::<f64>()
    }

    /// Mean cross-entropy over unmasked positions plus the classifier decay.
    pub fn loss<W: std::borrow::Borrow<FeatureWindow>>(
        &self,
        probs: &[Array2<f64>],
        batch: &[W],
    ) -> Result<f64, TaggerError> {
        if probs.len() != batch.len() {
            return Err(TaggerError::Shape(format!(
                "{} probability matrices for {} windows",
                probs.len(),
                batch.len()
            )));
        }
        let mut total = 0.0;
        let mut count = 0usize;
        for (p, w) in probs.iter().zip(batch) {
            let w = w.borrow();
            if p.nrows() != w.len() {
                return Err(TaggerError::Shape("probabilities and window differ in length".into()));
            }
            total += cross_entropy_sum(p, w);
            count += w.real_len();
        }
        if count == 0 {
            return Err(TaggerError::EmptyBatch);
        }
        Ok(total / count as f64 + self.decay_term())
    }

    fn window_grads(
        &self,
        w: &FeatureWindow,
        probs: &Array2<f64>,
        cache: &WindowCache,
        scale: f64,
        grads: &mut Gradients,
    ) {
        let mut dlogits = probs.clone();
        for (t, mut row) in dlogits.rows_mut().into_iter().enumerate() {
            if w.mask[t] {
                row[w.labels[t]] -= 1.0;
                row *= scale;
            } else {
                row.fill(0.0);
            }
        }
        grads.head_weight += &dlogits.t().dot(&cache.head_input);
        grads.head_bias += &dlogits.sum_axis(Axis(0));
        let mut da = dlogits.dot(&self.head_weight);
        if let Some(keep) = &cache.keep {
            da *= keep;
        }
        for li in (0..self.layers.len()).rev() {
            Zip::from(&mut da)
                .and(&cache.pre[li])
                .for_each(|d, &z| *d *= selu_grad(z));
            zero_masked(&mut da, &w.mask);
            let layer = &self.layers[li];
            let (dw, db) = layer.param_grads(&cache.cols[li], &da);
            grads.layers[li].0 += &dw;
            grads.layers[li].1 += &db;
            if li > 0 {
                da = layer.input_grad(&da);
            }
        }
    }

    fn add_decay_grad(&self, grads: &mut Gradients) {
        let wd = self.config.regularization.weight_decay;
        if wd > 0.0 {
            grads.head_weight.scaled_add(2.0 * wd, &self.head_weight);
        }
    }

    /// Exact gradient of [`loss`](Self::loss) for a cached training pass,
    /// with the sampled noise and dropout held fixed.
    pub fn backward(&self, pass: &ForwardPass, batch: &[FeatureWindow]) -> Result<Gradients, TaggerError> {
        let caches = pass.caches.as_ref().ok_or(TaggerError::MissingCache)?;
        if caches.len() != batch.len() || pass.probs.len() != batch.len() {
            return Err(TaggerError::Shape("forward pass was run on a different batch".into()));
        }
        let count: usize = batch.iter().map(|w| w.real_len()).sum();
        if count == 0 {
            return Err(TaggerError::EmptyBatch);
        }
        let scale = 1.0 / count as f64;
        let mut grads = Gradients::zeros_like(self);
        for ((w, p), c) in batch.iter().zip(&pass.probs).zip(caches) {
            self.window_grads(w, p, c, scale, &mut grads);
        }
        self.add_decay_grad(&mut grads);
        Ok(grads)
    }

    /// Training loss and gradient for a batch without holding every
    /// window's activations at once. Same noise streams as
    /// `forward(batch, Mode::Train { seed })`.
    pub fn batch_gradients(&self, batch: &[&FeatureWindow], seed: u64) -> Result<(f64, Gradients), TaggerError> {
        let count: usize = batch.iter().map(|w| w.real_len()).sum();
        if count == 0 {
            return Err(TaggerError::EmptyBatch);
        }
        let scale = 1.0 / count as f64;
        let partials: Vec<(f64, Gradients)> = batch
            .par_chunks(GRAD_CHUNK)
            .enumerate()
            .map(|(ci, chunk)| {
                let mut grads = Gradients::zeros_like(self);
                let mut ce = 0.0;
                for (j, w) in chunk.iter().enumerate() {
                    let mut rng = window_rng(seed, ci * GRAD_CHUNK + j);
                    let (p, cache) = self.run_window(w, Some(&mut rng), true)?;
                    ce += cross_entropy_sum(&p, w);
                    self.window_grads(w, &p, &cache.expect("cache requested"), scale, &mut grads);
                }
                Ok((ce, grads))
            })
            .collect::<Result<_, TaggerError>>()?;
        let mut total = Gradients::zeros_like(self);
        let mut ce = 0.0;
        for (c, g) in &partials {
            ce += c;
            total.add_assign(g);
        }
        self.add_decay_grad(&mut total);
        Ok((ce / count as f64 + self.decay_term(), total))
    }

    /// Inference loss over any number of windows.
    pub fn evaluate_loss(&self, windows: &[FeatureWindow]) -> Result<f64, TaggerError> {
        let sums: Vec<(f64, usize)> = windows
            .par_iter()
            .map(|w| Ok((cross_entropy_sum(&self.predict_window(w)?, w), w.real_len())))
            .collect::<Result<_, TaggerError>>()?;
        let count: usize = sums.iter().map(|s| s.1).sum();
        if count == 0 {
            return Err(TaggerError::EmptyBatch);
        }
        Ok(sums.iter().map(|s| s.0).sum::<f64>() / count as f64 + self.decay_term())
    }
}

fn cross_entropy_sum(probs: &Array2<f64>, w: &FeatureWindow) -> f64 {
    w.mask
        .iter()
        .zip(&w.labels)
        .enumerate()
        .filter(|(_, (&m, _))| m)
        .map(|(t, (_, &y))| -probs[[t, y]].max(f64::MIN_POSITIVE).ln())
        .sum()
}

/// Index of the largest probability per row; the earlier class wins ties.
pub fn argmax_rows(probs: &Array2<f64>) -> Vec<usize> {
    probs
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (i, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}
