//! GloVe objective with the optional squared-distance retrofitting penalty,
//! its analytic gradient, and a full-batch AdaGrad trainer.

use std::io::Write;

use ndarray::{Array, Array1, Array2, Dimension, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EmbeddingError, EmbeddingTable};
use crate::cooc::{CoocMatrix, Vocabulary};

/// Initial AdaGrad accumulator value (as in the reference GloVe trainer).
const ADAGRAD_INIT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub x_max: f64,
    pub alpha: f64,
    /// Weight of the distance penalty to the pre-trained vectors.
    pub mu: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 300,
            x_max: 100.0,
            alpha: 0.75,
            mu: 0.1,
            learning_rate: 0.05,
            iterations: 300,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |m: String| Err(EmbeddingError::Config(m));
        if self.dim == 0 {
            return bad("dim must be at least 1".into());
        }
        if !(self.x_max > 0.0 && self.x_max.is_finite()) {
            return bad(format!("x_max must be positive, got {}", self.x_max));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be non-negative, got {}", self.mu));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        Ok(())
    }
}

/// GloVe weighting `(x / x_max)^alpha`, capped at 1.
pub fn weighting(x: f64, x_max: f64, alpha: f64) -> f64 {
    if x < x_max {
        (x / x_max).powf(alpha)
    } else {
        1.0
    }
}

/// Word vectors, context vectors and their biases. Gradients use the same
/// shape.
#[derive(Debug, Clone, PartialEq)]
pub struct GloveParams {
    pub w: Array2<f64>,
    pub w_ctx: Array2<f64>,
    pub b: Array1<f64>,
    pub b_ctx: Array1<f64>,
}

impl GloveParams {
    pub fn zeros(vocab_size: usize, dim: usize) -> Self {
        GloveParams {
            w: Array2::zeros((vocab_size, dim)),
            w_ctx: Array2::zeros((vocab_size, dim)),
            b: Array1::zeros(vocab_size),
            b_ctx: Array1::zeros(vocab_size),
        }
    }

    /// Every entry uniform in `[-0.5/dim, 0.5/dim]`.
    pub fn random<R: Rng>(vocab_size: usize, dim: usize, rng: &mut R) -> Self {
        let scale = 0.5 / dim as f64;
        let mut p = Self::zeros(vocab_size, dim);
        for x in p
            .w
            .iter_mut()
            .chain(p.w_ctx.iter_mut())
            .chain(p.b.iter_mut())
            .chain(p.b_ctx.iter_mut())
        {
            *x = rng.random_range(-scale..=scale);
        }
        p
    }

    pub fn vocab_size(&self) -> usize {
        self.w.nrows()
    }

    pub fn dim(&self) -> usize {
        self.w.ncols()
    }

    fn check(&self, x: &CoocMatrix, dim: usize) -> Result<(), EmbeddingError> {
        let v = self.vocab_size();
        if self.w_ctx.dim() != self.w.dim() || self.b.len() != v || self.b_ctx.len() != v {
            return Err(EmbeddingError::Dimension("parameter blocks disagree".into()));
        }
        if x.vocab_size() != v {
            return Err(EmbeddingError::Dimension(format!(
                "co-occurrence vocabulary {} vs parameters {v}",
                x.vocab_size()
            )));
        }
        if self.dim() != dim {
            return Err(EmbeddingError::Dimension(format!(
                "config dim {dim} vs parameters {}",
                self.dim()
            )));
        }
        Ok(())
    }

    fn all_finite(&self) -> bool {
        self.w
            .iter()
            .chain(self.w_ctx.iter())
            .chain(self.b.iter())
            .chain(self.b_ctx.iter())
            .all(|x| x.is_finite())
    }
}

/// Vocabulary rows that carry a pre-trained vector, with that vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Anchors {
    rows: Vec<(usize, Vec<f64>)>,
}

impl Anchors {
    pub fn new(rows: Vec<(usize, Vec<f64>)>) -> Self {
        Anchors { rows }
    }

    /// Matches vocabulary tokens against the table case-insensitively.
    /// Tokens without a pre-trained vector are not anchored.
    pub fn from_table(vocab: &Vocabulary, table: &EmbeddingTable) -> Self {
        let lower = table.lowercased();
        let rows = vocab
            .tokens()
            .enumerate()
            .filter_map(|(i, t)| {
                table
                    .get(t)
                    .or_else(|| lower.get(t).copied())
                    .map(|v| (i, v.to_vec()))
            })
            .collect();
        Anchors { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[(usize, Vec<f64>)] {
        &self.rows
    }

    fn check(&self, vocab_size: usize, dim: usize) -> Result<(), EmbeddingError> {
        for (i, v) in &self.rows {
            if *i >= vocab_size {
                return Err(EmbeddingError::Dimension(format!("anchor row {i} outside vocabulary")));
            }
            if v.len() != dim {
                return Err(EmbeddingError::Dimension(format!(
                    "pre-trained dim {} vs embedding dim {dim}",
                    v.len()
                )));
            }
        }
        Ok(())
    }

    /// Mean Euclidean distance between `w + w_ctx` and the anchor.
    pub fn mean_distance(&self, params: &GloveParams) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        let total: f64 = self
            .rows
            .iter()
            .map(|(i, v)| {
                let (w, c) = (params.w.row(*i), params.w_ctx.row(*i));
                w.iter()
                    .zip(c.iter())
                    .zip(v)
                    .map(|((a, b), t)| (a + b - t).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .sum();
        total / self.rows.len() as f64
    }
}

/// Cost and (optionally) gradient in one sweep over the stored entries.
/// Entries are visited in their sorted order so the reduction is
/// reproducible.
fn evaluate(
    params: &GloveParams,
    x: &CoocMatrix,
    anchors: Option<&Anchors>,
    cfg: &TrainConfig,
    want_grad: bool,
) -> (f64, Option<GloveParams>) {
    let mut grad = want_grad.then(|| GloveParams::zeros(params.vocab_size(), params.dim()));
    let mut fit = 0.0;
    for (i, j, xij) in x.entries() {
        let wi = params.w.row(i);
        let cj = params.w_ctx.row(j);
        let r = wi.dot(&cj) + params.b[i] + params.b_ctx[j] - xij.ln();
        let f = weighting(xij, cfg.x_max, cfg.alpha);
        fit += f * r * r;
        if let Some(g) = grad.as_mut() {
            let scale = 2.0 * f * r;
            g.w.row_mut(i).scaled_add(scale, &cj);
            g.w_ctx.row_mut(j).scaled_add(scale, &wi);
            g.b[i] += scale;
            g.b_ctx[j] += scale;
        }
    }
    let mut penalty = 0.0;
    if let Some(anchors) = anchors {
        for (i, target) in &anchors.rows {
            let i = *i;
            let diff: Vec<f64> = params
                .w
                .row(i)
                .iter()
                .zip(params.w_ctx.row(i).iter())
                .zip(target)
                .map(|((a, b), t)| a + b - t)
                .collect();
            penalty += diff.iter().map(|d| d * d).sum::<f64>();
            if let Some(g) = grad.as_mut() {
                let diff = Array1::from(diff);
                g.w.row_mut(i).scaled_add(2.0 * cfg.mu, &diff);
                g.w_ctx.row_mut(i).scaled_add(2.0 * cfg.mu, &diff);
            }
        }
    }
    (fit + cfg.mu * penalty, grad)
}

/// Weighted least-squares GloVe cost over the stored (nonzero) entries.
pub fn glove_cost(params: &GloveParams, x: &CoocMatrix, cfg: &TrainConfig) -> Result<f64, EmbeddingError> {
    params.check(x, cfg.dim)?;
    Ok(evaluate(params, x, None, cfg, false).0)
}

/// GloVe cost plus `mu` times the squared distance of `w + w_ctx` to the
/// anchored pre-trained vectors.
pub fn mittens_cost(
    params: &GloveParams,
    x: &CoocMatrix,
    anchors: &Anchors,
    cfg: &TrainConfig,
) -> Result<f64, EmbeddingError> {
    params.check(x, cfg.dim)?;
    anchors.check(params.vocab_size(), cfg.dim)?;
    Ok(evaluate(params, x, Some(anchors), cfg, false).0)
}

/// Analytic gradient of [`glove_cost`] (no anchors) or [`mittens_cost`].
pub fn gradients(
    params: &GloveParams,
    x: &CoocMatrix,
    anchors: Option<&Anchors>,
    cfg: &TrainConfig,
) -> Result<GloveParams, EmbeddingError> {
    params.check(x, cfg.dim)?;
    if let Some(a) = anchors {
        a.check(params.vocab_size(), cfg.dim)?;
    }
    Ok(evaluate(params, x, anchors, cfg, true).1.expect("gradient requested"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: GloveParams,
    /// Cost at the start of every iteration.
    pub costs: Vec<f64>,
    pub anchors: Anchors,
}

impl TrainOutcome {
    /// One `iter<TAB>cost` line per iteration.
    pub fn write_log<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, c) in self.costs.iter().enumerate() {
            writeln!(out, "{i}\t{c}")?;
        }
        Ok(())
    }
}

fn adagrad_update<D: Dimension>(
    param: &mut Array<f64, D>,
    grad: &Array<f64, D>,
    acc: &mut Array<f64, D>,
    lr: f64,
) {
    Zip::from(param).and(grad).and(acc).for_each(|p, g, a| {
        *a += g * g;
        *p -= lr * g / a.sqrt();
    });
}

fn non_finite_report(params: &GloveParams, x: &CoocMatrix) -> String {
    let mut bad_rows: Vec<usize> = (0..params.vocab_size())
        .filter(|&i| {
            params.w.row(i).iter().chain(params.w_ctx.row(i).iter()).any(|v| !v.is_finite())
                || !params.b[i].is_finite()
                || !params.b_ctx[i].is_finite()
        })
        .collect();
    let total = bad_rows.len();
    bad_rows.truncate(8);
    let bad_entries: Vec<String> = x
        .upper_entries()
        .filter(|&(i, j, _)| bad_rows.contains(&i) || bad_rows.contains(&j))
        .take(5)
        .map(|(i, j, v)| format!("X[{i},{j}]={v}"))
        .collect();
    format!(
        "{total} rows with non-finite parameters (first: {bad_rows:?}); entries touching them: [{}]",
        bad_entries.join(", ")
    )
}

/// Trains GloVe vectors with full-batch AdaGrad.
///
/// With a pre-trained table and `mu > 0`, vocabulary words that have a
/// pre-trained vector start at `w = w_ctx = v/2` (so `w + w_ctx = v`) and are
/// pulled toward it by the penalty. With `mu == 0` the table is ignored and
/// the run is identical to plain GloVe training.
pub fn train(
    x: &CoocMatrix,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
    pretrained: Option<&EmbeddingTable>,
) -> Result<TrainOutcome, EmbeddingError> {
    cfg.validate()?;
    if x.vocab_size() != vocab.len() {
        return Err(EmbeddingError::Dimension(format!(
            "co-occurrence vocabulary {} vs vocabulary {}",
            x.vocab_size(),
            vocab.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = GloveParams::random(vocab.len(), cfg.dim, &mut rng);

    let anchors = match pretrained {
        Some(table) if cfg.mu > 0.0 => {
            if table.dim() != cfg.dim {
                return Err(EmbeddingError::Dimension(format!(
                    "pre-trained dim {} vs embedding dim {}",
                    table.dim(),
                    cfg.dim
                )));
            }
            let a = Anchors::from_table(vocab, table);
            for (i, v) in a.rows() {
                for (k, t) in v.iter().enumerate() {
                    params.w[[*i, k]] = t / 2.0;
                    params.w_ctx[[*i, k]] = t / 2.0;
                }
            }
            a
        }
        _ => Anchors::default(),
    };
    let anchor_ref = (!anchors.is_empty()).then_some(&anchors);
    log::info!(
        "training {}-d vectors for {} words, {} anchored, {} entries",
        cfg.dim,
        vocab.len(),
        anchors.len(),
        x.nnz()
    );

    let mut acc = GloveParams::zeros(vocab.len(), cfg.dim);
    for a in acc
        .w
        .iter_mut()
        .chain(acc.w_ctx.iter_mut())
        .chain(acc.b.iter_mut())
        .chain(acc.b_ctx.iter_mut())
    {
        *a = ADAGRAD_INIT;
    }

    let mut costs = Vec::with_capacity(cfg.iterations);
    for iteration in 0..cfg.iterations {
        let (cost, grad) = evaluate(&params, x, anchor_ref, cfg, true);
        if !cost.is_finite() {
            return Err(EmbeddingError::Diverged {
                iteration,
                detail: format!("cost {cost}; {}", non_finite_report(&params, x)),
            });
        }
        costs.push(cost);
        let g = grad.expect("gradient requested");
        let lr = cfg.learning_rate;
        adagrad_update(&mut params.w, &g.w, &mut acc.w, lr);
        adagrad_update(&mut params.w_ctx, &g.w_ctx, &mut acc.w_ctx, lr);
        adagrad_update(&mut params.b, &g.b, &mut acc.b, lr);
        adagrad_update(&mut params.b_ctx, &g.b_ctx, &mut acc.b_ctx, lr);
        if !params.all_finite() {
            return Err(EmbeddingError::Diverged {
                iteration,
                detail: non_finite_report(&params, x),
            });
        }
    }
    Ok(TrainOutcome {
        params,
        costs,
        anchors,
    })
}

/// `w + w_ctx` for every vocabulary word.
pub fn final_embedding(params: &GloveParams, vocab: &Vocabulary) -> EmbeddingTable {
    let mut table = EmbeddingTable::new(params.dim());
    for (i, token) in vocab.tokens().enumerate() {
        let v: Vec<f64> = (&params.w.row(i) + &params.w_ctx.row(i)).to_vec();
        table
            .insert(token, v)
            .expect("finite parameters of the right width");
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::seq::index::sample;

    fn cfg(dim: usize, mu: f64) -> TrainConfig {
        TrainConfig {
            dim,
            mu,
            ..TrainConfig::default()
        }
    }

    fn vocab(n: usize) -> Vocabulary {
        Vocabulary::from_entries((0..n).map(|i| (format!("w{i}"), 1)).collect())
    }

    #[test]
    fn weighting_is_capped() {
        assert_eq!(weighting(100.0, 100.0, 0.75), 1.0);
        assert_eq!(weighting(500.0, 100.0, 0.75), 1.0);
        assert_abs_diff_eq!(weighting(1.0, 100.0, 0.75), 0.031_622_776_601_683_79, epsilon = 1e-15);
    }

    #[test]
    fn exact_fit_costs_nothing() {
        let e = std::f64::consts::E;
        let x = CoocMatrix::from_triples(2, &[(0, 1, e)]);
        let mut p = GloveParams::zeros(2, 1);
        // both orientations have residual w.c + b + b~ - ln e = 0
        p.b.fill(0.5);
        p.b_ctx.fill(0.5);
        assert_abs_diff_eq!(glove_cost(&p, &x, &cfg(1, 0.0)).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_params_cost_is_the_weight() {
        let e = std::f64::consts::E;
        let x = CoocMatrix::from_triples(2, &[(0, 1, e)]);
        let p = GloveParams::zeros(2, 3);
        // (e/100)^0.75 per orientation, residual -1
        let f_e = (e / 100.0).powf(0.75);
        assert_abs_diff_eq!(f_e, 0.066_945_418_591_103_48, epsilon = 1e-12);
        assert_abs_diff_eq!(glove_cost(&p, &x, &cfg(3, 0.0)).unwrap(), 2.0 * f_e, epsilon = 1e-15);
    }

    #[test]
    fn doubling_residuals_quadruples_cost() {
        let x = CoocMatrix::from_triples(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]);
        // ln 1 = 0, so residuals are linear in the biases
        let mut p = GloveParams::zeros(3, 2);
        p.b.assign(&Array1::from(vec![0.3, -0.2, 0.7]));
        let c1 = glove_cost(&p, &x, &cfg(2, 0.0)).unwrap();
        p.b.mapv_inplace(|v| 2.0 * v);
        let c2 = glove_cost(&p, &x, &cfg(2, 0.0)).unwrap();
        assert_abs_diff_eq!(c2, 4.0 * c1, epsilon = 1e-12);
    }

    #[test]
    fn zero_mu_matches_glove_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = GloveParams::random(4, 3, &mut rng);
        let x = CoocMatrix::from_triples(4, &[(0, 1, 2.0), (2, 3, 7.5), (1, 3, 0.25)]);
        let anchors = Anchors::new(vec![(1, vec![1.0, 2.0, 3.0])]);
        let c = cfg(3, 0.0);
        assert_eq!(
            mittens_cost(&p, &x, &anchors, &c).unwrap().to_bits(),
            glove_cost(&p, &x, &c).unwrap().to_bits()
        );
    }

    #[test]
    fn penalty_terms() {
        let x = CoocMatrix::new(2);
        let mut p = GloveParams::zeros(2, 3);
        p.w.row_mut(0).assign(&Array1::from(vec![0.5, 1.0, 0.0]));
        p.w_ctx.row_mut(0).assign(&Array1::from(vec![1.5, 0.0, -1.0]));
        let on_target = Anchors::new(vec![(0, vec![2.0, 1.0, -1.0])]);
        assert_eq!(mittens_cost(&p, &x, &on_target, &cfg(3, 5.0)).unwrap(), 0.0);
        let off_by_unit = Anchors::new(vec![(0, vec![1.0, 1.0, -1.0])]);
        assert_abs_diff_eq!(mittens_cost(&p, &x, &off_by_unit, &cfg(3, 2.0)).unwrap(), 2.0);
    }

    #[test]
    fn penalty_only_gradient() {
        let x = CoocMatrix::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = GloveParams::random(3, 4, &mut rng);
        let target = vec![0.1, -0.2, 0.3, 0.0];
        let anchors = Anchors::new(vec![(2, target.clone())]);
        let g = gradients(&p, &x, Some(&anchors), &cfg(4, 0.7)).unwrap();
        for k in 0..4 {
            let diff = p.w[[2, k]] + p.w_ctx[[2, k]] - target[k];
            assert_abs_diff_eq!(g.w[[2, k]], 2.0 * 0.7 * diff, epsilon = 1e-15);
            assert_abs_diff_eq!(g.w_ctx[[2, k]], 2.0 * 0.7 * diff, epsilon = 1e-15);
        }
        assert!(g.w.row(0).iter().all(|&v| v == 0.0));
        assert!(g.b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_residual_zero_gradient() {
        let x = CoocMatrix::from_triples(2, &[(0, 1, 1.0)]);
        let p = GloveParams::zeros(2, 2);
        let g = gradients(&p, &x, None, &cfg(2, 0.0)).unwrap();
        assert_eq!(g, GloveParams::zeros(2, 2));
    }

    #[test]
    fn dimension_mismatches_are_errors() {
        let x = CoocMatrix::new(3);
        let p = GloveParams::zeros(2, 2);
        assert!(matches!(glove_cost(&p, &x, &cfg(2, 0.0)), Err(EmbeddingError::Dimension(_))));
        let p = GloveParams::zeros(3, 2);
        let bad = Anchors::new(vec![(0, vec![1.0, 2.0, 3.0])]);
        assert!(matches!(mittens_cost(&p, &x, &bad, &cfg(2, 1.0)), Err(EmbeddingError::Dimension(_))));
        let mut table = EmbeddingTable::new(3);
        table.insert("w0", vec![1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            train(&x, &vocab(3), &cfg(2, 1.0), Some(&table)),
            Err(EmbeddingError::Dimension(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for broken in [
            TrainConfig { mu: -1.0, ..TrainConfig::default() },
            TrainConfig { alpha: 0.0, ..TrainConfig::default() },
            TrainConfig { alpha: 1.5, ..TrainConfig::default() },
            TrainConfig { x_max: 0.0, ..TrainConfig::default() },
            TrainConfig { dim: 0, ..TrainConfig::default() },
            TrainConfig { iterations: 0, ..TrainConfig::default() },
            TrainConfig { learning_rate: 0.0, ..TrainConfig::default() },
        ] {
            assert!(matches!(broken.validate(), Err(EmbeddingError::Config(_))), "{broken:?}");
        }
    }

    #[test]
    fn final_embedding_sums_roles() {
        let v = Vocabulary::from_entries(vec![("a".into(), 1), ("b".into(), 1)]);
        let mut p = GloveParams::zeros(2, 2);
        p.w.row_mut(0).assign(&Array1::from(vec![1.0, 2.0]));
        p.w_ctx.row_mut(0).assign(&Array1::from(vec![3.0, 4.0]));
        p.w.row_mut(1).assign(&Array1::from(vec![-1.0, 0.5]));
        let t = final_embedding(&p, &v);
        assert_eq!(t.get("a"), Some(&[4.0, 6.0][..]));
        assert_eq!(t.get("b"), Some(&[-1.0, 0.5][..]));
    }

    #[test]
    fn triangle_inequality_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = GloveParams::random(20, 6, &mut rng);
        let t = final_embedding(&p, &vocab(20));
        for i in 0..20 {
            let n = |v: ndarray::ArrayView1<f64>| v.dot(&v).sqrt();
            let sum: f64 = t.get(&format!("w{i}")).unwrap().iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(sum <= n(p.w.row(i)) + n(p.w_ctx.row(i)) + 1e-12);
        }
    }

    /// Random symmetric matrix with `pairs` distinct off-diagonal pairs.
    fn random_cooc(v: usize, pairs: usize, rng: &mut ChaCha8Rng) -> CoocMatrix {
        let all: Vec<(usize, usize)> = (0..v).flat_map(|i| (i + 1..v).map(move |j| (i, j))).collect();
        let picked = sample(rng, all.len(), pairs);
        let triples: Vec<_> = picked
            .iter()
            .map(|k| (all[k].0, all[k].1, rng.random_range(0.5..150.0)))
            .collect();
        CoocMatrix::from_triples(v, &triples)
    }

    #[test]
    fn training_is_deterministic_and_decreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_cooc(12, 30, &mut rng);
        let c = TrainConfig {
            dim: 4,
            iterations: 60,
            ..TrainConfig::default()
        };
        let a = train(&x, &vocab(12), &c, None).unwrap();
        let b = train(&x, &vocab(12), &c, None).unwrap();
        assert_eq!(a, b);
        assert!(a.costs.last().unwrap() < &a.costs[0]);
    }

    #[test]
    fn zero_mu_ignores_pretrained_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_cooc(6, 8, &mut rng);
        let v = vocab(6);
        let mut table = EmbeddingTable::new(3);
        table.insert("w1", vec![1.0, 0.0, 0.0]).unwrap();
        let c = TrainConfig {
            dim: 3,
            mu: 0.0,
            iterations: 20,
            ..TrainConfig::default()
        };
        let plain = train(&x, &v, &c, None).unwrap();
        let retro = train(&x, &v, &c, Some(&table)).unwrap();
        assert_eq!(plain.params, retro.params);
    }

    #[test]
    fn anchored_words_start_at_their_vectors() {
        let x = CoocMatrix::from_triples(3, &[(0, 1, 3.0)]);
        let mut table = EmbeddingTable::new(2);
        table.insert("W2", vec![0.4, -0.8]).unwrap();
        let c = TrainConfig {
            dim: 2,
            mu: 1.0,
            iterations: 1,
            ..TrainConfig::default()
        };
        let out = train(&x, &vocab(3), &c, Some(&table)).unwrap();
        assert_eq!(out.anchors.rows(), &[(2, vec![0.4, -0.8])]);
        // w2 has no co-occurrences and zero penalty gradient at the start
        let t = final_embedding(&out.params, &vocab(3));
        assert_eq!(t.get("w2"), Some(&[0.4, -0.8][..]));
    }

    #[test]
    fn log_lines() {
        let out = TrainOutcome {
            params: GloveParams::zeros(1, 1),
            costs: vec![2.5, 1.25],
            anchors: Anchors::default(),
        };
        let mut buf = Vec::new();
        out.write_log(&mut buf).unwrap();
        assert_eq!(buf, b"0\t2.5\n1\t1.25\n");
    }
}
