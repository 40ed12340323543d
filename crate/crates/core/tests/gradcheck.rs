//! Analytic gradients against central finite differences.

use ndarray::{Array1, Array2};
use punctuate_core::cooc::CoocMatrix;
use punctuate_core::corpus::OffsetMode;
use punctuate_core::embeddings::{glove_cost, gradients, mittens_cost, Anchors, GloveParams, TrainConfig};
use punctuate_core::tagger::{CnnConfig, CnnModel, FeatureWindow, LayerShape, Mode, Regularization};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

fn random_cooc(rng: &mut ChaCha8Rng, vocab: usize, pairs: usize) -> CoocMatrix {
    let all: Vec<(usize, usize)> = (0..vocab).flat_map(|i| (i + 1..vocab).map(move |j| (i, j))).collect();
    let triples: Vec<(usize, usize, f64)> = sample(rng, all.len(), pairs)
        .into_iter()
        .map(|k| (all[k].0, all[k].1, rng.random_range(0.2..150.0)))
        .collect();
    CoocMatrix::from_triples(vocab, &triples)
}

fn random_params(rng: &mut ChaCha8Rng, vocab: usize, dim: usize) -> GloveParams {
    GloveParams {
        w: Array2::from_shape_fn((vocab, dim), |_| rng.random_range(-0.8..0.8)),
        w_ctx: Array2::from_shape_fn((vocab, dim), |_| rng.random_range(-0.8..0.8)),
        b: Array1::from_shape_fn(vocab, |_| rng.random_range(-0.5..0.5)),
        b_ctx: Array1::from_shape_fn(vocab, |_| rng.random_range(-0.5..0.5)),
    }
}

fn blocks_mut(p: &mut GloveParams) -> [&mut [f64]; 4] {
    [
        p.w.as_slice_mut().unwrap(),
        p.w_ctx.as_slice_mut().unwrap(),
        p.b.as_slice_mut().unwrap(),
        p.b_ctx.as_slice_mut().unwrap(),
    ]
}

fn glove_max_error(seed: u64, mu: f64) -> f64 {
    let (vocab, dim) = (8, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_cooc(&mut rng, vocab, 10);
    assert_eq!(x.entries().len(), 20);
    let params = random_params(&mut rng, vocab, dim);
    let anchors = Anchors::new(
        [0, 2, 3, 6]
            .iter()
            .map(|&i| (i, (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()))
            .collect(),
    );
    let cfg = TrainConfig {
        dim,
        mu,
        ..TrainConfig::default()
    };
    let cost = |p: &GloveParams| {
        if mu > 0.0 {
            mittens_cost(p, &x, &anchors, &cfg).unwrap()
        } else {
            glove_cost(p, &x, &cfg).unwrap()
        }
    };
    let mut grad = gradients(&params, &x, (mu > 0.0).then_some(&anchors), &cfg).unwrap();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut probe = params.clone();
    for (b, g) in blocks_mut(&mut grad).iter().enumerate() {
        for i in 0..g.len() {
            let orig = blocks_mut(&mut probe)[b][i];
            blocks_mut(&mut probe)[b][i] = orig + h;
            let up = cost(&probe);
            blocks_mut(&mut probe)[b][i] = orig - h;
            let down = cost(&probe);
            blocks_mut(&mut probe)[b][i] = orig;
            worst = worst.max(rel_error(g[i], (up - down) / (2.0 * h), 1e-12));
        }
    }
    worst
}

#[test]
fn glove_and_mittens_gradients_match_finite_differences() {
    for seed in 0..4 {
        let plain = glove_max_error(seed, 0.0);
        let anchored = glove_max_error(seed, 0.7);
        assert!(plain < 1e-5, "glove seed {seed}: {plain:e}");
        assert!(anchored < 1e-5, "mittens seed {seed}: {anchored:e}");
    }
}

fn tiny_model(seed: u64) -> CnnModel {
    let mut model = CnnModel::new(CnnConfig {
        embedding_dim: 3,
        window_len: 30,
        offset_mode: OffsetMode::Merged,
        filters: 4,
        layers: vec![LayerShape::new(3, 2), LayerShape::new(4, 1)],
        regularization: Regularization {
            dropout: 0.0,
            noise_sigma: 0.0,
            weight_decay: 0.001,
        },
        seed,
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    for l in &mut model.layers {
        l.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    model.head_bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    model
}

fn tiny_batch(seed: u64) -> Vec<FeatureWindow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    [30, 24]
        .iter()
        .map(|&real| {
            let mask: Vec<bool> = (0..30).map(|t| t < real).collect();
            let features = Array2::from_shape_fn((30, 6), |(t, _)| {
                if mask[t] {
                    rng.random_range(-1.5..1.5)
                } else {
                    0.0
                }
            });
            let labels = (0..30).map(|_| rng.random_range(0..4)).collect();
            FeatureWindow { features, labels, mask }
        })
        .collect()
}

fn cnn_max_error(seed: u64) -> f64 {
    let model = tiny_model(seed);
    let batch = tiny_batch(seed);
    let loss = |m: &CnnModel| {
        let pass = m.forward(&batch, Mode::Inference).unwrap();
        m.loss(&pass.probs, &batch).unwrap()
    };
    let pass = model.forward(&batch, Mode::Train { seed: 0 }).unwrap();
    let grads = model.backward(&pass, &batch).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut probe = model.clone();
    for (b, g) in grads.slices().iter().enumerate() {
        for i in 0..g.len() {
            let orig = probe.params()[b][i];
            probe.params_mut()[b][i] = orig + h;
            let up = loss(&probe);
            probe.params_mut()[b][i] = orig - h;
            let down = loss(&probe);
            probe.params_mut()[b][i] = orig;
            worst = worst.max(rel_error(g[i], (up - down) / (2.0 * h), 1e-12));
        }
    }
    worst
}

#[test]
fn cnn_gradients_match_finite_differences() {
    for seed in 0..3 {
        let err = cnn_max_error(seed);
        assert!(err < 1e-3, "seed {seed}: {err:e}");
    }
}
