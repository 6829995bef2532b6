//! Gradient cases checked against the finite-difference oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segan::model::{
    classifier_forward, classifier_loss, classifier_objective, discriminator_forward,
    discriminator_loss, discriminator_objective, generator_forward, generator_loss,
    generator_objective, impute_combine, Batch, SeganModel, Variant,
};
use segan::numerics::{mlp_backward, mlp_forward, Activation, Matrix, MlpLayer};
use segan::TrainConfig;

use super::{check_gradient, flatten, FdReport};

pub const LAYER_BOUND: f64 = 1e-4;
pub const OBJECTIVE_BOUND: f64 = 1e-3;

/// Kinks may hide at most a tenth of the coordinates.
pub fn kinks_acceptable(report: &FdReport) -> bool {
    report.kinks * 10 <= report.checked + report.kinks
}

/// Random network of 1 to 3 layers, at most 16 units wide, with a random
/// output activation, scored by a fixed random linear functional.
pub fn random_network_case(seed: u64) -> FdReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = rng.random_range(1..=3);
    let mut widths = vec![rng.random_range(1..=16)];
    for _ in 0..depth {
        widths.push(rng.random_range(1..=16));
    }
    let hidden = [Activation::Relu, Activation::Sigmoid, Activation::Identity];
    let last = [
        Activation::Sigmoid,
        Activation::Softmax,
        Activation::Identity,
        Activation::Relu,
    ];
    let mut layers: Vec<MlpLayer> = widths
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let act = if i + 2 == widths.len() {
                last[rng.random_range(0..last.len())]
            } else {
                hidden[rng.random_range(0..hidden.len())]
            };
            let mut layer = MlpLayer::init(w[0], w[1], act, &mut rng);
            layer
                .bias
                .iter_mut()
                .for_each(|b| *b = rng.random_range(-0.5..0.5));
            layer
        })
        .collect();
    let samples = rng.random_range(1..=5);
    let input = Matrix::from_fn(widths[0], samples, |_, _| rng.random_range(-1.0..1.0));
    let out_dim = *widths.last().unwrap();
    let probe = Matrix::from_fn(out_dim, samples, |_, _| rng.random_range(-1.0..1.0));

    let refs: Vec<&MlpLayer> = layers.iter().collect();
    let (_, cache) = mlp_forward(&refs, &input).unwrap();
    let analytic = flatten(&mlp_backward(&refs, &cache, &probe).unwrap().grads);
    let loss = |ls: &Vec<MlpLayer>| {
        let refs: Vec<&MlpLayer> = ls.iter().collect();
        mlp_forward(&refs, &input).unwrap().0.hadamard(&probe).sum()
    };
    check_gradient(&mut layers, |l| l.as_mut_slice(), loss, &analytic)
}

/// 3 features × 4 samples with two classes and a mix of observed, missing,
/// hinted and unhinted entries.
fn toy() -> (SeganModel, Batch) {
    let config = TrainConfig {
        hidden_width: 6,
        alpha: 0.7,
        beta: 1.3,
        ..TrainConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut model = SeganModel::new(3, Some(2), &config, Variant::Full, &mut rng).unwrap();
    for layer in model
        .generator
        .iter_mut()
        .chain([&mut model.trunk, &mut model.disc_head])
    {
        layer
            .bias
            .iter_mut()
            .for_each(|b| *b = rng.random_range(-0.3..0.3));
    }
    let mask = Matrix::from_rows(&[
        vec![1.0, 0.0, 1.0, 0.0],
        vec![0.0, 1.0, 1.0, 1.0],
        vec![1.0, 1.0, 0.0, 0.0],
    ])
    .unwrap();
    let x = Matrix::from_fn(3, 4, |r, c| {
        if mask.get(r, c) == 1.0 {
            rng.random::<f64>()
        } else {
            0.0
        }
    });
    let x_noisy = Matrix::from_fn(3, 4, |r, c| {
        if mask.get(r, c) == 1.0 {
            x.get(r, c)
        } else {
            0.01 * rng.random::<f64>()
        }
    });
    let hint = Matrix::from_rows(&[
        vec![1.0, 0.5, 0.5, 0.0],
        vec![0.0, 1.0, 0.5, 1.0],
        vec![0.5, 1.0, 0.0, 0.5],
    ])
    .unwrap();
    let batch = Batch {
        x,
        mask,
        x_noisy,
        hint,
        labels: vec![Some(1), None, Some(0), Some(1)],
    };
    (model, batch)
}

fn x_hat_of(model: &SeganModel, batch: &Batch) -> Matrix {
    let x_bar = generator_forward(model, &batch.x_noisy, &batch.mask).unwrap();
    impute_combine(&batch.x, &x_bar, &batch.mask).unwrap()
}

pub fn generator_objective_report() -> FdReport {
    let (mut model, batch) = toy();
    let (_, grads) =
        generator_objective(&model, &batch, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let loss = |m: &SeganModel| {
        let x_bar = generator_forward(m, &batch.x_noisy, &batch.mask).unwrap();
        let x_hat = impute_combine(&batch.x, &x_bar, &batch.mask).unwrap();
        generator_loss(
            m,
            &batch.x,
            &x_bar,
            &x_hat,
            &batch.mask,
            &batch.hint,
            &batch.labels,
        )
        .unwrap()
        .total
    };
    check_gradient(
        &mut model,
        |m| m.generator.as_mut_slice(),
        loss,
        &flatten(&grads),
    )
}

pub fn discriminator_objective_report() -> FdReport {
    let (model, batch) = toy();
    let x_hat = x_hat_of(&model, &batch);
    let (_, grads) = discriminator_objective(
        &model,
        &batch,
        &x_hat,
        0.0,
        &mut ChaCha8Rng::seed_from_u64(0),
    )
    .unwrap();
    let mut pair = vec![model.trunk.clone(), model.disc_head.clone()];
    let loss = |p: &Vec<MlpLayer>| {
        let mut m = model.clone();
        m.trunk = p[0].clone();
        m.disc_head = p[1].clone();
        discriminator_loss(
            &batch.mask,
            &discriminator_forward(&m, &x_hat, &batch.hint).unwrap(),
        )
        .unwrap()
    };
    check_gradient(&mut pair, |p| p.as_mut_slice(), loss, &flatten(&grads))
}

pub fn classifier_objective_report() -> FdReport {
    let (model, batch) = toy();
    let x_hat = x_hat_of(&model, &batch);
    let (_, grads) = classifier_objective(
        &model,
        &batch,
        &x_hat,
        0.0,
        &mut ChaCha8Rng::seed_from_u64(0),
    )
    .unwrap()
    .unwrap();
    let mut pair = vec![model.trunk.clone(), model.class_head.clone().unwrap()];
    let loss = |p: &Vec<MlpLayer>| {
        let mut m = model.clone();
        m.trunk = p[0].clone();
        m.class_head = Some(p[1].clone());
        classifier_loss(&batch.labels, &classifier_forward(&m, &x_hat).unwrap()).unwrap()
    };
    check_gradient(&mut pair, |p| p.as_mut_slice(), loss, &flatten(&grads))
}
