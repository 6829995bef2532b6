//! Compares backpropagated gradients of a small network with central differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segan::numerics::{mlp_backward, mlp_forward, Activation, Matrix, MlpLayer};

const STEP: f64 = 1e-5;

fn loss(layers: &[MlpLayer], input: &Matrix, probe: &Matrix) -> f64 {
    let refs: Vec<&MlpLayer> = layers.iter().collect();
    mlp_forward(&refs, input)
        .expect("shapes agree")
        .0
        .hadamard(probe)
        .sum()
}

fn main() -> segan::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut layers = vec![
        MlpLayer::init(4, 8, Activation::Sigmoid, &mut rng),
        MlpLayer::init(8, 3, Activation::Softmax, &mut rng),
    ];
    let input = Matrix::from_fn(4, 5, |_, _| rng.random_range(-1.0..1.0));
    let probe = Matrix::from_fn(3, 5, |_, _| rng.random_range(-1.0..1.0));

    let refs: Vec<&MlpLayer> = layers.iter().collect();
    let (_, cache) = mlp_forward(&refs, &input)?;
    let grads = mlp_backward(&refs, &cache, &probe)?.grads;

    let mut worst: f64 = 0.0;
    for l in 0..layers.len() {
        let (rows, cols) = layers[l].weight.shape();
        for r in 0..rows {
            for c in 0..cols {
                let w = layers[l].weight.get(r, c);
                layers[l].weight.set(r, c, w + STEP);
                let plus = loss(&layers, &input, &probe);
                layers[l].weight.set(r, c, w - STEP);
                let minus = loss(&layers, &input, &probe);
                layers[l].weight.set(r, c, w);
                let numeric = (plus - minus) / (2.0 * STEP);
                let analytic = grads.layers[l].weight.get(r, c);
                worst = worst
                    .max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6));
            }
        }
    }
    println!("max relative error over all weights: {worst:.2e}");
    Ok(())
}
