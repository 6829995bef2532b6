//! Trains with only 20% of labels kept and prints pseudo-labeling per epoch.

use segan::evaluation::corrupt;
use segan::model::classifier_forward;
use segan::synthetic::separable_task;
use segan::training::{impute, train};
use segan::TrainConfig;

fn main() -> segan::Result<()> {
    let set = separable_task(800, 6, 2);
    let dataset = corrupt(&set.dataset(), Some(0.3), 2)?;
    let config = TrainConfig {
        label_rate: 0.2,
        learning_rate: 0.005,
        seed: 2,
        ..TrainConfig::default()
    };
    let (model, report) = train(&dataset, &config)?;
    for e in report.epochs.iter().step_by(3) {
        println!(
            "epoch {:>2}  L_G {:.4}  L_C {:.4}  pseudo-labels {}",
            e.epoch,
            e.generator_loss,
            e.classifier_loss.unwrap_or(f64::NAN),
            e.pseudo_labels
        );
    }
    let probs = classifier_forward(&model, impute(&model, &dataset)?.as_matrix())?;
    let correct = (0..set.samples())
        .filter(|&j| usize::from(probs.get(1, j) > probs.get(0, j)) == set.labels[j])
        .count();
    println!(
        "classifier accuracy on every sample: {:.3}",
        correct as f64 / set.samples() as f64
    );
    Ok(())
}
