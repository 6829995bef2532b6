//! AUC of a predictor trained on imputed features, model against mean filling.

use segan::evaluation::{downstream_eval, downstream_pipeline, Method, PredictorConfig, Target};
use segan::synthetic::separable_task;
use segan::{TrainConfig, Variant};

fn main() -> segan::Result<()> {
    let set = separable_task(1000, 8, 7);
    let dataset = set.dataset();
    let target = Target::Classes(set.labels.clone());
    let config = TrainConfig {
        epochs: 15,
        ..TrainConfig::default()
    };
    let predictor = PredictorConfig::default();
    let seeds = [1, 2, 3];

    let complete = downstream_eval(dataset.data.as_matrix(), &target, &seeds, &predictor)?;
    println!("complete data  AUC {:.4}", complete.auc.unwrap_or(f64::NAN));
    for method in [Method::ColumnMean, Method::Segan(Variant::Full)] {
        let r = downstream_pipeline(
            &dataset,
            &target,
            method,
            &config,
            &seeds,
            Some(0.3),
            &predictor,
            1,
        )?;
        println!(
            "{:<14} AUC {:.4} ± {:.4}",
            method.to_string(),
            r.auc.unwrap_or(f64::NAN),
            r.std
        );
    }
    Ok(())
}
