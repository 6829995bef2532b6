//! Full model against its three ablations on identical splits.

use segan::evaluation::{run_ablation, Protocol};
use segan::synthetic::correlated_gaussian;
use segan::TrainConfig;

fn main() -> segan::Result<()> {
    let dataset = correlated_gaussian(1000, 8, 42).dataset();
    let config = TrainConfig {
        epochs: 15,
        ..TrainConfig::default()
    };
    let rows = run_ablation(&dataset, &config, &[1, 2, 3], &Protocol::with_mcar(0.3))?;
    for (variant, result) in rows {
        println!(
            "{:<8} RMSE {:.4} ± {:.4}",
            variant.label(),
            result.rmse,
            result.std
        );
    }
    Ok(())
}
