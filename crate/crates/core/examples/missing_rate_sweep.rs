//! Holdout RMSE of the model and the column-mean baseline across MCAR rates.

use segan::evaluation::{sweep_missing_rate, Method, DEFAULT_RATES};
use segan::synthetic::correlated_gaussian;
use segan::{TrainConfig, Variant};

fn main() -> segan::Result<()> {
    let dataset = correlated_gaussian(1000, 8, 42).dataset();
    let config = TrainConfig {
        epochs: 15,
        ..TrainConfig::default()
    };
    let seeds = [1, 2, 3];
    let model = sweep_missing_rate(
        &dataset,
        &config,
        Method::Segan(Variant::Full),
        &DEFAULT_RATES,
        &seeds,
        1,
    )?;
    let mean = sweep_missing_rate(
        &dataset,
        &config,
        Method::ColumnMean,
        &DEFAULT_RATES,
        &seeds,
        1,
    )?;
    println!("{:>5} {:>16} {:>16}", "rate", "SEGAN", "mean");
    for ((rate, s), (_, m)) in model.iter().zip(&mean) {
        println!(
            "{rate:>5} {:>9.4} ± {:.4} {:>9.4} ± {:.4}",
            s.rmse, s.std, m.rmse, m.std
        );
    }
    Ok(())
}
