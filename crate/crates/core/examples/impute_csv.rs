//! Punches holes in a synthetic CSV, trains on it and writes the completed file.
//!
//! cargo run --example impute_csv [-- OUT.csv]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segan::data::{decode, encode, load_csv, write_csv};
use segan::synthetic::{correlated_gaussian, LABEL_COLUMN};
use segan::training::{impute, train};
use segan::TrainConfig;

fn main() -> segan::Result<()> {
    let dir = std::env::temp_dir();
    let input = dir.join("segan_example_input.csv");
    let output = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| dir.join("segan_example_filled.csv"));

    let mut table = correlated_gaussian(500, 6, 1).to_table();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for row in table.rows.iter_mut() {
        for cell in row.iter_mut().take(6) {
            if rng.random::<f64>() < 0.25 {
                *cell = None;
            }
        }
    }
    write_csv(&input, &table)?;

    let (table, schema) = load_csv(&input, Some(LABEL_COLUMN))?;
    let dataset = encode(&table, &schema)?;
    println!(
        "{} samples, {} missing cells",
        table.samples(),
        table.missing_cells()
    );

    let config = TrainConfig {
        epochs: 20,
        seed: 7,
        ..TrainConfig::default()
    };
    let (model, report) = train(&dataset, &config)?;
    let last = report.last().expect("at least one epoch");
    println!(
        "final reconstruction loss {:.4}, L_D {:?}",
        last.reconstruction_loss, last.discriminator_loss
    );

    let completed = impute(&model, &dataset)?;
    let features = decode(completed.as_matrix(), &schema)?;
    write_csv(&output, &table.completed(&features, None)?)?;
    println!("wrote {}", output.display());
    Ok(())
}
