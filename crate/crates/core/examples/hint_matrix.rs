//! Samples hint matrices at several reveal rates and tallies the three cases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use segan::data::MaskMatrix;
use segan::model::sample_hint;

fn main() -> segan::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mask = MaskMatrix::from_fn(100, 100, |r, c| (r * 7 + c * 3) % 10 < 7);
    println!(
        "{:>9} {:>8} {:>8} {:>8}",
        "hint rate", "R = 1", "R = 0", "R = 0.5"
    );
    for rate in [0.0, 0.5, 0.8, 1.0] {
        let hint = sample_hint(&mask, rate, &mut rng)?;
        let count = |v: f64| hint.r.values().iter().filter(|&&r| r == v).count();
        println!(
            "{rate:>9} {:>8} {:>8} {:>8}",
            count(1.0),
            count(0.0),
            count(0.5)
        );
    }
    Ok(())
}
