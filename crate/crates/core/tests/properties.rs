//! Property tests for the data layer, missingness and hint sampling.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use segan::data::{
    decode, encode, holdout_known, inject_mcar, ColumnSchema, DataMatrix, Dataset, MaskMatrix,
    RawTable,
};
use segan::model::{impute_combine, sample_hint, SeganModel, Variant};
use segan::numerics::Matrix;
use segan::training::impute_with_seed;
use segan::TrainConfig;

fn mask_strategy() -> impl Strategy<Value = (usize, usize, Vec<bool>)> {
    (1usize..6, 1usize..12).prop_flat_map(|(d, n)| {
        (
            Just(d),
            Just(n),
            prop::collection::vec(any::<bool>(), d * n),
        )
    })
}

fn table_strategy() -> impl Strategy<Value = RawTable> {
    let row = (
        prop::option::weighted(0.8, -1e3f64..1e3),
        prop::option::weighted(0.8, prop::sample::select(vec!["red", "green", "blue"])),
    );
    prop::collection::vec(row, 2..30).prop_map(|rows| {
        let rows = rows
            .into_iter()
            .map(|(x, cat)| vec![x.map(|v| format!("{v}")), cat.map(str::to_string)])
            .collect();
        RawTable::new(vec!["x".into(), "cat".into()], rows, None).unwrap()
    })
}

proptest! {
    #[test]
    fn encode_decode_round_trips(table in table_strategy()) {
        // Inference needs at least one observed value per column.
        prop_assume!(table.rows.iter().any(|r| r[0].is_some()));
        prop_assume!(table.rows.iter().any(|r| r[1].is_some()));
        let schema = ColumnSchema::infer(&table).unwrap();
        let ds = encode(&table, &schema).unwrap();
        prop_assert!(ds.data.values().iter().all(|v| (0.0..=1.0).contains(v)));
        let decoded = decode(ds.data.as_matrix(), &schema).unwrap();
        for (row, back) in table.rows.iter().zip(&decoded) {
            if let Some(x) = &row[0] {
                let (a, b): (f64, f64) = (x.parse().unwrap(), back[0].parse().unwrap());
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
            }
            if let Some(cat) = &row[1] {
                prop_assert_eq!(cat, &back[1]);
            }
        }
    }

    #[test]
    fn mcar_only_removes_observed_entries((d, n, bits) in mask_strategy(), rate in 0.01f64..0.99, seed: u64) {
        let mask = MaskMatrix::from_fn(d, n, |r, c| bits[r * n + c]);
        let data = DataMatrix::new(Matrix::filled(d, n, 0.5), &mask).unwrap();
        let (_, out) = inject_mcar(&data, &mask, rate, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        for r in 0..d {
            for c in 0..n {
                prop_assert!(!out.is_observed(r, c) || mask.is_observed(r, c));
            }
        }
    }

    #[test]
    fn holdout_partitions_observed_entries((d, n, bits) in mask_strategy(), fraction in 0.05f64..0.95, seed: u64) {
        let mask = MaskMatrix::from_fn(d, n, |r, c| bits[r * n + c]);
        prop_assume!(mask.observed_count() > 0);
        let (training, holdout) = holdout_known(&mask, fraction, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(!holdout.is_empty());
        prop_assert_eq!(training.observed_count() + holdout.len(), mask.observed_count());
        for r in 0..d {
            for c in 0..n {
                let held = holdout.contains(r, c);
                prop_assert!(!(held && training.is_observed(r, c)));
                prop_assert_eq!(mask.is_observed(r, c), held || training.is_observed(r, c));
            }
        }
    }

    #[test]
    fn hint_follows_case_table((d, n, bits) in mask_strategy(), rate in 0.0f64..=1.0, seed: u64) {
        let mask = MaskMatrix::from_fn(d, n, |r, c| bits[r * n + c]);
        let hint = sample_hint(&mask, rate, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        for ((&r, &k), &m) in hint.r.values().iter().zip(hint.k.values()).zip(mask.values()) {
            prop_assert!(k == 0.0 || k == 1.0);
            prop_assert_eq!(r, if k == 1.0 { m } else { 0.5 });
        }
    }

    #[test]
    fn combine_keeps_observed_and_takes_generated((d, n, bits) in mask_strategy()) {
        let mask = MaskMatrix::from_fn(d, n, |r, c| bits[r * n + c]);
        let x = Matrix::from_fn(d, n, |r, c| (r * n + c) as f64 * 0.1);
        let x_bar = Matrix::filled(d, n, -7.0);
        let x_hat = impute_combine(&x, &x_bar, mask.as_matrix()).unwrap();
        for r in 0..d {
            for c in 0..n {
                let expected = if mask.is_observed(r, c) { x.get(r, c) } else { -7.0 };
                prop_assert_eq!(x_hat.get(r, c), expected);
            }
        }
    }

    #[test]
    fn impute_preserves_observed_bits((d, n, bits) in mask_strategy(), seed: u64) {
        let mask = MaskMatrix::from_fn(d, n, |r, c| bits[r * n + c]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::from_fn(d, n, |r, c| ((r * 31 + c * 17) % 97) as f64 / 97.0);
        let data = DataMatrix::new(x, &mask).unwrap();
        let truth = data.as_matrix().clone();
        let ds = Dataset::new(data, mask.clone(), None).unwrap();
        let config = TrainConfig { hidden_width: 4, beta: 0.0, ..TrainConfig::default() };
        let model = SeganModel::new(d, None, &config, Variant::Full, &mut rng).unwrap();
        let out = impute_with_seed(&model, &ds, seed).unwrap();
        for r in 0..d {
            for c in 0..n {
                let v = out.as_matrix().get(r, c);
                prop_assert!(v.is_finite());
                if mask.is_observed(r, c) {
                    prop_assert_eq!(v.to_bits(), truth.get(r, c).to_bits());
                }
            }
        }
    }
}
