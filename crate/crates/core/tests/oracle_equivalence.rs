//! Inference checked against brute-force oracles: the DP backend against
//! exhaustive enumeration, and both against an independent test-side
//! enumerator.

mod common;

use common::*;
use rand::Rng;

use sslsop::inference::{ImputeTerm, InferenceBackend, Inferencer};
use sslsop::loss::LossSpec;
use sslsop::model::StructuredOutput;

#[test]
fn predict_matches_brute_force_on_sequences() {
    let mut rng = seeded(101);
    for trial in 0..60 {
        let space = sequence_space(&mut rng, 3, 4);
        let d = rng.gen_range(1..=3);
        let flat = match &space {
            sslsop::model::OutputSpace::Sequence(seq) => seq.length * d,
            _ => unreachable!(),
        };
        let dp = Inferencer::new(&space, flat, InferenceBackend::SequenceDp).unwrap();
        let ex = Inferencer::new(&space, flat, InferenceBackend::Exhaustive).unwrap();
        let m = dp.feature_map().dimension();
        let w = normal_vec(&mut rng, m);
        let x = normal_vec(&mut rng, flat);

        let expected = brute_predict(dp.feature_map(), &w, &x);
        assert_eq!(dp.predict(&w, &x).unwrap(), expected, "trial {trial} dp");
        assert_eq!(ex.predict(&w, &x).unwrap(), expected, "trial {trial} ex");
    }
}

#[test]
fn predict_matches_brute_force_on_taxonomies() {
    let mut rng = seeded(102);
    let space = small_taxonomy_space();
    let inf = Inferencer::new(&space, 3, InferenceBackend::Exhaustive).unwrap();
    let m = inf.feature_map().dimension();
    for _ in 0..40 {
        let w = normal_vec(&mut rng, m);
        let x = normal_vec(&mut rng, 3);
        assert_eq!(
            inf.predict(&w, &x).unwrap(),
            brute_predict(inf.feature_map(), &w, &x)
        );
    }
}

#[test]
fn loss_augmented_argmax_matches_brute_force() {
    let mut rng = seeded(103);
    for trial in 0..60 {
        let space = sequence_space(&mut rng, 3, 4);
        let d = rng.gen_range(1..=2);
        let flat = match &space {
            sslsop::model::OutputSpace::Sequence(seq) => seq.length * d,
            _ => unreachable!(),
        };
        let loss = if trial % 2 == 0 {
            LossSpec::Hamming { normalized: true }
        } else {
            LossSpec::Hamming { normalized: false }
        };
        let dp = Inferencer::new(&space, flat, InferenceBackend::SequenceDp).unwrap();
        let ex = Inferencer::new(&space, flat, InferenceBackend::Exhaustive).unwrap();
        let m = dp.feature_map().dimension();
        let w = normal_vec(&mut rng, m);
        let x = normal_vec(&mut rng, flat);
        let y_cur = random_output(&mut rng, &space);

        let (bz, bb) = brute_loss_augmented(dp.feature_map(), loss, &w, &x, &y_cur);
        let (dz, db) = dp.loss_augmented_argmax(&w, &x, &y_cur, loss).unwrap();
        let (ez, eb) = ex.loss_augmented_argmax(&w, &x, &y_cur, loss).unwrap();
        assert_eq!(dz, bz, "trial {trial} dp argmax");
        assert_eq!(ez, bz, "trial {trial} ex argmax");
        assert!(
            (db - bb).abs() <= 1e-9,
            "trial {trial} dp bound {db} vs {bb}"
        );
        assert!(
            (eb - bb).abs() <= 1e-9,
            "trial {trial} ex bound {eb} vs {bb}"
        );
    }
}

#[test]
fn impute_matches_brute_force() {
    let mut rng = seeded(104);
    for trial in 0..60 {
        let space = sequence_space(&mut rng, 3, 4);
        let d = rng.gen_range(1..=2);
        let flat = match &space {
            sslsop::model::OutputSpace::Sequence(seq) => seq.length * d,
            _ => unreachable!(),
        };
        let dp = Inferencer::new(&space, flat, InferenceBackend::SequenceDp).unwrap();
        let ex = Inferencer::new(&space, flat, InferenceBackend::Exhaustive).unwrap();
        let m = dp.feature_map().dimension();
        let n_terms = rng.gen_range(1..=3);
        let weights: Vec<Vec<f64>> = (0..n_terms).map(|_| normal_vec(&mut rng, m)).collect();
        let targets: Vec<StructuredOutput> = (0..n_terms)
            .map(|_| random_output(&mut rng, &space))
            .collect();
        let x = normal_vec(&mut rng, flat);
        let inv_k = 1.0 / rng.gen_range(1..=4) as f64;
        let loss = LossSpec::Hamming {
            normalized: trial % 2 == 0,
        };

        let term_refs: Vec<(&[f64], &StructuredOutput)> = weights
            .iter()
            .map(|w| w.as_slice())
            .zip(targets.iter())
            .collect();
        let expected = brute_impute(dp.feature_map(), loss, &term_refs, inv_k, &x);

        let terms: Vec<ImputeTerm<'_>> = weights
            .iter()
            .zip(&targets)
            .map(|(w, t)| ImputeTerm {
                weights: w,
                target: t,
            })
            .collect();
        assert_eq!(dp.impute_argmin(&x, &terms, inv_k, loss).unwrap(), expected);
        assert_eq!(ex.impute_argmin(&x, &terms, inv_k, loss).unwrap(), expected);
    }
}

#[test]
fn bound_dominates_prediction_loss() {
    // For any weights the bound value is at least the loss of the score
    // argmax and never negative, with no tolerance.
    let mut rng = seeded(105);
    for trial in 0..80 {
        let (space, flat) = if trial % 2 == 0 {
            (small_taxonomy_space(), 3)
        } else {
            let space = sequence_space(&mut rng, 3, 4);
            let flat = match &space {
                sslsop::model::OutputSpace::Sequence(seq) => seq.length * 2,
                _ => unreachable!(),
            };
            (space, flat)
        };
        let loss = LossSpec::default_for(&space);
        let inf = Inferencer::new(&space, flat, InferenceBackend::Exhaustive).unwrap();
        let m = inf.feature_map().dimension();
        let w = normal_vec(&mut rng, m);
        let x = normal_vec(&mut rng, flat);
        let y_cur = random_output(&mut rng, &space);

        let (_, bound) = inf.loss_augmented_argmax(&w, &x, &y_cur, loss).unwrap();
        let predicted = inf.predict(&w, &x).unwrap();
        let delta = sslsop::structured_loss(loss, &space, &y_cur, &predicted).unwrap();
        assert!(
            bound >= delta,
            "trial {trial}: bound {bound} < loss {delta}"
        );
        assert!(bound >= 0.0, "trial {trial}: bound {bound} negative");
    }
}

#[test]
fn prediction_is_scale_invariant() {
    let mut rng = seeded(106);
    for _ in 0..40 {
        let space = sequence_space(&mut rng, 3, 4);
        let flat = match &space {
            sslsop::model::OutputSpace::Sequence(seq) => seq.length * 2,
            _ => unreachable!(),
        };
        let inf = Inferencer::new(&space, flat, InferenceBackend::SequenceDp).unwrap();
        let m = inf.feature_map().dimension();
        let w = normal_vec(&mut rng, m);
        let x = normal_vec(&mut rng, flat);
        let alpha = rng.gen_range(0.1..10.0);
        let scaled: Vec<f64> = w.iter().map(|v| alpha * v).collect();
        assert_eq!(
            inf.predict(&w, &x).unwrap(),
            inf.predict(&scaled, &x).unwrap()
        );
    }
}

#[test]
fn enumeration_agrees_with_independent_enumerator() {
    let mut rng = seeded(107);
    for _ in 0..10 {
        let space = sequence_space(&mut rng, 3, 4);
        let ours: Vec<StructuredOutput> = sslsop::enumerate_outputs(&space, 1_000_000)
            .unwrap()
            .collect();
        assert_eq!(ours, enumerate_all(&space));
    }
    let tax = small_taxonomy_space();
    let ours: Vec<StructuredOutput> = sslsop::enumerate_outputs(&tax, 1_000_000)
        .unwrap()
        .collect();
    assert_eq!(ours, enumerate_all(&tax));
}
