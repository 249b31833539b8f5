mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use refdoc::baseline::KeywordRules;
use refdoc::classifiers::{Algorithm, ModelConfig};
use refdoc::corpus::{stratified_sample, CommitRecord, Dataset, RefactoringType};
use refdoc::evaluation::{
    confusion_matrix, cross_validate, evaluate_baseline, per_class_metrics, stratified_folds, train_fold,
    ConfusionMatrix, MetricsSummary,
};
use refdoc::synth::bundled_synthetic;
use RefactoringType::*;

#[test]
fn tally_matches_a_hand_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let classes = [ExtractMethod, MoveMethod, RenameMethod];
    let pairs: Vec<_> = (0..20)
        .map(|_| (classes[rng.gen_range(0..3)], classes[rng.gen_range(0..3)]))
        .collect();
    let m = confusion_matrix(&pairs, &classes).unwrap();
    for (i, &t) in classes.iter().enumerate() {
        for (j, &p) in classes.iter().enumerate() {
            let want = pairs.iter().filter(|&&x| x == (t, p)).count() as u64;
            assert_eq!(m.counts[i][j], want);
            assert_eq!(m.get(t, p), want);
        }
    }
    assert_eq!(m.total(), 20);
}

#[test]
fn unknown_labels_are_rejected() {
    let err = confusion_matrix(&[(ExtractMethod, InlineMethod)], &[ExtractMethod, MoveMethod]).unwrap_err();
    assert!(matches!(err, refdoc::Error::UnknownLabel { .. }), "{err:?}");
}

#[test]
fn metrics_match_exact_rationals() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let counts = common::random_matrix(&mut rng, 7, 100);
        let k = counts.len();
        let classes = RefactoringType::ALL[..k].to_vec();
        let m = ConfusionMatrix { classes: classes.clone(), counts: counts.clone() };
        let got = per_class_metrics(&m);
        let want = common::exact_metrics(&counts);
        for (c, (p, r, f)) in classes.iter().zip(&want) {
            let g = &got[c];
            assert!((g.precision - common::to_f64(p)).abs() <= 1e-12);
            assert!((g.recall - common::to_f64(r)).abs() <= 1e-12);
            assert!((g.f_measure - common::to_f64(f)).abs() <= 1e-12);
        }
    }
}

#[test]
fn zero_division_is_flagged() {
    let m = confusion_matrix(&[(ExtractMethod, ExtractMethod), (MoveMethod, ExtractMethod)], &[ExtractMethod, MoveMethod])
        .unwrap();
    let s = MetricsSummary::from_matrix(m);
    assert_eq!(s.per_class[&MoveMethod].precision, 0.0);
    assert_eq!(s.zero_division_classes, [MoveMethod]);
    assert!(s.render_table("t").contains("0/0 reported as 0 for: MoveMethod"));
}

#[test]
fn fold_sizes_are_balanced_within_each_class() {
    let labels: Vec<_> = RefactoringType::METHOD_LEVEL.iter().flat_map(|&c| std::iter::repeat_n(c, 834)).collect();
    let a = stratified_folds(&labels, 10, 0).unwrap();
    for &class in &RefactoringType::METHOD_LEVEL {
        for fold in 0..10 {
            let n = labels.iter().zip(&a).filter(|&(&l, &f)| l == class && f == fold).count();
            assert!(n == 83 || n == 84, "{class} fold {fold}: {n}");
        }
    }
    for fold in 0..10 {
        let n = a.iter().filter(|&&f| f == fold).count();
        assert!(n == 500 || n == 501);
    }
}

#[test]
fn four_records_two_folds() {
    let labels = [ExtractMethod, ExtractMethod, MoveMethod, MoveMethod];
    let a = stratified_folds(&labels, 2, 9).unwrap();
    assert_ne!(a[0], a[1]);
    assert_ne!(a[2], a[3]);
    assert!(stratified_folds(&labels, 3, 9).is_err());
    assert!(stratified_folds(&labels, 1, 9).is_err());
}

proptest! {
    #[test]
    fn folds_are_deterministic_and_stratified(
        sizes in proptest::collection::vec(5usize..40, 2..6),
        folds in 2usize..6,
        seed in any::<u64>(),
    ) {
        let labels: Vec<_> = sizes.iter().enumerate().flat_map(|(i, &n)| std::iter::repeat_n(RefactoringType::ALL[i], n)).collect();
        let a = stratified_folds(&labels, folds, seed).unwrap();
        prop_assert_eq!(&a, &stratified_folds(&labels, folds, seed).unwrap());
        for (i, &n) in sizes.iter().enumerate() {
            for fold in 0..folds {
                let c = labels.iter().zip(&a).filter(|&(&l, &f)| l == RefactoringType::ALL[i] && f == fold).count();
                prop_assert!(c == n / folds || c == n / folds + 1);
            }
        }
    }

    #[test]
    fn macro_is_the_mean_over_supported_classes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let counts = common::random_matrix(&mut rng, 7, 100);
        let classes = RefactoringType::ALL[..counts.len()].to_vec();
        let s = MetricsSummary::from_matrix(ConfusionMatrix { classes, counts });
        let present: Vec<_> = s.per_class.values().filter(|m| m.support > 0).collect();
        prop_assume!(!present.is_empty());
        let mean = present.iter().map(|m| m.f_measure).sum::<f64>() / present.len() as f64;
        prop_assert!((s.macro_avg.f_measure - mean).abs() <= 1e-12);
    }
}

fn small_corpus() -> Dataset {
    stratified_sample(&bundled_synthetic().unwrap(), 20, 1).unwrap()
}

/// Changing a held-out message must not change the model trained without it.
#[test]
fn held_out_records_do_not_leak_into_training() {
    let d = small_corpus();
    let labels = d.require_labels().unwrap();
    let a = stratified_folds(&labels, 5, 0).unwrap();
    let config = ModelConfig::new(Algorithm::Nb);
    let victim = a.iter().position(|&f| f == 2).unwrap();
    let mut records: Vec<CommitRecord> = d.records().to_vec();
    records[victim].message = "zebra quokka platypus rewrote everything".into();
    let perturbed = Dataset::new(records).unwrap();
    assert_eq!(train_fold(&d, &a, 2, &config).unwrap(), train_fold(&perturbed, &a, 2, &config).unwrap());
    assert_ne!(train_fold(&d, &a, 0, &config).unwrap(), train_fold(&perturbed, &a, 0, &config).unwrap());
}

#[test]
fn pooled_matrix_covers_every_record() {
    let d = small_corpus();
    let r = cross_validate(&d, &ModelConfig::new(Algorithm::Nb), 5, 0).unwrap();
    assert_eq!(r.summary.matrix.total() as usize, d.len());
    assert_eq!(r.n_records, d.len());
    assert_eq!(r, cross_validate(&d, &ModelConfig::new(Algorithm::Nb), 5, 0).unwrap());
    let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    assert!(json["macro"]["f_measure"].is_number());
    assert_eq!(json["config"]["hyperparameters"]["alpha"], 1.0);
}

#[test]
fn baseline_routes_misses_to_the_none_column() {
    let d = common::dataset(&[
        ("Renamed foo to bar", RenameMethod),
        ("Change name of x", RenameMethod),
        ("Extract helper", ExtractMethod),
    ]);
    let s = evaluate_baseline(&d, KeywordRules::bundled()).unwrap();
    assert_eq!(s.matrix.classes, [ExtractMethod, None, RenameMethod]);
    assert_eq!(s.matrix.get(RenameMethod, None), 1);
    assert_eq!(s.matrix.get(RenameMethod, RenameMethod), 1);
    assert_eq!(s.matrix.get(ExtractMethod, ExtractMethod), 1);
    // None has no support and is left out of the macro average
    assert!((s.macro_avg.recall - 0.75).abs() < 1e-12);
}
