use refdoc::classifiers::{Algorithm, ModelConfig};
use refdoc::corpus::RefactoringType::{self, *};
use refdoc::evaluation::cross_validate;
use refdoc::pipeline::{fit, predict_message};
use refdoc::synth::*;
use refdoc::terms::{match_patterns, PatternCatalog};

#[test]
fn bundled_files_are_generator_output() {
    let base = SynthConfig {
        seed: BUNDLED_SEED,
        ..SynthConfig::default()
    };
    assert_eq!(bundled_synthetic().unwrap(), synthetic_corpus(&base));
    assert_eq!(
        bundled_synthetic_with_none().unwrap(),
        synthetic_corpus(&SynthConfig { include_none: true, ..base })
    );
    assert_eq!(
        bundled_detector_corpus().unwrap(),
        synthetic_detector_corpus(BUNDLED_DETECTOR_PER_CLASS, BUNDLED_DETECTOR_SEED)
    );
}

#[test]
fn corpus_shape() {
    let d = bundled_synthetic().unwrap();
    assert_eq!(d.len(), 600);
    for class in RefactoringType::METHOD_LEVEL {
        assert_eq!(d.class_counts()[&class], 100);
    }
    assert_eq!(bundled_synthetic_with_none().unwrap().class_counts()[&None], 100);
    assert_eq!(bundled_detector_corpus().unwrap().len(), 7 * BUNDLED_DETECTOR_PER_CLASS);
}

#[test]
fn generated_messages_carry_a_pattern_of_their_class() {
    let catalog = PatternCatalog::bundled();
    let d = bundled_synthetic().unwrap();
    for (r, class) in d.labeled() {
        let hits = match_patterns(&r.message, catalog);
        assert!(hits.contains_key(&class), "{}: {:?}", r.id, r.message);
    }
}

#[test]
fn distractor_rate_is_roughly_honored() {
    let quiet = synthetic_corpus(&SynthConfig { distractor_rate: 0.0, seed: 1, ..SynthConfig::default() });
    let noisy = synthetic_corpus(&SynthConfig { distractor_rate: 1.0, seed: 1, ..SynthConfig::default() });
    let mean_len = |d: &refdoc::corpus::Dataset| {
        d.records().iter().map(|r| r.message.len()).sum::<usize>() as f64 / d.len() as f64
    };
    assert!(mean_len(&noisy) > mean_len(&quiet) + 10.0);
}

#[test]
fn gbt_keeps_pace_with_nb() {
    let d = bundled_synthetic().unwrap();
    let gbt = cross_validate(&d, &ModelConfig::new(Algorithm::Gbt), 10, 0).unwrap();
    let nb = cross_validate(&d, &ModelConfig::new(Algorithm::Nb), 10, 0).unwrap();
    let (g, n) = (gbt.summary.macro_avg.f_measure, nb.summary.macro_avg.f_measure);
    assert!(g >= n - 0.02, "gbt macro-F1 {g:.4} vs nb {n:.4}");
}

#[test]
fn learned_models_read_paraphrased_renames() {
    let d = bundled_synthetic().unwrap();
    for algorithm in Algorithm::ALL {
        let model = fit(&d, &ModelConfig::new(algorithm)).unwrap();
        let label = predict_message(&model, "Change name of `Decorator' to `Events'").label();
        assert_eq!(label, RenameMethod, "{algorithm}");
    }
}
