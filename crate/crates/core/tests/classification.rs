//! Classifier behavior on synthetic corpora: held-out accuracy in the
//! separable limit, bagging sanity, and confusion concentration on planted
//! pairs.

use visemic::classifier::{bagging_train, ClassifierConfig, TrainingData};
use visemic::corpus::{generate_synthetic_corpus, Corpus, SyntheticSpec};
use visemic::features::{fit_features, FeatureConfig, FeatureModel, Stream};
use visemic::vocabulary::ConfusionMatrix;

fn dct_features() -> FeatureConfig {
    FeatureConfig {
        streams: vec![Stream::DctSpatial],
        dct_coeffs: 16,
        ..Default::default()
    }
}

fn frame_data(corpus: &Corpus, model: &FeatureModel) -> TrainingData {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut spans = Vec::new();
    for utt in &corpus.utterances {
        let start = features.len();
        features.extend(model.extract(utt).unwrap().into_iter().map(|f| f.values));
        labels.extend(utt.frame_labels.iter().copied());
        spans.push((start, features.len() - start));
    }
    TrainingData {
        features,
        labels,
        class_count: corpus.phoneme_set.len(),
        utterance_spans: spans,
    }
}

fn accuracy(ensemble: &visemic::classifier::LdaEnsemble, data: &TrainingData) -> f64 {
    let correct = data
        .features
        .iter()
        .zip(&data.labels)
        .filter(|(f, &l)| ensemble.classify(f).unwrap() == l)
        .count();
    correct as f64 / data.features.len() as f64
}

#[test]
fn separable_three_class_data_classifies_held_out_frames() {
    let spec = |seed| SyntheticSpec {
        n_classes: 4, // silence + 3 separable classes
        feature_dim: 4,
        class_separation: 12.0,
        frames_per_state: 3.0,
        frames_per_utterance: 24,
        n_utterances: 40,
        seed,
        ..Default::default()
    };
    let train = generate_synthetic_corpus(&spec(1)).unwrap();
    let test = generate_synthetic_corpus(&spec(2)).unwrap();
    let model = fit_features(&train.utterances, &dct_features(), 0).unwrap();
    let train_data = frame_data(&train, &model);
    let test_data = frame_data(&test, &model);

    let ensemble = bagging_train(
        &train_data,
        &ClassifierConfig {
            n_bags: 100,
            ..Default::default()
        },
        5,
    )
    .unwrap();
    let acc = accuracy(&ensemble, &test_data);
    assert!(acc >= 0.95, "held-out frame accuracy {acc}");

    // Bagging does not fall more than 2 points behind a single plain fit.
    let single = bagging_train(
        &train_data,
        &ClassifierConfig {
            n_bags: 1,
            bootstrap: false,
            ..Default::default()
        },
        5,
    )
    .unwrap();
    let single_acc = accuracy(&single, &test_data);
    assert!(
        acc >= single_acc - 0.02,
        "ensemble {acc} vs single bag {single_acc}"
    );
}

#[test]
fn planted_pair_dominates_off_diagonal_confusion() {
    let spec = SyntheticSpec {
        n_classes: 8,
        confusable_pairs: vec![(2, 4)],
        feature_dim: 8,
        class_separation: 9.0,
        pair_separation: 1.5,
        frames_per_state: 3.0,
        frames_per_utterance: 24,
        n_utterances: 60,
        seed: 7,
        ..Default::default()
    };
    let corpus = generate_synthetic_corpus(&spec).unwrap();
    let model = fit_features(&corpus.utterances, &dct_features(), 0).unwrap();
    let data = frame_data(&corpus, &model);
    let ensemble = bagging_train(
        &data,
        &ClassifierConfig {
            n_bags: 5,
            ..Default::default()
        },
        3,
    )
    .unwrap();
    let predicted: Vec<usize> = data
        .features
        .iter()
        .map(|f| ensemble.classify(f).unwrap())
        .collect();
    let cm = ConfusionMatrix::from_labels(&data.labels, &predicted, spec.n_classes).unwrap();

    let mut best_pair = (0, 0);
    let mut best_mass = 0u64;
    for i in 0..spec.n_classes {
        for j in i + 1..spec.n_classes {
            let mass = cm.get(i, j) + cm.get(j, i);
            if mass > best_mass {
                best_mass = mass;
                best_pair = (i, j);
            }
        }
    }
    assert_eq!(best_pair, (2, 4), "largest symmetric confusion mass");
    assert!(best_mass > 0);
}
