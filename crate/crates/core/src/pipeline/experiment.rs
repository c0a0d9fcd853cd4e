//! In-memory experiment core: train the model set for a vocabulary, decode
//! utterances into viseme/phoneme/word tracks, and score them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{bagging_train, ClassifierConfig, LdaEnsemble, TrainingData};
use crate::corpus::{Corpus, PronunciationDictionary, Utterance};
use crate::error::Result;
use crate::eval::{align, collapse_runs, word_decode};
use crate::features::{fit_features, FeatureConfig, FeatureModel, FeatureVector};
use crate::hmm::{hmm_fit, phoneme_decoder_model, viterbi, viterbi_soft, HmmModel};
use crate::util::mix_seed;
use crate::vocabulary::{ConfusionMatrix, VisemeVocabulary};

/// Everything needed to decode: feature recipe, viseme-class ensemble,
/// viseme-level HMM, and the constrained viseme-to-phoneme decoder.
#[derive(Debug, Clone)]
pub struct ModelSet {
    pub vocab: VisemeVocabulary,
    pub feature_model: FeatureModel,
    pub viseme_ensemble: LdaEnsemble,
    pub viseme_hmm: HmmModel,
    pub phoneme_decoder: HmmModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeMode {
    /// Standard Viterbi on per-frame argmax observations, no likelihood
    /// weighting (the rank-0 baseline).
    Baseline,
    /// Likelihood-augmented Viterbi over the top-`rank` candidates.
    Soft { rank: usize },
}

/// Per-utterance decoded label tracks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedTrack {
    pub id: String,
    pub log_prob: f64,
    pub visemes: Vec<usize>,
    pub phonemes: Vec<usize>,
    pub words: Vec<String>,
}

fn viseme_training_data(
    train: &Corpus,
    feature_model: &FeatureModel,
    vocab: &VisemeVocabulary,
) -> Result<TrainingData> {
    let per_utt: Vec<Vec<FeatureVector>> = train
        .utterances
        .par_iter()
        .map(|u| feature_model.extract(u))
        .collect::<Result<_>>()?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut spans = Vec::new();
    for (utt, feats) in train.utterances.iter().zip(per_utt) {
        let start = features.len();
        features.extend(feats.into_iter().map(|f| f.values));
        labels.extend(vocab.map_sequence(&utt.frame_labels));
        spans.push((start, features.len() - start));
    }
    Ok(TrainingData {
        features,
        labels,
        class_count: vocab.len(),
        utterance_spans: spans,
    })
}

/// Estimate the HMMs and bundle the models for decoding. The viseme HMM's
/// transitions come from vocabulary-mapped ground-truth label tracks and its
/// emissions from the ensemble's in-sample predictions; the phoneme decoder
/// keeps the phoneme bigram prior with vocabulary-constrained emissions.
pub fn assemble_models(
    train: &Corpus,
    feature_model: FeatureModel,
    vocab: VisemeVocabulary,
    viseme_ensemble: LdaEnsemble,
    decoder_epsilon: f64,
) -> Result<ModelSet> {
    let data = viseme_training_data(train, &feature_model, &vocab)?;
    let predictions: Vec<usize> = data
        .features
        .par_iter()
        .map(|f| viseme_ensemble.classify(f))
        .collect::<Result<_>>()?;

    let viseme_seqs: Vec<Vec<usize>> = train
        .utterances
        .iter()
        .map(|u| vocab.map_sequence(&u.frame_labels))
        .collect();
    let emission_pairs: Vec<(usize, usize)> =
        data.labels.iter().copied().zip(predictions).collect();
    let viseme_labels: Vec<String> = vocab
        .groups()
        .iter()
        .map(|g| {
            g.members
                .iter()
                .map(|&p| train.phoneme_set.symbol(p).to_string())
                .collect::<Vec<_>>()
                .join("+")
        })
        .collect();
    let viseme_hmm = hmm_fit(
        &viseme_seqs,
        &emission_pairs,
        vocab.len(),
        vocab.len(),
        viseme_labels.clone(),
        viseme_labels,
        None,
    )?;

    let phoneme_seqs: Vec<Vec<usize>> = train
        .utterances
        .iter()
        .map(|u| u.frame_labels.clone())
        .collect();
    let phoneme_labels: Vec<String> = train
        .phoneme_set
        .classes()
        .iter()
        .map(|c| c.symbol.clone())
        .collect();
    let phoneme_hmm = hmm_fit(
        &phoneme_seqs,
        &[],
        train.phoneme_set.len(),
        vocab.len(),
        phoneme_labels,
        (0..vocab.len()).map(|v| format!("v{v}")).collect(),
        None,
    )?;
    let phoneme_decoder = phoneme_decoder_model(&phoneme_hmm, &vocab, decoder_epsilon)?;

    Ok(ModelSet {
        vocab,
        feature_model,
        viseme_ensemble,
        viseme_hmm,
        phoneme_decoder,
    })
}

/// Fit features, train the ensemble on vocabulary classes, and assemble the
/// decoding models in one go.
pub fn train_models(
    train: &Corpus,
    vocab: VisemeVocabulary,
    features: &FeatureConfig,
    classifier: &ClassifierConfig,
    seed: u64,
) -> Result<ModelSet> {
    let feature_model = fit_features(&train.utterances, features, seed)?;
    let data = viseme_training_data(train, &feature_model, &vocab)?;
    let ensemble = bagging_train(&data, classifier, mix_seed(seed, 0x656e73))?;
    assemble_models(train, feature_model, vocab, ensemble, 1e-6)
}

/// Decode one utterance end to end: frame likelihoods over visemes, Viterbi
/// (baseline or soft), then the constrained phoneme decode and, when a
/// lexicon is given, word segmentation.
pub fn decode_utterance(
    models: &ModelSet,
    utterance: &Utterance,
    mode: DecodeMode,
    lexicon: Option<&PronunciationDictionary>,
    silence: usize,
    word_penalty: f64,
) -> Result<DecodedTrack> {
    let feats = models.feature_model.extract(utterance)?;
    decode_features(
        models,
        &utterance.id,
        &feats,
        mode,
        lexicon,
        silence,
        word_penalty,
    )
}

/// Decode pre-extracted (e.g. cached) features for one utterance.
pub fn decode_features(
    models: &ModelSet,
    id: &str,
    feats: &[FeatureVector],
    mode: DecodeMode,
    lexicon: Option<&PronunciationDictionary>,
    silence: usize,
    word_penalty: f64,
) -> Result<DecodedTrack> {
    let likelihoods = models.viseme_ensemble.likelihoods(feats)?;
    let path = match mode {
        DecodeMode::Baseline => {
            let hard: Vec<usize> = likelihoods.iter().map(|l| l.argmax()).collect();
            viterbi(&models.viseme_hmm, &hard)?
        }
        DecodeMode::Soft { rank } => {
            let soft: Vec<Vec<f64>> = likelihoods.iter().map(|l| l.values().to_vec()).collect();
            viterbi_soft(&models.viseme_hmm, &soft, rank)?
        }
    };
    let visemes = path.states.clone();
    let phonemes = viterbi(&models.phoneme_decoder, &visemes)?.states;
    let words = match lexicon {
        Some(lex) => {
            let tokens = collapse_runs(&phonemes);
            word_decode(&tokens, lex, silence, word_penalty)?
        }
        None => Vec::new(),
    };
    Ok(DecodedTrack {
        id: id.to_string(),
        log_prob: path.log_prob,
        visemes,
        phonemes,
        words,
    })
}

/// Decode a whole corpus, parallel across utterances.
pub fn decode_corpus(
    models: &ModelSet,
    corpus: &Corpus,
    mode: DecodeMode,
    lexicon: Option<&PronunciationDictionary>,
    word_penalty: f64,
) -> Result<Vec<DecodedTrack>> {
    let silence = corpus.phoneme_set.silence_index();
    corpus
        .utterances
        .par_iter()
        .map(|u| decode_utterance(models, u, mode, lexicon, silence, word_penalty))
        .collect()
}

/// Pooled scores over a decoded corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub viseme_token_accuracy: f64,
    pub phoneme_token_accuracy: f64,
    pub viseme_frame_accuracy: f64,
    pub phoneme_frame_accuracy: f64,
    pub word_accuracy: Option<f64>,
    pub mean_log_prob: f64,
    pub viseme_confusion: ConfusionMatrix,
    pub phoneme_confusion: ConfusionMatrix,
}

pub fn evaluate_tracks(
    corpus: &Corpus,
    vocab: &VisemeVocabulary,
    tracks: &[DecodedTrack],
    score_words: bool,
) -> Result<EvalSummary> {
    use crate::error::Error;
    if tracks.len() != corpus.utterances.len() {
        return Err(Error::Eval(format!(
            "{} tracks for {} utterances",
            tracks.len(),
            corpus.utterances.len()
        )));
    }
    let c_phonemes = corpus.phoneme_set.len();
    let mut vis_hits = 0i64;
    let mut vis_ins = 0i64;
    let mut vis_ref = 0i64;
    let mut pho_hits = 0i64;
    let mut pho_ins = 0i64;
    let mut pho_ref = 0i64;
    let mut word_hits = 0i64;
    let mut word_ins = 0i64;
    let mut word_ref = 0i64;
    let mut vis_frame_hits = 0usize;
    let mut pho_frame_hits = 0usize;
    let mut frames = 0usize;
    let mut log_prob_sum = 0.0;
    let mut viseme_confusion = ConfusionMatrix::zeros(vocab.len());
    let mut phoneme_confusion = ConfusionMatrix::zeros(c_phonemes);

    for (utt, track) in corpus.utterances.iter().zip(tracks) {
        if track.visemes.len() != utt.len() || track.phonemes.len() != utt.len() {
            return Err(Error::Eval(format!(
                "track {} length mismatch with utterance",
                track.id
            )));
        }
        let ref_visemes = vocab.map_sequence(&utt.frame_labels);
        let a = align(
            &collapse_runs(&ref_visemes),
            &collapse_runs(&track.visemes),
        );
        vis_hits += a.hits as i64;
        vis_ins += a.insertions as i64;
        vis_ref += a.ref_len as i64;
        let a = align(
            &collapse_runs(&utt.frame_labels),
            &collapse_runs(&track.phonemes),
        );
        pho_hits += a.hits as i64;
        pho_ins += a.insertions as i64;
        pho_ref += a.ref_len as i64;
        if score_words {
            let a = align(&utt.words, &track.words);
            word_hits += a.hits as i64;
            word_ins += a.insertions as i64;
            word_ref += a.ref_len as i64;
        }
        vis_frame_hits += ref_visemes
            .iter()
            .zip(&track.visemes)
            .filter(|(a, b)| a == b)
            .count();
        pho_frame_hits += utt
            .frame_labels
            .iter()
            .zip(&track.phonemes)
            .filter(|(a, b)| a == b)
            .count();
        frames += utt.len();
        log_prob_sum += track.log_prob;
        for (&t, &p) in ref_visemes.iter().zip(&track.visemes) {
            viseme_confusion.add(t, p, 1);
        }
        for (&t, &p) in utt.frame_labels.iter().zip(&track.phonemes) {
            phoneme_confusion.add(t, p, 1);
        }
    }

    if vis_ref == 0 || frames == 0 {
        return Err(Error::Eval("empty reference".into()));
    }
    Ok(EvalSummary {
        viseme_token_accuracy: (vis_hits - vis_ins) as f64 / vis_ref as f64,
        phoneme_token_accuracy: (pho_hits - pho_ins) as f64 / pho_ref as f64,
        viseme_frame_accuracy: vis_frame_hits as f64 / frames as f64,
        phoneme_frame_accuracy: pho_frame_hits as f64 / frames as f64,
        word_accuracy: if score_words {
            if word_ref == 0 {
                return Err(Error::Eval("word scoring requested but no reference words".into()));
            }
            Some((word_hits - word_ins) as f64 / word_ref as f64)
        } else {
            None
        },
        mean_log_prob: log_prob_sum / tracks.len() as f64,
        viseme_confusion,
        phoneme_confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic_corpus, SyntheticSpec};
    use crate::features::Stream;

    fn quick_feature_config() -> FeatureConfig {
        FeatureConfig {
            streams: vec![Stream::DctSpatial],
            dct_coeffs: 24,
            ..FeatureConfig::default()
        }
    }

    fn quick_classifier_config() -> ClassifierConfig {
        ClassifierConfig {
            n_bags: 3,
            ..ClassifierConfig::default()
        }
    }

    fn separable_corpus(seed: u64, n_utts: usize) -> Corpus {
        generate_synthetic_corpus(&SyntheticSpec {
            n_classes: 5,
            feature_dim: 5,
            class_separation: 14.0,
            n_utterances: n_utts,
            frames_per_utterance: 24,
            frames_per_state: 4.0,
            seed,
            ..SyntheticSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn separable_identity_pipeline_decodes_well() {
        let train = separable_corpus(1, 24);
        let test = separable_corpus(2, 8);
        let vocab = VisemeVocabulary::identity(&train.phoneme_set);
        let models = train_models(
            &train,
            vocab.clone(),
            &quick_feature_config(),
            &quick_classifier_config(),
            7,
        )
        .unwrap();
        let tracks =
            decode_corpus(&models, &test, DecodeMode::Soft { rank: 5 }, None, 0.5).unwrap();
        let summary = evaluate_tracks(&test, &vocab, &tracks, false).unwrap();
        assert!(
            summary.phoneme_frame_accuracy > 0.9,
            "frame accuracy {}",
            summary.phoneme_frame_accuracy
        );
        assert!(
            summary.phoneme_token_accuracy > 0.8,
            "token accuracy {}",
            summary.phoneme_token_accuracy
        );
    }

    #[test]
    fn decoding_is_deterministic() {
        let train = separable_corpus(3, 16);
        let vocab = VisemeVocabulary::identity(&train.phoneme_set);
        let models = train_models(
            &train,
            vocab,
            &quick_feature_config(),
            &quick_classifier_config(),
            9,
        )
        .unwrap();
        let a = decode_corpus(&models, &train, DecodeMode::Soft { rank: 2 }, None, 0.5).unwrap();
        let b = decode_corpus(&models, &train, DecodeMode::Soft { rank: 2 }, None, 0.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn evaluate_perfect_tracks_scores_one() {
        let corpus = separable_corpus(4, 4);
        let vocab = VisemeVocabulary::identity(&corpus.phoneme_set);
        let tracks: Vec<DecodedTrack> = corpus
            .utterances
            .iter()
            .map(|u| DecodedTrack {
                id: u.id.clone(),
                log_prob: -1.0,
                visemes: u.frame_labels.clone(),
                phonemes: u.frame_labels.clone(),
                words: u.words.clone(),
            })
            .collect();
        let summary = evaluate_tracks(&corpus, &vocab, &tracks, false).unwrap();
        assert_eq!(summary.phoneme_token_accuracy, 1.0);
        assert_eq!(summary.viseme_token_accuracy, 1.0);
        assert_eq!(summary.phoneme_frame_accuracy, 1.0);
    }
}
