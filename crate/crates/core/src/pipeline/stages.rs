//! File-based pipeline stages behind the CLI subcommands. Every artifact is
//! stamped with the config hash and seed and is byte-identical across reruns
//! with the same settings.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{bagging_train, io as model_io, TrainingData};
use crate::corpus::{
    generate_synthetic_corpus, load_lexicon, load_manifest, save_corpus, Corpus,
    PronunciationDictionary,
};
use crate::error::{Error, Result};
use crate::eval::report::{self, FeatureRow, RankRow, SweepRow};
use crate::eval::precision_recall;
use crate::features::{
    cache::{read_cache, write_cache},
    fit_features, FeatureModel, FeatureVector,
};
use crate::hmm::HmmModel;
use crate::pipeline::config::ExperimentConfig;
use crate::pipeline::experiment::{
    assemble_models, decode_corpus, evaluate_tracks, DecodeMode, DecodedTrack, EvalSummary,
    ModelSet,
};
use crate::util::{fnv1a64, fnv1a64_extend, mix_seed};
use crate::vocabulary::{
    build_vocabulary, load_vocabulary, save_vocabulary, VisemeVocabulary, VocabularyBuildConfig,
};

/// Which vocabulary a decode/evaluate run targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocabChoice {
    /// One class per phoneme.
    Identity,
    /// A vocabulary built by `build-vocab`/`sweep-vocab` to this length.
    Length(usize),
}

impl VocabChoice {
    pub fn tag(&self) -> String {
        match self {
            VocabChoice::Identity => "identity".into(),
            VocabChoice::Length(k) => format!("len{k}"),
        }
    }
}

pub fn mode_tag(mode: DecodeMode) -> String {
    match mode {
        DecodeMode::Baseline => "baseline".into(),
        DecodeMode::Soft { rank } => format!("rank{rank}"),
    }
}

/// Train/test corpora plus the optional lexicon.
pub struct LoadedData {
    pub train: Corpus,
    pub test: Corpus,
    /// False when no held-out set is configured and scoring is in-sample.
    pub held_out: bool,
    pub lexicon: Option<PronunciationDictionary>,
}

pub fn load_data(config: &ExperimentConfig) -> Result<LoadedData> {
    let corpus = load_manifest(&config.data.corpus)?;
    let (train, test, held_out) = match (&config.data.test_corpus, config.data.train_per_speaker) {
        (Some(test_path), _) => {
            let test = load_manifest(test_path)?;
            if test.phoneme_set != corpus.phoneme_set {
                return Err(Error::Pipeline(
                    "train and test corpora use different phoneme sets".into(),
                ));
            }
            (corpus, test, true)
        }
        (None, Some(n)) => {
            let (train, test) = corpus.split_per_speaker(n);
            (train, test, true)
        }
        (None, None) => (corpus.clone(), corpus, false),
    };
    let lexicon = match &config.data.lexicon {
        Some(path) => Some(load_lexicon(path, &train.phoneme_set)?),
        None => None,
    };
    Ok(LoadedData {
        train,
        test,
        held_out,
        lexicon,
    })
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn provenance_line(config: &ExperimentConfig) -> String {
    format!(
        "# config={:016x} seed={}\n",
        config.config_hash(),
        config.seed
    )
}

#[derive(Debug, Serialize, Deserialize)]
struct FeatureModelFile {
    config_hash: String,
    seed: u64,
    model: FeatureModel,
}

#[derive(Debug, Serialize, Deserialize)]
struct HmmFile {
    config_hash: String,
    seed: u64,
    #[serde(flatten)]
    model: HmmModel,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrackFile {
    config_hash: String,
    seed: u64,
    #[serde(flatten)]
    track: DecodedTrack,
}

fn hash_hex(config: &ExperimentConfig) -> String {
    format!("{:016x}", config.config_hash())
}

fn save_hmm_file(path: &Path, model: &HmmModel, config: &ExperimentConfig) -> Result<()> {
    let file = HmmFile {
        config_hash: hash_hex(config),
        seed: config.seed,
        model: model.clone(),
    };
    write_text(
        path,
        &serde_json::to_string_pretty(&file).expect("hmm serialization cannot fail"),
    )
}

fn load_hmm_file(path: &Path) -> Result<HmmModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: HmmFile = serde_json::from_str(&text).map_err(|e| Error::Hmm(e.to_string()))?;
    file.model.validate()?;
    Ok(file.model)
}

/// Generate the synthetic corpus configured under `[synthetic]` and write it
/// as manifest + frames under `out_dir`.
pub fn cmd_synth(config: &ExperimentConfig, out_dir: &Path) -> Result<usize> {
    let spec = config
        .synthetic
        .as_ref()
        .ok_or_else(|| Error::Config("no [synthetic] section in config".into()))?;
    let corpus = generate_synthetic_corpus(spec)?;
    ensure_dir(out_dir)?;
    save_corpus(&corpus, out_dir)?;
    Ok(corpus.utterances.len())
}

fn utterance_content_hash(
    config_hash: u64,
    model_fingerprint: u64,
    split: &str,
    utt: &crate::corpus::Utterance,
) -> u64 {
    let mut h = fnv1a64(&config_hash.to_le_bytes());
    h = fnv1a64_extend(h, &model_fingerprint.to_le_bytes());
    h = fnv1a64_extend(h, split.as_bytes());
    h = fnv1a64_extend(h, utt.id.as_bytes());
    for frame in &utt.frames {
        for &v in frame.values() {
            h = fnv1a64_extend(h, &v.to_le_bytes());
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExtractReport {
    pub computed: usize,
    pub skipped: usize,
}

fn feature_model_path(config: &ExperimentConfig) -> PathBuf {
    config.output.join("features").join("model.json")
}

/// Fit (or reuse) the feature recipe on the train split and fill the
/// per-utterance caches for both splits. Up-to-date caches are skipped by
/// content hash; corrupt ones are recomputed.
pub fn cmd_extract(config: &ExperimentConfig) -> Result<ExtractReport> {
    let data = load_data(config)?;
    let features_dir = config.output.join("features");
    ensure_dir(&features_dir)?;

    let model = load_or_fit_feature_model(config, &data.train)?;
    let fingerprint = model.fingerprint();
    let config_hash = config.config_hash();

    let mut report = ExtractReport::default();
    let mut jobs: Vec<(&str, &crate::corpus::Utterance)> = Vec::new();
    for utt in &data.train.utterances {
        jobs.push(("train", utt));
    }
    if data.held_out {
        for utt in &data.test.utterances {
            jobs.push(("test", utt));
        }
    }

    let outcomes: Vec<bool> = jobs
        .par_iter()
        .map(|(split, utt)| -> Result<bool> {
            let path = features_dir.join(format!("{split}_{}.vsfc", utt.id));
            let expected = utterance_content_hash(config_hash, fingerprint, split, utt);
            if let Ok(cache) = read_cache(&path) {
                if cache.content_hash == expected {
                    return Ok(false);
                }
            }
            let vectors = model.extract(utt)?;
            write_cache(&path, expected, &model.layout, &vectors)?;
            Ok(true)
        })
        .collect::<Result<_>>()?;
    for computed in outcomes {
        if computed {
            report.computed += 1;
        } else {
            report.skipped += 1;
        }
    }
    Ok(report)
}

fn load_or_fit_feature_model(config: &ExperimentConfig, train: &Corpus) -> Result<FeatureModel> {
    let path = feature_model_path(config);
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(file) = serde_json::from_str::<FeatureModelFile>(&text) {
            if file.config_hash == hash_hex(config) && file.model.config == config.features {
                return Ok(file.model);
            }
        }
    }
    let model = fit_features(&train.utterances, &config.features, config.seed)?;
    ensure_dir(path.parent().unwrap())?;
    let file = FeatureModelFile {
        config_hash: hash_hex(config),
        seed: config.seed,
        model: model.clone(),
    };
    write_text(
        &path,
        &serde_json::to_string_pretty(&file).expect("model serialization cannot fail"),
    )?;
    Ok(file.model)
}

/// Cached features for one split, falling back to extraction when a cache
/// file is missing or stale.
fn features_for(
    config: &ExperimentConfig,
    model: &FeatureModel,
    split: &str,
    corpus: &Corpus,
) -> Result<Vec<Vec<FeatureVector>>> {
    let features_dir = config.output.join("features");
    let fingerprint = model.fingerprint();
    let config_hash = config.config_hash();
    corpus
        .utterances
        .par_iter()
        .map(|utt| {
            let path = features_dir.join(format!("{split}_{}.vsfc", utt.id));
            let expected = utterance_content_hash(config_hash, fingerprint, split, utt);
            if let Ok(cache) = read_cache(&path) {
                if cache.content_hash == expected {
                    return Ok(cache.vectors);
                }
            }
            model.extract(utt)
        })
        .collect()
}

fn viseme_data_from_features(
    corpus: &Corpus,
    features: &[Vec<FeatureVector>],
    vocab: &VisemeVocabulary,
) -> TrainingData {
    let mut flat = Vec::new();
    let mut labels = Vec::new();
    let mut spans = Vec::new();
    for (utt, feats) in corpus.utterances.iter().zip(features) {
        let start = flat.len();
        flat.extend(feats.iter().map(|f| f.values.clone()));
        labels.extend(vocab.map_sequence(&utt.frame_labels));
        spans.push((start, flat.len() - start));
    }
    TrainingData {
        features: flat,
        labels,
        class_count: vocab.len(),
        utterance_spans: spans,
    }
}

fn models_dir(config: &ExperimentConfig, choice: VocabChoice) -> PathBuf {
    config.output.join("models").join(choice.tag())
}

fn save_model_set(config: &ExperimentConfig, dir: &Path, models: &ModelSet) -> Result<()> {
    ensure_dir(dir)?;
    model_io::save_ensemble(
        &dir.join("ensemble.vsem"),
        &models.viseme_ensemble,
        config.config_hash(),
        config.seed,
    )?;
    save_hmm_file(&dir.join("viseme_hmm.json"), &models.viseme_hmm, config)?;
    save_hmm_file(
        &dir.join("phoneme_decoder.json"),
        &models.phoneme_decoder,
        config,
    )?;
    Ok(())
}

fn load_model_set(
    config: &ExperimentConfig,
    choice: VocabChoice,
    train: &Corpus,
) -> Result<ModelSet> {
    let dir = models_dir(config, choice);
    let vocab = match choice {
        VocabChoice::Identity => VisemeVocabulary::identity(&train.phoneme_set),
        VocabChoice::Length(k) => load_vocabulary(
            config.output.join("vocab").join(format!("len_{k}.json")),
            &train.phoneme_set,
        )?,
    };
    let stored = model_io::load_ensemble(&dir.join("ensemble.vsem"))?;
    let viseme_hmm = load_hmm_file(&dir.join("viseme_hmm.json"))?;
    let phoneme_decoder = load_hmm_file(&dir.join("phoneme_decoder.json"))?;
    let model_path = feature_model_path(config);
    let text = fs::read_to_string(&model_path).map_err(|e| Error::io(&model_path, e))?;
    let file: FeatureModelFile =
        serde_json::from_str(&text).map_err(|e| Error::Pipeline(e.to_string()))?;
    Ok(ModelSet {
        vocab,
        feature_model: file.model,
        viseme_ensemble: stored.ensemble,
        viseme_hmm,
        phoneme_decoder,
    })
}

/// Train the identity-vocabulary models (phoneme classes), optionally with
/// k-fold cross-validation models alongside.
pub fn cmd_train(config: &ExperimentConfig, folds: Option<usize>) -> Result<()> {
    let data = load_data(config)?;
    let model = load_or_fit_feature_model(config, &data.train)?;
    let train_features = features_for(config, &model, "train", &data.train)?;
    let vocab = VisemeVocabulary::identity(&data.train.phoneme_set);
    let training = viseme_data_from_features(&data.train, &train_features, &vocab);
    let ensemble = bagging_train(&training, &config.classifier, mix_seed(config.seed, 0x656e73))?;
    let models = assemble_models(&data.train, model, vocab, ensemble, 1e-6)?;
    save_model_set(config, &models_dir(config, VocabChoice::Identity), &models)?;

    if let Some(k) = folds {
        if k < 2 {
            return Err(Error::Pipeline("--folds needs at least 2 folds".into()));
        }
        let fold_sets = data.train.folds(k);
        let fold_ids: Vec<Vec<String>> = fold_sets
            .iter()
            .map(|f| {
                f.iter()
                    .map(|&i| data.train.utterances[i].id.clone())
                    .collect()
            })
            .collect();
        write_text(
            &config.output.join("models").join("folds.json"),
            &serde_json::to_string_pretty(&fold_ids).expect("fold serialization cannot fail"),
        )?;
        for (fi, held) in fold_sets.iter().enumerate() {
            let held_set: std::collections::HashSet<usize> = held.iter().copied().collect();
            let rest: Vec<usize> = (0..data.train.utterances.len())
                .filter(|i| !held_set.contains(i))
                .collect();
            let fold_train = data.train.subset(&rest);
            // Features are refit per fold so no held-out statistics leak in.
            let fold_models = crate::pipeline::experiment::train_models(
                &fold_train,
                VisemeVocabulary::identity(&fold_train.phoneme_set),
                &config.features,
                &config.classifier,
                mix_seed(config.seed, 0xf01d + fi as u64),
            )?;
            save_model_set(
                config,
                &config.output.join("models").join(format!("fold_{fi}")),
                &fold_models,
            )?;
        }
    }
    Ok(())
}

/// Build one vocabulary of the requested length and train its decode models.
pub fn cmd_build_vocab(config: &ExperimentConfig, target_len: usize) -> Result<PathBuf> {
    let data = load_data(config)?;
    let build_config = VocabularyBuildConfig {
        features: config.features.clone(),
        classifier: config.classifier.clone(),
        target_len,
        retrain_each_step: config.decode.retrain_each_step,
        seed: config.seed,
    };
    let built = build_vocabulary(&data.train, &build_config)?;
    let vocab_dir = config.output.join("vocab");
    ensure_dir(&vocab_dir)?;
    let achieved = built.vocabulary.len();
    let path = vocab_dir.join(format!("len_{achieved}.json"));
    save_vocabulary(&path, &built.vocabulary, &data.train.phoneme_set)?;
    if !built.reached_target {
        eprintln!(
            "target length {target_len} unreachable under merge constraints; stopped at {achieved}"
        );
    }
    let models = assemble_models(
        &data.train,
        built.feature_model,
        built.vocabulary,
        built.viseme_ensemble,
        1e-6,
    )?;
    save_model_set(
        config,
        &models_dir(config, VocabChoice::Length(achieved)),
        &models,
    )?;
    Ok(path)
}

/// Build vocabularies for every requested length (replaying the shared merge
/// sequence), decode and score each, and write the sweep CSV.
pub fn cmd_sweep_vocab(config: &ExperimentConfig, lengths: &[usize]) -> Result<PathBuf> {
    if lengths.is_empty() {
        return Err(Error::Pipeline("no vocabulary lengths requested".into()));
    }
    let data = load_data(config)?;
    let c = data.train.phoneme_set.len();
    let min_len = *lengths.iter().min().unwrap();
    let build_config = VocabularyBuildConfig {
        features: config.features.clone(),
        classifier: config.classifier.clone(),
        target_len: min_len.max(2),
        retrain_each_step: config.decode.retrain_each_step,
        seed: config.seed,
    };
    let built = build_vocabulary(&data.train, &build_config)?;
    let vocab_dir = config.output.join("vocab");
    ensure_dir(&vocab_dir)?;

    let mode = default_mode(config, c);
    let mut rows = Vec::new();
    for &target in lengths {
        let vocab = if target >= c {
            VisemeVocabulary::identity(&data.train.phoneme_set)
        } else {
            let n_merges = c.saturating_sub(target.max(built.vocabulary.len()));
            VisemeVocabulary::replay(
                &data.train.phoneme_set,
                &built.vocabulary.merge_history[..n_merges],
            )?
        };
        let achieved = vocab.len();
        save_vocabulary(
            vocab_dir.join(format!("len_{achieved}.json")),
            &vocab,
            &data.train.phoneme_set,
        )?;
        let models = crate::pipeline::experiment::train_models(
            &data.train,
            vocab.clone(),
            &config.features,
            &config.classifier,
            config.seed,
        )?;
        save_model_set(
            config,
            &models_dir(config, VocabChoice::Length(achieved)),
            &models,
        )?;
        let vocab_mode = match mode {
            DecodeMode::Soft { rank } => DecodeMode::Soft {
                rank: rank.min(achieved),
            },
            m => m,
        };
        let tracks = decode_corpus(
            &models,
            &data.test,
            vocab_mode,
            data.lexicon.as_ref(),
            config.decode.word_penalty,
        )?;
        let summary = evaluate_tracks(
            &data.test,
            &models.vocab,
            &tracks,
            data.lexicon.is_some() && data.test.utterances.iter().any(|u| !u.words.is_empty()),
        )?;
        rows.push(SweepRow {
            target_len: target,
            achieved_len: achieved,
            viseme_token_accuracy: summary.viseme_token_accuracy,
            phoneme_token_accuracy: summary.phoneme_token_accuracy,
            viseme_frame_accuracy: summary.viseme_frame_accuracy,
            phoneme_frame_accuracy: summary.phoneme_frame_accuracy,
            word_accuracy: summary.word_accuracy,
        });
    }
    let reports_dir = config.output.join("reports");
    ensure_dir(&reports_dir)?;
    let path = reports_dir.join("vocab_sweep.csv");
    write_text(
        &path,
        &format!("{}{}", provenance_line(config), report::sweep_csv(&rows)),
    )?;
    Ok(path)
}

fn default_mode(config: &ExperimentConfig, class_count: usize) -> DecodeMode {
    if config.decode.baseline {
        DecodeMode::Baseline
    } else {
        let rank = if config.decode.rank == 0 {
            class_count
        } else {
            config.decode.rank.min(class_count)
        };
        DecodeMode::Soft { rank }
    }
}

/// Decode the held-out corpus with the models for the chosen vocabulary and
/// write per-utterance label tracks.
pub fn cmd_decode(
    config: &ExperimentConfig,
    choice: VocabChoice,
    mode_override: Option<DecodeMode>,
) -> Result<PathBuf> {
    let data = load_data(config)?;
    let models = load_model_set(config, choice, &data.train)?;
    let mode = mode_override.unwrap_or_else(|| default_mode(config, models.vocab.len()));
    let out_dir = config
        .output
        .join("decode")
        .join(format!("{}_{}", choice.tag(), mode_tag(mode)));
    ensure_dir(&out_dir)?;

    let test_features = features_for(config, &models.feature_model, "test", &data.test)?;
    let silence = data.test.phoneme_set.silence_index();
    let tracks: Vec<DecodedTrack> = data
        .test
        .utterances
        .par_iter()
        .zip(&test_features)
        .map(|(utt, feats)| {
            crate::pipeline::experiment::decode_features(
                &models,
                &utt.id,
                feats,
                mode,
                data.lexicon.as_ref(),
                silence,
                config.decode.word_penalty,
            )
        })
        .collect::<Result<_>>()?;
    for track in &tracks {
        let file = TrackFile {
            config_hash: hash_hex(config),
            seed: config.seed,
            track: track.clone(),
        };
        write_text(
            &out_dir.join(format!("{}.json", track.id)),
            &serde_json::to_string_pretty(&file).expect("track serialization cannot fail"),
        )?;
    }
    Ok(out_dir)
}

fn read_tracks(dir: &Path, corpus: &Corpus) -> Result<Vec<DecodedTrack>> {
    corpus
        .utterances
        .iter()
        .map(|utt| {
            let path = dir.join(format!("{}.json", utt.id));
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let file: TrackFile =
                serde_json::from_str(&text).map_err(|e| Error::Pipeline(e.to_string()))?;
            Ok(file.track)
        })
        .collect()
}

/// Score previously decoded tracks: summary CSV plus the per-class report.
pub fn cmd_evaluate(
    config: &ExperimentConfig,
    choice: VocabChoice,
    mode_override: Option<DecodeMode>,
) -> Result<EvalSummary> {
    let data = load_data(config)?;
    let models = load_model_set(config, choice, &data.train)?;
    let mode = mode_override.unwrap_or_else(|| default_mode(config, models.vocab.len()));
    let decode_dir = config
        .output
        .join("decode")
        .join(format!("{}_{}", choice.tag(), mode_tag(mode)));
    let tracks = read_tracks(&decode_dir, &data.test)?;
    let score_words =
        data.lexicon.is_some() && data.test.utterances.iter().any(|u| !u.words.is_empty());
    let summary = evaluate_tracks(&data.test, &models.vocab, &tracks, score_words)?;

    let reports_dir = config.output.join("reports");
    ensure_dir(&reports_dir)?;
    let tag = format!("{}_{}", choice.tag(), mode_tag(mode));
    let row = SweepRow {
        target_len: models.vocab.len(),
        achieved_len: models.vocab.len(),
        viseme_token_accuracy: summary.viseme_token_accuracy,
        phoneme_token_accuracy: summary.phoneme_token_accuracy,
        viseme_frame_accuracy: summary.viseme_frame_accuracy,
        phoneme_frame_accuracy: summary.phoneme_frame_accuracy,
        word_accuracy: summary.word_accuracy,
    };
    write_text(
        &reports_dir.join(format!("evaluation_{tag}.csv")),
        &format!("{}{}", provenance_line(config), report::sweep_csv(&[row])),
    )?;

    let viseme_labels: Vec<String> = models
        .vocab
        .groups()
        .iter()
        .map(|g| {
            g.members
                .iter()
                .map(|&p| data.test.phoneme_set.symbol(p).to_string())
                .collect::<Vec<_>>()
                .join("+")
        })
        .collect();
    let class_report = precision_recall(&summary.viseme_confusion);
    write_text(
        &reports_dir.join(format!("class_report_{tag}.csv")),
        &format!(
            "{}{}",
            provenance_line(config),
            report::class_report_csv(&viseme_labels, &class_report)
        ),
    )?;
    Ok(summary)
}

/// Decode the corpus once per rank (plus the baseline) and write the rank
/// sweep CSV.
pub fn cmd_rank_sweep(config: &ExperimentConfig, choice: VocabChoice) -> Result<PathBuf> {
    let data = load_data(config)?;
    let models = load_model_set(config, choice, &data.train)?;
    let score_words =
        data.lexicon.is_some() && data.test.utterances.iter().any(|u| !u.words.is_empty());
    let mut rows = Vec::new();
    let mut modes = vec![(String::from("baseline"), DecodeMode::Baseline)];
    for &rank in &config.decode.ranks {
        let r = rank.clamp(1, models.vocab.len());
        modes.push((r.to_string(), DecodeMode::Soft { rank: r }));
    }
    for (label, mode) in modes {
        let tracks = decode_corpus(
            &models,
            &data.test,
            mode,
            data.lexicon.as_ref(),
            config.decode.word_penalty,
        )?;
        let summary = evaluate_tracks(&data.test, &models.vocab, &tracks, score_words)?;
        rows.push(RankRow {
            mode: label,
            viseme_token_accuracy: summary.viseme_token_accuracy,
            phoneme_token_accuracy: summary.phoneme_token_accuracy,
            mean_log_prob: summary.mean_log_prob,
        });
    }
    let reports_dir = config.output.join("reports");
    ensure_dir(&reports_dir)?;
    let path = reports_dir.join(format!("rank_sweep_{}.csv", choice.tag()));
    write_text(
        &path,
        &format!("{}{}", provenance_line(config), report::rank_csv(&rows)),
    )?;
    Ok(path)
}

/// Cross-validated feature comparison: per fold, decode the held-out fold
/// with the fold's models; pooled accuracies per feature set go to one CSV.
pub fn cmd_feature_comparison(config: &ExperimentConfig, folds: usize) -> Result<PathBuf> {
    let data = load_data(config)?;
    let fold_sets = data.train.folds(folds);
    let mut rows = Vec::new();
    let stream_names: Vec<&str> = config.features.streams.iter().map(|s| s.name()).collect();
    let name = stream_names.join("+");
    let vocab = VisemeVocabulary::identity(&data.train.phoneme_set);
    let mut pooled_tracks: Vec<DecodedTrack> = Vec::new();
    let mut pooled_utts = Vec::new();
    for (fi, held) in fold_sets.iter().enumerate() {
        let held_set: std::collections::HashSet<usize> = held.iter().copied().collect();
        let rest: Vec<usize> = (0..data.train.utterances.len())
            .filter(|i| !held_set.contains(i))
            .collect();
        let fold_train = data.train.subset(&rest);
        let fold_test = data.train.subset(held);
        let models = crate::pipeline::experiment::train_models(
            &fold_train,
            vocab.clone(),
            &config.features,
            &config.classifier,
            mix_seed(config.seed, 0xf01d + fi as u64),
        )?;
        let mode = default_mode(config, models.vocab.len());
        let tracks = decode_corpus(
            &models,
            &fold_test,
            mode,
            data.lexicon.as_ref(),
            config.decode.word_penalty,
        )?;
        pooled_utts.extend(fold_test.utterances);
        pooled_tracks.extend(tracks);
    }
    let pooled = Corpus {
        phoneme_set: data.train.phoneme_set.clone(),
        utterances: pooled_utts,
    };
    let summary = evaluate_tracks(&pooled, &vocab, &pooled_tracks, false)?;
    rows.push(FeatureRow {
        name,
        viseme_token_accuracy: summary.viseme_token_accuracy,
        phoneme_token_accuracy: summary.phoneme_token_accuracy,
    });
    let reports_dir = config.output.join("reports");
    ensure_dir(&reports_dir)?;
    let path = reports_dir.join("feature_comparison.csv");
    write_text(
        &path,
        &format!("{}{}", provenance_line(config), report::feature_csv(&rows)),
    )?;
    Ok(path)
}

/// `model inspect`: human-readable per-class statistics of a stored ensemble.
pub fn cmd_model_inspect(model_path: &Path, manifest: Option<&Path>) -> Result<String> {
    let stored = model_io::load_ensemble(model_path)?;
    let names = match manifest {
        Some(m) => {
            let corpus = load_manifest(m)?;
            Some(
                corpus
                    .phoneme_set
                    .classes()
                    .iter()
                    .map(|c| c.symbol.clone())
                    .collect::<Vec<_>>(),
            )
        }
        None => None,
    };
    let mut out = format!(
        "model: {} (config {:016x}, seed {})\n",
        model_path.display(),
        stored.config_hash,
        stored.seed
    );
    out.push_str(&model_io::inspect_ensemble(
        &stored.ensemble,
        names.as_deref(),
    ));
    Ok(out)
}

/// Directory `cmd_decode` writes tracks into for a given vocabulary and mode.
pub fn decode_dir(config: &ExperimentConfig, choice: VocabChoice, mode: DecodeMode) -> PathBuf {
    config
        .output
        .join("decode")
        .join(format!("{}_{}", choice.tag(), mode_tag(mode)))
}
