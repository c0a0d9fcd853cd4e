//! End-to-end experiment orchestration: configuration, the in-memory
//! experiment core, and the file-based CLI stages.

pub mod config;
pub mod experiment;
pub mod stages;

pub use config::{DataConfig, DecodeConfig, ExperimentConfig};
pub use experiment::{
    assemble_models, decode_corpus, decode_features, decode_utterance, evaluate_tracks,
    train_models, DecodeMode, DecodedTrack, EvalSummary, ModelSet,
};
pub use stages::{
    cmd_build_vocab, cmd_decode, cmd_evaluate, cmd_extract, cmd_feature_comparison,
    cmd_model_inspect, cmd_rank_sweep, cmd_sweep_vocab, cmd_synth, cmd_train, load_data,
    ExtractReport, LoadedData, VocabChoice,
};
