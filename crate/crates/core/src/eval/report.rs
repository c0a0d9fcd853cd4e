//! Plot-ready CSV emission. Column order is fixed and floats use a fixed
//! format, so identical inputs produce byte-identical files.

use std::fmt::Write as _;

use crate::eval::ClassReport;

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.6}"))
}

/// One vocabulary length of the sweep (boxplot/bars source data).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub target_len: usize,
    pub achieved_len: usize,
    pub viseme_token_accuracy: f64,
    pub phoneme_token_accuracy: f64,
    pub viseme_frame_accuracy: f64,
    pub phoneme_frame_accuracy: f64,
    pub word_accuracy: Option<f64>,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "target_len,achieved_len,viseme_token_accuracy,phoneme_token_accuracy,viseme_frame_accuracy,phoneme_frame_accuracy,word_accuracy\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{}",
            r.target_len,
            r.achieved_len,
            r.viseme_token_accuracy,
            r.phoneme_token_accuracy,
            r.viseme_frame_accuracy,
            r.phoneme_frame_accuracy,
            fmt_opt(r.word_accuracy),
        );
    }
    out
}

/// One decoding mode of the rank sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RankRow {
    /// "baseline" or the numeric rank.
    pub mode: String,
    pub viseme_token_accuracy: f64,
    pub phoneme_token_accuracy: f64,
    pub mean_log_prob: f64,
}

pub fn rank_csv(rows: &[RankRow]) -> String {
    let mut out =
        String::from("mode,viseme_token_accuracy,phoneme_token_accuracy,mean_log_prob\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6}",
            r.mode, r.viseme_token_accuracy, r.phoneme_token_accuracy, r.mean_log_prob
        );
    }
    out
}

/// One feature configuration of the comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub name: String,
    pub viseme_token_accuracy: f64,
    pub phoneme_token_accuracy: f64,
}

pub fn feature_csv(rows: &[FeatureRow]) -> String {
    let mut out = String::from("features,viseme_token_accuracy,phoneme_token_accuracy\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6}",
            r.name, r.viseme_token_accuracy, r.phoneme_token_accuracy
        );
    }
    out
}

/// Per-class occurrences, errors, precision, recall.
pub fn class_report_csv(labels: &[String], report: &ClassReport) -> String {
    let mut out =
        String::from("class,occurrences,false_positives,false_negatives,precision,recall\n");
    for (k, label) in labels.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            label,
            report.support[k],
            report.false_positives[k],
            report.false_negatives[k],
            fmt_opt(report.precision[k]),
            fmt_opt(report.recall[k]),
        );
    }
    out
}
