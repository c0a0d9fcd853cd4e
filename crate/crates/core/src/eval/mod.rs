//! Scoring: edit-distance alignment, token accuracy, per-class precision
//! and recall, and lexicon-based word decoding.

pub mod report;

use crate::corpus::PronunciationDictionary;
use crate::error::{Error, Result};
use crate::vocabulary::ConfusionMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignOp {
    Hit,
    Substitution,
    Deletion,
    Insertion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub hits: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub ref_len: usize,
    pub ops: Vec<AlignOp>,
}

impl AlignmentResult {
    /// Token accuracy (H - I) / Nref; can be negative.
    pub fn accuracy(&self) -> Result<f64> {
        if self.ref_len == 0 {
            return Err(Error::Eval("accuracy of an empty reference".into()));
        }
        Ok((self.hits as f64 - self.insertions as f64) / self.ref_len as f64)
    }
}

/// Minimal Levenshtein alignment with unit costs. Cost ties during
/// backtracking prefer hits, then substitutions, then deletions.
pub fn align<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> AlignmentResult {
    let n = reference.len();
    let m = hypothesis.len();
    let mut dist = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in dist.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        dist[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub_cost = usize::from(reference[i - 1] != hypothesis[j - 1]);
            dist[i][j] = (dist[i - 1][j - 1] + sub_cost)
                .min(dist[i - 1][j] + 1)
                .min(dist[i][j - 1] + 1);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let sub_cost = usize::from(reference[i - 1] != hypothesis[j - 1]);
            if dist[i][j] == dist[i - 1][j - 1] + sub_cost {
                ops.push(if sub_cost == 0 {
                    AlignOp::Hit
                } else {
                    AlignOp::Substitution
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dist[i][j] == dist[i - 1][j] + 1 {
            ops.push(AlignOp::Deletion);
            i -= 1;
        } else {
            ops.push(AlignOp::Insertion);
            j -= 1;
        }
    }
    ops.reverse();

    let mut result = AlignmentResult {
        hits: 0,
        substitutions: 0,
        deletions: 0,
        insertions: 0,
        ref_len: n,
        ops: Vec::new(),
    };
    for op in &ops {
        match op {
            AlignOp::Hit => result.hits += 1,
            AlignOp::Substitution => result.substitutions += 1,
            AlignOp::Deletion => result.deletions += 1,
            AlignOp::Insertion => result.insertions += 1,
        }
    }
    result.ops = ops;
    result
}

/// Collapse consecutive duplicate frame labels into one token each.
pub fn collapse_runs<T: PartialEq + Copy>(frames: &[T]) -> Vec<T> {
    let mut out = Vec::new();
    for &v in frames {
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    out
}

/// Fraction of frames labeled correctly (no alignment).
pub fn frame_accuracy(reference: &[usize], hypothesis: &[usize]) -> Result<f64> {
    if reference.is_empty() || reference.len() != hypothesis.len() {
        return Err(Error::Eval(format!(
            "frame accuracy needs equal non-empty tracks, got {} vs {}",
            reference.len(),
            hypothesis.len()
        )));
    }
    let hits = reference
        .iter()
        .zip(hypothesis)
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / reference.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    /// Undefined (zero predicted count) reported as None.
    pub precision: Vec<Option<f64>>,
    /// Undefined (zero support) reported as None.
    pub recall: Vec<Option<f64>>,
    pub support: Vec<u64>,
    pub false_positives: Vec<u64>,
    pub false_negatives: Vec<u64>,
}

/// Per-class precision and recall from a confusion matrix.
pub fn precision_recall(cm: &ConfusionMatrix) -> ClassReport {
    let c = cm.class_count;
    let mut report = ClassReport {
        precision: Vec::with_capacity(c),
        recall: Vec::with_capacity(c),
        support: Vec::with_capacity(c),
        false_positives: Vec::with_capacity(c),
        false_negatives: Vec::with_capacity(c),
    };
    for k in 0..c {
        let row = cm.row_sum(k);
        let col = cm.col_sum(k);
        let diag = cm.get(k, k);
        report.support.push(row);
        report.false_positives.push(col - diag);
        report.false_negatives.push(row - diag);
        report
            .precision
            .push((col > 0).then(|| diag as f64 / col as f64));
        report
            .recall
            .push((row > 0).then(|| diag as f64 / row as f64));
    }
    report
}

/// Dynamic-programming segmentation of a phoneme token sequence into lexicon
/// words: minimizes total edit distance to the concatenated pronunciations
/// plus `word_penalty` per word. Silence tokens are free optional word
/// boundaries. Ties keep the incumbent (silence skip first, then entries in
/// sorted word order, shorter spans first).
pub fn word_decode(
    tokens: &[usize],
    lexicon: &PronunciationDictionary,
    silence: usize,
    word_penalty: f64,
) -> Result<Vec<String>> {
    if lexicon.is_empty() {
        return Err(Error::Eval("empty lexicon".into()));
    }
    let entries: Vec<(&str, &[usize])> = lexicon.iter_entries().collect();
    let n = tokens.len();
    let inf = f64::INFINITY;

    #[derive(Clone)]
    enum Step {
        Start,
        SkipSilence,
        Word { word: usize, from: usize },
    }

    let mut cost = vec![inf; n + 1];
    let mut step: Vec<Step> = vec![Step::Start; n + 1];
    cost[0] = 0.0;
    for i in 1..=n {
        if tokens[i - 1] == silence && cost[i - 1] < cost[i] {
            cost[i] = cost[i - 1];
            step[i] = Step::SkipSilence;
        }
        for (w, &(_, pron)) in entries.iter().enumerate() {
            // Spans from short to long; edit distance >= |span - |pron||, so
            // once that bound alone rules a longer span out it rules out all
            // longer ones (costs are non-negative).
            for j in (0..i).rev() {
                let span = i - j;
                let lower_bound = span.abs_diff(pron.len()) as f64;
                if span > pron.len() && lower_bound + word_penalty >= cost[i] {
                    break;
                }
                if cost[j] == inf || cost[j] + lower_bound + word_penalty >= cost[i] {
                    continue;
                }
                let ed = edit_distance(&tokens[j..i], pron);
                let total = cost[j] + ed as f64 + word_penalty;
                if total < cost[i] {
                    cost[i] = total;
                    step[i] = Step::Word { word: w, from: j };
                }
            }
        }
    }

    let mut words_rev = Vec::new();
    let mut i = n;
    loop {
        match &step[i] {
            Step::Start => break,
            Step::SkipSilence => i -= 1,
            Step::Word { word, from } => {
                words_rev.push(entries[*word].0.to_string());
                i = *from;
            }
        }
        if i == 0 {
            break;
        }
    }
    words_rev.reverse();
    Ok(words_rev)
}

fn edit_distance(a: &[usize], b: &[usize]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0usize; b.len() + 1];
    for (i, &av) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, &bv) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(av != bv);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}
