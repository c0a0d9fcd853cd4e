//! Automatic viseme vocabulary construction: iteratively merge the
//! most-confused class pair, never mixing vowels with consonants and never
//! touching silence, until the requested vocabulary length is reached.

mod io;

pub use io::{load_vocabulary, save_vocabulary, spanish_20_fixture, vocabulary_from_json};

use serde::{Deserialize, Serialize};

use crate::classifier::{bagging_train, ClassifierConfig, LdaEnsemble, TrainingData};
use crate::corpus::{Corpus, PhonemeKind, PhonemeSet};
use crate::error::{Error, Result};
use crate::features::{fit_features, FeatureConfig, FeatureModel};
use crate::util::mix_seed;

/// Row = ground truth, column = predicted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_count: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(class_count: usize) -> Self {
        ConfusionMatrix {
            class_count,
            counts: vec![0; class_count * class_count],
        }
    }

    pub fn from_labels(truth: &[usize], predicted: &[usize], class_count: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Vocabulary(format!(
                "label stream lengths differ: {} vs {}",
                truth.len(),
                predicted.len()
            )));
        }
        let mut cm = ConfusionMatrix::zeros(class_count);
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= class_count || p >= class_count {
                return Err(Error::Vocabulary(format!(
                    "label out of range: truth {t}, predicted {p}, classes {class_count}"
                )));
            }
            cm.counts[t * class_count + p] += 1;
        }
        Ok(cm)
    }

    #[inline]
    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.class_count + predicted]
    }

    pub fn add(&mut self, truth: usize, predicted: usize, n: u64) {
        self.counts[truth * self.class_count + predicted] += n;
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        self.counts[truth * self.class_count..(truth + 1) * self.class_count]
            .iter()
            .sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        (0..self.class_count).map(|t| self.get(t, predicted)).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Symmetric row-normalized off-diagonal confusion between two classes.
    /// Rows with zero support contribute nothing.
    pub fn ambiguity(&self, i: usize, j: usize) -> f64 {
        assert!(i != j, "ambiguity of a class with itself");
        let mut score = 0.0;
        let ri = self.row_sum(i);
        if ri > 0 {
            score += self.get(i, j) as f64 / ri as f64;
        }
        let rj = self.row_sum(j);
        if rj > 0 {
            score += self.get(j, i) as f64 / rj as f64;
        }
        score
    }

    /// Collapse classes into vocabulary groups: group counts are sums of the
    /// member rows and columns.
    pub fn collapse(&self, vocab: &VisemeVocabulary) -> Result<ConfusionMatrix> {
        if vocab.phoneme_count() != self.class_count {
            return Err(Error::Vocabulary(format!(
                "vocabulary covers {} phonemes, matrix has {}",
                vocab.phoneme_count(),
                self.class_count
            )));
        }
        let mut out = ConfusionMatrix::zeros(vocab.len());
        for t in 0..self.class_count {
            let gt = vocab.group_of(t);
            for p in 0..self.class_count {
                let n = self.get(t, p);
                if n > 0 {
                    out.add(gt, vocab.group_of(p), n);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisemeGroup {
    /// Phoneme-class indices, ascending.
    pub members: Vec<usize>,
    pub kind: PhonemeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeRecord {
    pub step: usize,
    /// Smallest phoneme index of each merged group at merge time.
    pub pair: (usize, usize),
    pub ambiguity: f64,
}

/// A partition of the phoneme inventory into viseme groups. Groups are
/// ordered by their smallest member, so group indices are deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisemeVocabulary {
    groups: Vec<VisemeGroup>,
    phoneme_count: usize,
    pub merge_history: Vec<MergeRecord>,
}

impl VisemeVocabulary {
    /// One singleton group per phoneme.
    pub fn identity(phoneme_set: &PhonemeSet) -> Self {
        let groups = (0..phoneme_set.len())
            .map(|i| VisemeGroup {
                members: vec![i],
                kind: phoneme_set.kind(i),
            })
            .collect();
        VisemeVocabulary {
            groups,
            phoneme_count: phoneme_set.len(),
            merge_history: Vec::new(),
        }
    }

    pub fn from_groups(groups: Vec<VisemeGroup>, phoneme_count: usize) -> Result<Self> {
        let vocab = VisemeVocabulary {
            groups,
            phoneme_count,
            merge_history: Vec::new(),
        };
        vocab.validate()?;
        Ok(vocab)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.phoneme_count];
        for g in &self.groups {
            if g.members.is_empty() {
                return Err(Error::Vocabulary("empty viseme group".into()));
            }
            if g.members.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Vocabulary("group members not ascending".into()));
            }
            for &m in &g.members {
                if m >= self.phoneme_count {
                    return Err(Error::Vocabulary(format!("member {m} out of range")));
                }
                if seen[m] {
                    return Err(Error::Vocabulary(format!("phoneme {m} in two groups")));
                }
                seen[m] = true;
            }
            if g.kind == PhonemeKind::Silence && g.members.len() != 1 {
                return Err(Error::Vocabulary("silence group must stay singleton".into()));
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::Vocabulary("groups do not cover all phonemes".into()));
        }
        for pair in self.groups.windows(2) {
            if pair[0].members[0] >= pair[1].members[0] {
                return Err(Error::Vocabulary("groups not ordered by smallest member".into()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn phoneme_count(&self) -> usize {
        self.phoneme_count
    }

    pub fn groups(&self) -> &[VisemeGroup] {
        &self.groups
    }

    /// Viseme group index of a phoneme class.
    pub fn group_of(&self, phoneme: usize) -> usize {
        self.groups
            .iter()
            .position(|g| g.members.binary_search(&phoneme).is_ok())
            .expect("partition covers all phonemes")
    }

    /// Map a phoneme label sequence to viseme group indices.
    pub fn map_sequence(&self, phonemes: &[usize]) -> Vec<usize> {
        let lut: Vec<usize> = (0..self.phoneme_count).map(|p| self.group_of(p)).collect();
        phonemes.iter().map(|&p| lut[p]).collect()
    }

    /// Group pairs eligible for merging: same kind, neither silence.
    fn eligible_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for i in 0..self.groups.len() {
            if self.groups[i].kind == PhonemeKind::Silence {
                continue;
            }
            for j in i + 1..self.groups.len() {
                if self.groups[j].kind == self.groups[i].kind {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    /// Merge the eligible pair with the highest ambiguity on the
    /// group-collapsed matrix. `cm` is the phoneme-level confusion matrix.
    /// Ties go to the lexicographically smallest group pair.
    pub fn merge_step(&mut self, cm: &ConfusionMatrix) -> Result<(usize, usize)> {
        let collapsed = cm.collapse(self)?;
        let pairs = self.eligible_pairs();
        if pairs.is_empty() {
            return Err(Error::Vocabulary(
                "no eligible pair left to merge (kind/silence constraints)".into(),
            ));
        }
        let mut best = pairs[0];
        let mut best_score = f64::NEG_INFINITY;
        for &(i, j) in &pairs {
            let s = collapsed.ambiguity(i, j);
            if s > best_score {
                best_score = s;
                best = (i, j);
            }
        }
        let (i, j) = best;
        let record = MergeRecord {
            step: self.merge_history.len() + 1,
            pair: (self.groups[i].members[0], self.groups[j].members[0]),
            ambiguity: best_score,
        };
        let removed = self.groups.remove(j);
        self.groups[i].members.extend(removed.members);
        self.groups[i].members.sort_unstable();
        self.merge_history.push(record);
        debug_assert!(self.validate().is_ok());
        Ok((i, j))
    }

    /// Replay a merge history (pairs of phoneme representatives) from an
    /// identity vocabulary.
    pub fn replay(phoneme_set: &PhonemeSet, history: &[MergeRecord]) -> Result<Self> {
        let mut vocab = VisemeVocabulary::identity(phoneme_set);
        for rec in history {
            let gi = vocab.group_of(rec.pair.0);
            let gj = vocab.group_of(rec.pair.1);
            if gi == gj {
                return Err(Error::Vocabulary(
                    "merge history references an already-merged pair".into(),
                ));
            }
            let (a, b) = if gi < gj { (gi, gj) } else { (gj, gi) };
            let removed = vocab.groups.remove(b);
            vocab.groups[a].members.extend(removed.members);
            vocab.groups[a].members.sort_unstable();
            vocab.merge_history.push(rec.clone());
        }
        vocab.validate()?;
        Ok(vocab)
    }
}

/// Everything `build_vocabulary` produces: the vocabulary, the feature
/// recipe, the classifier retrained on the final viseme classes, and whether
/// the requested length was reachable under the merge constraints.
#[derive(Debug, Clone)]
pub struct BuiltVocabulary {
    pub vocabulary: VisemeVocabulary,
    pub feature_model: FeatureModel,
    pub viseme_ensemble: LdaEnsemble,
    pub phoneme_confusion: ConfusionMatrix,
    pub reached_target: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VocabularyBuildConfig {
    pub features: FeatureConfig,
    pub classifier: ClassifierConfig,
    pub target_len: usize,
    /// Retrain the classifier and recompute the confusion matrix after every
    /// merge instead of collapsing the phoneme-level matrix.
    pub retrain_each_step: bool,
    pub seed: u64,
}

impl Default for VocabularyBuildConfig {
    fn default() -> Self {
        VocabularyBuildConfig {
            features: FeatureConfig::default(),
            classifier: ClassifierConfig::default(),
            target_len: 20,
            retrain_each_step: false,
            seed: 0,
        }
    }
}

fn training_data(
    corpus: &Corpus,
    model: &FeatureModel,
    labels: impl Fn(&[usize]) -> Vec<usize>,
    class_count: usize,
) -> Result<TrainingData> {
    let mut features = Vec::new();
    let mut label_vec = Vec::new();
    let mut spans = Vec::new();
    for utt in &corpus.utterances {
        let start = features.len();
        for fv in model.extract(utt)? {
            features.push(fv.values);
        }
        label_vec.extend(labels(&utt.frame_labels));
        spans.push((start, features.len() - start));
    }
    Ok(TrainingData {
        features,
        labels: label_vec,
        class_count,
        utterance_spans: spans,
    })
}

fn train_and_confuse(
    data: &TrainingData,
    config: &ClassifierConfig,
    seed: u64,
) -> Result<(LdaEnsemble, ConfusionMatrix)> {
    let ensemble = bagging_train(data, config, seed)?;
    use rayon::prelude::*;
    let predicted: Vec<usize> = data
        .features
        .par_iter()
        .map(|f| ensemble.classify(f))
        .collect::<Result<_>>()?;
    let cm = ConfusionMatrix::from_labels(&data.labels, &predicted, data.class_count)?;
    Ok((ensemble, cm))
}

/// Build a viseme vocabulary of the requested length from a training corpus:
/// train frame classifiers on phoneme classes once, take the training-set
/// confusion matrix, then greedily merge the most ambiguous eligible pair
/// (collapsing the matrix between merges) until the target length is
/// reached. The classifiers are retrained on the final viseme classes.
pub fn build_vocabulary(corpus: &Corpus, config: &VocabularyBuildConfig) -> Result<BuiltVocabulary> {
    let c = corpus.phoneme_set.len();
    if config.target_len < 2 || config.target_len > c {
        return Err(Error::Vocabulary(format!(
            "target length {} out of range 2..={c}",
            config.target_len
        )));
    }

    let feature_model = fit_features(&corpus.utterances, &config.features, config.seed)?;
    let phoneme_data = training_data(corpus, &feature_model, |l| l.to_vec(), c)?;
    let (_, phoneme_cm) =
        train_and_confuse(&phoneme_data, &config.classifier, mix_seed(config.seed, 0x7261))?;

    let mut vocab = VisemeVocabulary::identity(&corpus.phoneme_set);
    let mut cm = phoneme_cm.clone();
    let mut reached_target = true;
    while vocab.len() > config.target_len {
        let step_result = vocab.merge_step(&cm);
        if step_result.is_err() {
            reached_target = false;
            break;
        }
        if config.retrain_each_step && vocab.len() > config.target_len {
            let viseme_data = training_data(
                corpus,
                &feature_model,
                |l| vocab.map_sequence(l),
                vocab.len(),
            )?;
            let (_, viseme_cm) = train_and_confuse(
                &viseme_data,
                &config.classifier,
                mix_seed(config.seed, 0x7262 + vocab.len() as u64),
            )?;
            // The per-step matrix is already at viseme level; treat its
            // classes as the current "phonemes" by rebasing the vocabulary.
            cm = rebase_to_groups(&viseme_cm, &vocab, &phoneme_cm)?;
        }
    }

    // Retrain once on the final viseme classes.
    let viseme_data = training_data(
        corpus,
        &feature_model,
        |l| vocab.map_sequence(l),
        vocab.len(),
    )?;
    let (viseme_ensemble, _) = train_and_confuse(
        &viseme_data,
        &config.classifier,
        mix_seed(config.seed, 0x7263),
    )?;

    Ok(BuiltVocabulary {
        vocabulary: vocab,
        feature_model,
        viseme_ensemble,
        phoneme_confusion: phoneme_cm,
        reached_target,
    })
}

/// Spread a viseme-level confusion matrix back onto phoneme-level classes so
/// the next merge step (which collapses by the current vocabulary) sees it:
/// every group cell maps onto the representative members, other cells zero.
fn rebase_to_groups(
    viseme_cm: &ConfusionMatrix,
    vocab: &VisemeVocabulary,
    template: &ConfusionMatrix,
) -> Result<ConfusionMatrix> {
    let c = template.class_count;
    let mut out = ConfusionMatrix::zeros(c);
    for gt in 0..vocab.len() {
        let rt = vocab.groups()[gt].members[0];
        for gp in 0..vocab.len() {
            let n = viseme_cm.get(gt, gp);
            if n > 0 {
                out.add(rt, vocab.groups()[gp].members[0], n);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{PhonemeClass, PhonemeKind};

    fn small_set() -> PhonemeSet {
        // sil, a(v), b(v), p(c), q(c)
        PhonemeSet::new(vec![
            PhonemeClass {
                symbol: "sil".into(),
                kind: PhonemeKind::Silence,
            },
            PhonemeClass {
                symbol: "a".into(),
                kind: PhonemeKind::Vowel,
            },
            PhonemeClass {
                symbol: "b".into(),
                kind: PhonemeKind::Vowel,
            },
            PhonemeClass {
                symbol: "p".into(),
                kind: PhonemeKind::Consonant,
            },
            PhonemeClass {
                symbol: "q".into(),
                kind: PhonemeKind::Consonant,
            },
        ])
        .unwrap()
    }

    #[test]
    fn confusion_counts_and_row_sums() {
        let truth = vec![0, 1, 1, 2, 2, 2];
        let pred = vec![0, 1, 2, 2, 2, 1];
        let cm = ConfusionMatrix::from_labels(&truth, &pred, 3).unwrap();
        assert_eq!(cm.get(1, 2), 1);
        assert_eq!(cm.get(2, 1), 1);
        assert_eq!(cm.row_sum(2), 3);
        assert_eq!(cm.total(), 6);
        assert!(ConfusionMatrix::from_labels(&truth, &pred[..5], 3).is_err());
        let single = ConfusionMatrix::from_labels(&[2], &[5], 6).unwrap();
        assert_eq!(single.get(2, 5), 1);
        assert_eq!(single.total(), 1);
    }

    #[test]
    fn diagonal_matrix_has_zero_ambiguity() {
        let truth = vec![0, 1, 2, 0, 1, 2];
        let cm = ConfusionMatrix::from_labels(&truth, &truth, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(cm.ambiguity(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn ambiguity_hand_value() {
        // counts[1][2] = 50 of row 100, counts[2][1] = 30 of row 100 -> 0.8.
        let mut cm = ConfusionMatrix::zeros(3);
        cm.add(1, 2, 50);
        cm.add(1, 1, 50);
        cm.add(2, 1, 30);
        cm.add(2, 2, 70);
        assert!((cm.ambiguity(1, 2) - 0.8).abs() < 1e-12);
        assert_eq!(cm.ambiguity(1, 2), cm.ambiguity(2, 1));
    }

    #[test]
    fn collapse_identity_and_total() {
        let set = small_set();
        let truth = vec![0, 1, 2, 3, 4, 1, 2];
        let pred = vec![0, 2, 1, 4, 3, 1, 2];
        let cm = ConfusionMatrix::from_labels(&truth, &pred, 5).unwrap();
        let identity = VisemeVocabulary::identity(&set);
        let collapsed = cm.collapse(&identity).unwrap();
        assert_eq!(collapsed, cm);

        let mut vocab = VisemeVocabulary::identity(&set);
        vocab.merge_step(&cm).unwrap();
        let collapsed = cm.collapse(&vocab).unwrap();
        assert_eq!(collapsed.total(), cm.total());
    }

    #[test]
    fn merge_respects_kind_constraint() {
        let set = small_set();
        // Heaviest confusion is vowel b <-> consonant p (indices 2, 3):
        // ineligible, so the merger must pick the next pair.
        let mut cm = ConfusionMatrix::zeros(5);
        for i in 0..5 {
            cm.add(i, i, 100);
        }
        cm.add(2, 3, 90);
        cm.add(3, 2, 90);
        cm.add(1, 2, 10);
        cm.add(2, 1, 10);
        let mut vocab = VisemeVocabulary::identity(&set);
        vocab.merge_step(&cm).unwrap();
        // {a, b} merged, not {b, p}.
        assert_eq!(vocab.len(), 4);
        let g = vocab.group_of(1);
        assert_eq!(vocab.groups()[g].members, vec![1, 2]);
        assert_eq!(vocab.merge_history[0].pair, (1, 2));
    }

    #[test]
    fn silence_is_never_merged() {
        let set = small_set();
        let mut cm = ConfusionMatrix::zeros(5);
        for i in 0..5 {
            cm.add(i, i, 10);
        }
        // Massive confusion with silence is ignored.
        cm.add(0, 1, 500);
        cm.add(1, 0, 500);
        let mut vocab = VisemeVocabulary::identity(&set);
        while vocab.merge_step(&cm).is_ok() {}
        // Down to: sil, {a,b}, {p,q}.
        assert_eq!(vocab.len(), 3);
        assert_eq!(vocab.groups()[0].members, vec![0]);
        assert_eq!(vocab.groups()[0].kind, PhonemeKind::Silence);
    }

    #[test]
    fn merge_history_replays_exactly() {
        let set = small_set();
        let mut cm = ConfusionMatrix::zeros(5);
        for i in 0..5 {
            cm.add(i, i, 20);
        }
        cm.add(1, 2, 15);
        cm.add(3, 4, 9);
        cm.add(4, 3, 9);
        let mut vocab = VisemeVocabulary::identity(&set);
        vocab.merge_step(&cm).unwrap();
        vocab.merge_step(&cm).unwrap();
        let replayed = VisemeVocabulary::replay(&set, &vocab.merge_history).unwrap();
        assert_eq!(replayed, vocab);
    }

    #[test]
    fn greedy_matches_exhaustive_single_step_search() {
        // At every step the merged pair must be the exhaustive argmax over
        // eligible pairs of the collapsed matrix.
        let set = small_set();
        let mut cm = ConfusionMatrix::zeros(5);
        let mut v = 7u64;
        for i in 0..5 {
            for j in 0..5 {
                v = v.wrapping_mul(6364136223846793005).wrapping_add(1);
                cm.add(i, j, v % 50 + if i == j { 100 } else { 0 });
            }
        }
        let mut vocab = VisemeVocabulary::identity(&set);
        loop {
            let collapsed = cm.collapse(&vocab).unwrap();
            let mut best: Option<((usize, usize), f64)> = None;
            for i in 0..vocab.len() {
                for j in i + 1..vocab.len() {
                    let gi = &vocab.groups()[i];
                    let gj = &vocab.groups()[j];
                    if gi.kind != gj.kind || gi.kind == PhonemeKind::Silence {
                        continue;
                    }
                    let s = collapsed.ambiguity(i, j);
                    if best.is_none() || s > best.unwrap().1 {
                        best = Some(((i, j), s));
                    }
                }
            }
            let Some((expect, _)) = best else { break };
            let got = vocab.merge_step(&cm).unwrap();
            assert_eq!(got, expect);
        }
        assert_eq!(vocab.len(), 3);
    }

    #[test]
    fn map_sequence_preserves_length_and_groups() {
        let set = small_set();
        let mut cm = ConfusionMatrix::zeros(5);
        for i in 0..5 {
            cm.add(i, i, 5);
        }
        cm.add(1, 2, 50);
        let mut vocab = VisemeVocabulary::identity(&set);
        vocab.merge_step(&cm).unwrap();
        let seq = vec![0, 1, 2, 3, 4, 2, 1];
        let mapped = vocab.map_sequence(&seq);
        assert_eq!(mapped.len(), seq.len());
        assert_eq!(mapped[1], mapped[2]);
        assert_eq!(mapped[1], mapped[6]);
        // Identity vocabulary maps to itself.
        let id = VisemeVocabulary::identity(&set);
        assert_eq!(id.map_sequence(&seq), seq);
    }
}
