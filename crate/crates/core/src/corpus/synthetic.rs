//! Synthetic corpus generation. Frames are drawn from class-conditional
//! templates built on orthonormal low-frequency DCT atoms plus pixel noise,
//! so the geometry between classes is exact and seed-independent: only the
//! noise and the label sequences vary with the seed. Planted confusable
//! pairs share a template up to a small orthogonal offset.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    Corpus, PhonemeClass, PhonemeKind, PhonemeSet, RoiFrame, Utterance, ROI_HEIGHT, ROI_WIDTH,
    SILENCE_SYMBOL,
};
use crate::error::{Error, Result};
use crate::features::dct;
use crate::util::mix_seed;

/// Pixel noise standard deviation; `class_separation` and `pair_separation`
/// are expressed in units of this sigma.
pub const NOISE_SIGMA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticWord {
    pub word: String,
    pub phonemes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    /// Number of classes including silence (index 0).
    pub n_classes: usize,
    /// Planted confusable class pairs; members must share a kind and must
    /// not be silence or appear in more than one pair.
    pub confusable_pairs: Vec<(usize, usize)>,
    /// Number of DCT atoms the class templates span; must be >= n_classes - 1.
    pub feature_dim: usize,
    /// Distance between a class template and the background, in noise sigmas.
    pub class_separation: f64,
    /// Distance between the members of a planted pair, in noise sigmas.
    pub pair_separation: f64,
    /// Mean dwell time per state, in frames.
    pub frames_per_state: f64,
    /// Utterance length in Markov mode.
    pub frames_per_utterance: usize,
    pub n_utterances: usize,
    pub seed: u64,
    /// When non-empty, label tracks are silence-delimited word pronunciations
    /// instead of a free-running Markov chain, and `words` are transcribed.
    pub lexicon: Vec<SyntheticWord>,
    pub words_per_utterance: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_classes: 12,
            confusable_pairs: Vec::new(),
            feature_dim: 12,
            class_separation: 8.0,
            pair_separation: 2.0,
            frames_per_state: 4.0,
            frames_per_utterance: 30,
            n_utterances: 50,
            seed: 0,
            lexicon: Vec::new(),
            words_per_utterance: 3,
        }
    }
}

impl SyntheticSpec {
    /// The phoneme set the generated corpus uses: silence at 0, then odd
    /// indices consonant, even indices vowel.
    pub fn phoneme_set(&self) -> PhonemeSet {
        let mut classes = vec![PhonemeClass {
            symbol: SILENCE_SYMBOL.into(),
            kind: PhonemeKind::Silence,
        }];
        for i in 1..self.n_classes {
            let (prefix, kind) = if i % 2 == 1 {
                ("c", PhonemeKind::Consonant)
            } else {
                ("v", PhonemeKind::Vowel)
            };
            classes.push(PhonemeClass {
                symbol: format!("{prefix}{i}"),
                kind,
            });
        }
        PhonemeSet::new(classes).expect("generated set is valid by construction")
    }

    /// The generating Markov chain (Markov mode): self-transition
    /// `1 - 1/frames_per_state`, uniform switching otherwise.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        let c = self.n_classes;
        let stay = 1.0 - 1.0 / self.frames_per_state;
        let switch = (1.0 / self.frames_per_state) / (c - 1) as f64;
        (0..c)
            .map(|i| (0..c).map(|j| if i == j { stay } else { switch }).collect())
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::BadSyntheticSpec(m));
        if self.n_classes < 2 {
            return fail("need at least 2 classes".into());
        }
        if self.feature_dim < self.n_classes - 1 {
            return fail(format!(
                "feature_dim {} < n_classes - 1 = {}",
                self.feature_dim,
                self.n_classes - 1
            ));
        }
        if self.feature_dim + 1 > ROI_HEIGHT * ROI_WIDTH {
            return fail("feature_dim exceeds available DCT atoms".into());
        }
        if self.class_separation.is_nan() || self.class_separation <= 0.0 {
            return fail("class_separation must be > 0".into());
        }
        if self.pair_separation.is_nan() || self.pair_separation <= 0.0 {
            return fail("pair_separation must be > 0".into());
        }
        if self.frames_per_state < 1.0 {
            return fail("frames_per_state must be >= 1".into());
        }
        if self.n_utterances == 0 {
            return fail("n_utterances must be > 0".into());
        }
        let set = self.phoneme_set();
        let mut used = vec![false; self.n_classes];
        for &(i, j) in &self.confusable_pairs {
            if i >= self.n_classes || j >= self.n_classes || i == j {
                return fail(format!("invalid planted pair ({i}, {j})"));
            }
            if set.kind(i) == PhonemeKind::Silence || set.kind(j) == PhonemeKind::Silence {
                return fail("planted pairs must not involve silence".into());
            }
            if set.kind(i) != set.kind(j) {
                return fail(format!(
                    "planted pair ({i}, {j}) mixes vowel and consonant kinds"
                ));
            }
            if used[i] || used[j] {
                return fail(format!("class in more than one planted pair: ({i}, {j})"));
            }
            used[i] = true;
            used[j] = true;
        }
        for w in &self.lexicon {
            if w.phonemes.is_empty() {
                return fail(format!("word {:?} has empty pronunciation", w.word));
            }
            for &p in &w.phonemes {
                if p == 0 || p >= self.n_classes {
                    return fail(format!("word {:?} uses invalid class {p}", w.word));
                }
            }
        }
        if !self.lexicon.is_empty() && self.words_per_utterance == 0 {
            return fail("words_per_utterance must be > 0 in lexicon mode".into());
        }
        Ok(())
    }
}

/// Class template images: silence is the flat background, class `c >= 1`
/// sits `class_separation` sigmas along its own DCT atom. A planted pair's
/// second member is moved onto the first plus a `pair_separation`-sigma
/// orthogonal offset.
fn class_templates(spec: &SyntheticSpec) -> Vec<Vec<f64>> {
    let npix = ROI_HEIGHT * ROI_WIDTH;
    let order = dct::zigzag_order(ROI_HEIGHT, ROI_WIDTH);
    // Zigzag index 0 is DC; atoms start at 1 so templates are zero-mean.
    let atom = |k: usize| dct::basis_atom(order[k + 1].0, order[k + 1].1);

    let mut templates = vec![vec![0.0; npix]]; // silence
    for c in 1..spec.n_classes {
        let amp = NOISE_SIGMA * spec.class_separation;
        let a = atom((c - 1) % spec.feature_dim);
        templates.push(a.iter().map(|&v| amp * v).collect());
    }
    for &(i, j) in &spec.confusable_pairs {
        let offset_amp = NOISE_SIGMA * spec.pair_separation;
        let a = atom((j - 1) % spec.feature_dim);
        let base = templates[i].clone();
        templates[j] = base
            .iter()
            .zip(a.iter())
            .map(|(&b, &o)| b + offset_amp * o)
            .collect();
    }
    templates
}

fn markov_labels(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let c = spec.n_classes;
    let stay = 1.0 - 1.0 / spec.frames_per_state;
    let mut state = 0usize; // utterances start in silence
    let mut labels = Vec::with_capacity(spec.frames_per_utterance);
    for _ in 0..spec.frames_per_utterance {
        labels.push(state);
        if rng.random::<f64>() >= stay {
            let mut next = rng.random_range(0..c - 1);
            if next >= state {
                next += 1;
            }
            state = next;
        }
    }
    labels
}

fn geometric_dwell(mean: f64, rng: &mut ChaCha8Rng) -> usize {
    if mean <= 1.0 {
        return 1;
    }
    let p = 1.0 / mean;
    let u: f64 = rng.random();
    1 + (u.ln() / (1.0 - p).ln()).floor() as usize
}

fn lexicon_labels(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<String>) {
    let mut labels = Vec::new();
    let mut words = Vec::new();
    let sil_dwell = |rng: &mut ChaCha8Rng| geometric_dwell(spec.frames_per_state, rng);
    labels.extend(std::iter::repeat_n(0usize, sil_dwell(rng)));
    for _ in 0..spec.words_per_utterance {
        let w = &spec.lexicon[rng.random_range(0..spec.lexicon.len())];
        words.push(w.word.clone());
        for &p in &w.phonemes {
            labels.extend(std::iter::repeat_n(
                p,
                geometric_dwell(spec.frames_per_state, rng),
            ));
        }
        labels.extend(std::iter::repeat_n(0usize, sil_dwell(rng)));
    }
    (labels, words)
}

/// Generate a corpus from the spec. Deterministic: the same spec (including
/// seed) produces a bit-identical corpus.
pub fn generate_synthetic_corpus(spec: &SyntheticSpec) -> Result<Corpus> {
    spec.validate()?;
    let phoneme_set = spec.phoneme_set();
    let templates = class_templates(spec);
    let npix = ROI_HEIGHT * ROI_WIDTH;
    let id_width = spec.n_utterances.saturating_sub(1).to_string().len().max(4);

    let utterances: Vec<Utterance> = (0..spec.n_utterances)
        .map(|u| {
            let mut label_rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, 1_000_000 + u as u64));
            let mut noise_rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, 2_000_000 + u as u64));
            let (frame_labels, words) = if spec.lexicon.is_empty() {
                (markov_labels(spec, &mut label_rng), Vec::new())
            } else {
                lexicon_labels(spec, &mut label_rng)
            };
            let frames = frame_labels
                .iter()
                .map(|&l| {
                    let template = &templates[l];
                    let mut samples = Vec::with_capacity(npix);
                    for &t in template.iter() {
                        let eta: f64 = noise_rng.sample(StandardNormal);
                        let v = (0.5 + t + NOISE_SIGMA * eta).clamp(0.0, 1.0);
                        samples.push((v * 255.0 + 0.5).floor() as u8);
                    }
                    RoiFrame::from_u8(ROI_HEIGHT, ROI_WIDTH, &samples)
                        .expect("clamped samples are valid")
                })
                .collect();
            Utterance {
                id: format!("synth_{u:0id_width$}"),
                speaker: format!("spk{:02}", u % 4),
                frames,
                frame_labels,
                words,
            }
        })
        .collect();

    Corpus::new(phoneme_set, utterances)
}
