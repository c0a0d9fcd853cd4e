//! One-state-per-class HMMs: count-based estimation, log-space Viterbi, and
//! the soft variant that maximizes jointly over states and top-R candidate
//! observations weighted by their classifier likelihoods.

mod io;

pub use io::{load_hmm, save_hmm};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocabulary::VisemeVocabulary;

/// Probabilities below this floor decode as `log(1e-300)`; exact zeros stay
/// impossible so user-supplied zero-probability models report as such.
const LOG_FLOOR: f64 = -690.775_527_898_213_7; // ln(1e-300)

#[inline]
fn log_p(p: f64) -> f64 {
    if p > 0.0 {
        p.ln().max(LOG_FLOOR)
    } else {
        f64::NEG_INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmModel {
    pub state_labels: Vec<String>,
    pub obs_labels: Vec<String>,
    /// State transitions, row-stochastic N x N.
    pub a: Vec<Vec<f64>>,
    /// Emissions, row-stochastic N x M.
    pub b: Vec<Vec<f64>>,
    /// Initial state probabilities, length N.
    pub pi: Vec<f64>,
}

impl HmmModel {
    pub fn n_states(&self) -> usize {
        self.pi.len()
    }

    pub fn n_obs(&self) -> usize {
        self.b.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_states();
        let m = self.n_obs();
        if n == 0 || m == 0 {
            return Err(Error::Hmm("empty model".into()));
        }
        if self.a.len() != n || self.b.len() != n || self.state_labels.len() != n {
            return Err(Error::Hmm("inconsistent state dimensions".into()));
        }
        if self.obs_labels.len() != m {
            return Err(Error::Hmm("inconsistent observation labels".into()));
        }
        let check_row = |row: &[f64], what: &str| -> Result<()> {
            if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
                return Err(Error::Hmm(format!("{what}: negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Hmm(format!("{what}: row sums to {sum}, not 1")));
            }
            Ok(())
        };
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Hmm("transition row length mismatch".into()));
            }
            check_row(row, &format!("A[{i}]"))?;
        }
        for (i, row) in self.b.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Hmm("emission row length mismatch".into()));
            }
            check_row(row, &format!("B[{i}]"))?;
        }
        check_row(&self.pi, "pi")?;
        Ok(())
    }
}

/// Best state path, its log-probability, and (soft decoding only) the
/// observation chosen at each step.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedPath {
    pub states: Vec<usize>,
    pub log_prob: f64,
    pub chosen_obs: Option<Vec<usize>>,
}

impl DecodedPath {
    /// True when no positive-probability path exists under the model.
    pub fn is_impossible(&self) -> bool {
        self.log_prob == f64::NEG_INFINITY
    }
}

/// Count-based estimation: transitions and initial probabilities from
/// ground-truth label sequences, emissions from (true state, predicted
/// symbol) pairs. Counts get +epsilon Laplace smoothing before row
/// normalization; `None` picks 1e-6 x the total count of each matrix.
/// Zero-count rows normalize to uniform.
pub fn hmm_fit(
    state_sequences: &[Vec<usize>],
    emission_pairs: &[(usize, usize)],
    n_states: usize,
    n_obs: usize,
    state_labels: Vec<String>,
    obs_labels: Vec<String>,
    epsilon: Option<f64>,
) -> Result<HmmModel> {
    if state_sequences.is_empty() {
        return Err(Error::Hmm("no training sequences".into()));
    }
    let mut a_counts = vec![vec![0u64; n_states]; n_states];
    let mut pi_counts = vec![0u64; n_states];
    let mut b_counts = vec![vec![0u64; n_obs]; n_states];
    for seq in state_sequences {
        if let Some(&first) = seq.first() {
            if first >= n_states {
                return Err(Error::Hmm(format!("state {first} out of range")));
            }
            pi_counts[first] += 1;
        }
        for w in seq.windows(2) {
            if w[1] >= n_states {
                return Err(Error::Hmm(format!("state {} out of range", w[1])));
            }
            a_counts[w[0]][w[1]] += 1;
        }
    }
    for &(s, o) in emission_pairs {
        if s >= n_states || o >= n_obs {
            return Err(Error::Hmm(format!("emission pair ({s}, {o}) out of range")));
        }
        b_counts[s][o] += 1;
    }

    let normalize = |counts: &[Vec<u64>], eps: Option<f64>| -> Vec<Vec<f64>> {
        let total: u64 = counts.iter().flatten().sum();
        let e = eps.unwrap_or(1e-6 * total as f64);
        counts
            .iter()
            .map(|row| {
                let sum: u64 = row.iter().sum();
                let denom = sum as f64 + e * row.len() as f64;
                if denom > 0.0 {
                    row.iter().map(|&c| (c as f64 + e) / denom).collect()
                } else {
                    vec![1.0 / row.len() as f64; row.len()]
                }
            })
            .collect()
    };

    let a = normalize(&a_counts, epsilon);
    let b = normalize(&b_counts, epsilon);
    let pi = {
        let total: u64 = pi_counts.iter().sum();
        let e = epsilon.unwrap_or(1e-6 * total as f64);
        let denom = total as f64 + e * n_states as f64;
        if denom > 0.0 {
            pi_counts.iter().map(|&c| (c as f64 + e) / denom).collect()
        } else {
            vec![1.0 / n_states as f64; n_states]
        }
    };

    let model = HmmModel {
        state_labels,
        obs_labels,
        a,
        b,
        pi,
    };
    model.validate()?;
    Ok(model)
}

/// Standard Viterbi over hard observations; ties break toward the lower
/// state index at every step.
pub fn viterbi(model: &HmmModel, obs: &[usize]) -> Result<DecodedPath> {
    let n = model.n_states();
    let m = model.n_obs();
    if let Some(&bad) = obs.iter().find(|&&o| o >= m) {
        return Err(Error::Hmm(format!("observation {bad} out of range 0..{m}")));
    }
    let t_len = obs.len();
    if t_len == 0 {
        return Ok(DecodedPath {
            states: Vec::new(),
            log_prob: 0.0,
            chosen_obs: None,
        });
    }

    let la: Vec<Vec<f64>> = model
        .a
        .iter()
        .map(|r| r.iter().map(|&p| log_p(p)).collect())
        .collect();
    let lb: Vec<Vec<f64>> = model
        .b
        .iter()
        .map(|r| r.iter().map(|&p| log_p(p)).collect())
        .collect();

    let mut delta: Vec<f64> = (0..n).map(|i| log_p(model.pi[i]) + lb[i][obs[0]]).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(t_len);
    for &o in &obs[1..] {
        let mut next = vec![f64::NEG_INFINITY; n];
        let mut bp = vec![0usize; n];
        for (j, slot) in next.iter_mut().enumerate() {
            let mut best = f64::NEG_INFINITY;
            let mut best_i = 0usize;
            for i in 0..n {
                let v = delta[i] + la[i][j];
                if v > best {
                    best = v;
                    best_i = i;
                }
            }
            *slot = best + lb[j][o];
            bp[j] = best_i;
        }
        back.push(bp);
        delta = next;
    }

    let mut best_state = 0usize;
    for i in 1..n {
        if delta[i] > delta[best_state] {
            best_state = i;
        }
    }
    let log_prob = delta[best_state];
    let mut states = vec![0usize; t_len];
    states[t_len - 1] = best_state;
    for t in (0..t_len - 1).rev() {
        states[t] = back[t][states[t + 1]];
    }
    Ok(DecodedPath {
        states,
        log_prob,
        chosen_obs: None,
    })
}

/// Soft observations: one likelihood row per step, each summing to one.
pub fn validate_soft_rows(soft: &[Vec<f64>], m: usize) -> Result<()> {
    for (t, row) in soft.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Hmm(format!(
                "soft row {t} has {} entries, expected {m}",
                row.len()
            )));
        }
        if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::Hmm(format!("soft row {t}: negative entry")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Hmm(format!("soft row {t} sums to {sum}, not 1")));
        }
    }
    Ok(())
}

/// Top-`rank` observation candidates of a likelihood row, ties toward the
/// lower symbol index, returned in ascending index order.
fn top_candidates(row: &[f64], rank: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    idx.truncate(rank);
    idx.sort_unstable();
    idx
}

/// Likelihood-augmented Viterbi: at every step the maximization runs over
/// both predecessor states and the `rank` highest-likelihood candidate
/// observations, each weighted by its likelihood. Ties break toward the
/// lower state index, then the lower observation index.
pub fn viterbi_soft(model: &HmmModel, soft: &[Vec<f64>], rank: usize) -> Result<DecodedPath> {
    let n = model.n_states();
    let m = model.n_obs();
    if rank == 0 || rank > m {
        return Err(Error::Hmm(format!("rank {rank} out of range 1..={m}")));
    }
    validate_soft_rows(soft, m)?;
    let t_len = soft.len();
    if t_len == 0 {
        return Ok(DecodedPath {
            states: Vec::new(),
            log_prob: 0.0,
            chosen_obs: Some(Vec::new()),
        });
    }

    let la: Vec<Vec<f64>> = model
        .a
        .iter()
        .map(|r| r.iter().map(|&p| log_p(p)).collect())
        .collect();
    let lb: Vec<Vec<f64>> = model
        .b
        .iter()
        .map(|r| r.iter().map(|&p| log_p(p)).collect())
        .collect();

    // Best emission log-score and the chosen candidate for state j at step t.
    let emit = |j: usize, candidates: &[usize], lrow: &[f64]| -> (f64, usize) {
        let mut best = f64::NEG_INFINITY;
        let mut best_o = candidates[0];
        for &o in candidates {
            let v = lb[j][o] + log_p(lrow[o]);
            if v > best {
                best = v;
                best_o = o;
            }
        }
        (best, best_o)
    };

    let cand0 = top_candidates(&soft[0], rank);
    let mut delta = vec![f64::NEG_INFINITY; n];
    let mut chosen: Vec<Vec<usize>> = Vec::with_capacity(t_len);
    let mut first_choice = vec![0usize; n];
    for i in 0..n {
        let (e, o) = emit(i, &cand0, &soft[0]);
        delta[i] = log_p(model.pi[i]) + e;
        first_choice[i] = o;
    }
    chosen.push(first_choice);

    let mut back: Vec<Vec<usize>> = Vec::with_capacity(t_len);
    for trow in &soft[1..] {
        let candidates = top_candidates(trow, rank);
        let mut next = vec![f64::NEG_INFINITY; n];
        let mut bp = vec![0usize; n];
        let mut choice = vec![0usize; n];
        for j in 0..n {
            let mut best_prev = f64::NEG_INFINITY;
            let mut best_i = 0usize;
            for i in 0..n {
                let v = delta[i] + la[i][j];
                if v > best_prev {
                    best_prev = v;
                    best_i = i;
                }
            }
            let (e, o) = emit(j, &candidates, trow);
            next[j] = best_prev + e;
            bp[j] = best_i;
            choice[j] = o;
        }
        back.push(bp);
        chosen.push(choice);
        delta = next;
    }

    let mut best_state = 0usize;
    for i in 1..n {
        if delta[i] > delta[best_state] {
            best_state = i;
        }
    }
    let log_prob = delta[best_state];
    let mut states = vec![0usize; t_len];
    states[t_len - 1] = best_state;
    for t in (0..t_len - 1).rev() {
        states[t] = back[t][states[t + 1]];
    }
    let obs_choices: Vec<usize> = states.iter().enumerate().map(|(t, &s)| chosen[t][s]).collect();
    Ok(DecodedPath {
        states,
        log_prob,
        chosen_obs: Some(obs_choices),
    })
}

/// Independently recompute the log-probability of a (path, observations)
/// pair under the model.
pub fn score_path(model: &HmmModel, states: &[usize], obs: &[usize]) -> f64 {
    assert_eq!(states.len(), obs.len());
    if states.is_empty() {
        return 0.0;
    }
    let mut lp = log_p(model.pi[states[0]]) + log_p(model.b[states[0]][obs[0]]);
    for t in 1..states.len() {
        lp += log_p(model.a[states[t - 1]][states[t]]) + log_p(model.b[states[t]][obs[t]]);
    }
    lp
}

/// Build the viseme-to-phoneme decoder model: keeps the phoneme transition
/// prior (A, pi) and replaces emissions with the vocabulary-constrained
/// matrix where phoneme j can only emit its own viseme group (plus epsilon).
pub fn phoneme_decoder_model(
    phoneme_hmm: &HmmModel,
    vocab: &VisemeVocabulary,
    epsilon: f64,
) -> Result<HmmModel> {
    let n = phoneme_hmm.n_states();
    if n != vocab.phoneme_count() {
        return Err(Error::Hmm(format!(
            "phoneme model has {n} states, vocabulary covers {}",
            vocab.phoneme_count()
        )));
    }
    let m = vocab.len();
    let b = (0..n)
        .map(|j| {
            let own = vocab.group_of(j);
            let denom = 1.0 + epsilon * m as f64;
            (0..m)
                .map(|v| (f64::from(u8::from(v == own)) + epsilon) / denom)
                .collect()
        })
        .collect();
    let obs_labels = (0..m)
        .map(|v| {
            vocab.groups()[v]
                .members
                .iter()
                .map(|&p| phoneme_hmm.state_labels[p].clone())
                .collect::<Vec<_>>()
                .join("+")
        })
        .collect();
    let model = HmmModel {
        state_labels: phoneme_hmm.state_labels.clone(),
        obs_labels,
        a: phoneme_hmm.a.clone(),
        b,
        pi: phoneme_hmm.pi.clone(),
    };
    model.validate()?;
    Ok(model)
}

/// Map a viseme sequence to phonemes with the standard Viterbi over the
/// constrained decoder model.
pub fn viseme_to_phoneme(
    decoder: &HmmModel,
    visemes: &[usize],
    vocab: &VisemeVocabulary,
) -> Result<Vec<usize>> {
    if decoder.n_obs() != vocab.len() || decoder.n_states() != vocab.phoneme_count() {
        return Err(Error::Hmm(format!(
            "decoder is {}x{}, vocabulary needs {}x{}",
            decoder.n_states(),
            decoder.n_obs(),
            vocab.phoneme_count(),
            vocab.len()
        )));
    }
    Ok(viterbi(decoder, visemes)?.states)
}
