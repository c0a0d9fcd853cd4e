//! C ABI over the decoding primitives: opaque handles, integer status codes,
//! and a thread-local last-error message. The installed header lives at
//! `include/visemic.h` and is maintained by hand; `tests/header_sync.rs`
//! checks that every exported symbol appears there.
//!
//! Conventions:
//! - Functions returning `VsmStatus` report failure details via
//!   `vsm_last_error_message()` (thread-local, valid until the next call on
//!   the same thread).
//! - Output parameters are written only on `VSM_OK`.
//! - Handles are freed exactly once with their `_free` function; passing
//!   NULL to a `_free` is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

use visemic::corpus::PhonemeSet;
use visemic::hmm::{viterbi, viterbi_soft, HmmModel};
use visemic::vocabulary::{spanish_20_fixture, vocabulary_from_json, VisemeVocabulary};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VsmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidArgument = 5,
    DecodeImpossible = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(msg).unwrap_or_default();
    });
}

fn fail(status: VsmStatus, msg: impl Into<String>) -> VsmStatus {
    set_error(msg);
    status
}

/// Message for the most recent failure on this thread. Never NULL; empty
/// when no failure has occurred. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn vsm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// ABI version; bump on any breaking change to this interface.
#[no_mangle]
pub extern "C" fn vsm_abi_version() -> u32 {
    1
}

unsafe fn path_from(ptr_: *const c_char) -> Result<std::path::PathBuf, VsmStatus> {
    if ptr_.is_null() {
        return Err(fail(VsmStatus::NullArgument, "NULL path"));
    }
    match CStr::from_ptr(ptr_).to_str() {
        Ok(s) => Ok(Path::new(s).to_path_buf()),
        Err(_) => Err(fail(VsmStatus::InvalidUtf8, "path is not valid UTF-8")),
    }
}

// ---------------------------------------------------------------------------
// Vocabulary handle
// ---------------------------------------------------------------------------

/// Opaque viseme vocabulary: a partition of a phoneme inventory.
pub struct VsmVocabulary {
    vocab: VisemeVocabulary,
}

/// The built-in 20-viseme Spanish vocabulary over the default inventory.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn vsm_vocabulary_spanish_20(out: *mut *mut VsmVocabulary) -> VsmStatus {
    if out.is_null() {
        return fail(VsmStatus::NullArgument, "NULL output pointer");
    }
    let handle = Box::new(VsmVocabulary {
        vocab: spanish_20_fixture(),
    });
    *out = Box::into_raw(handle);
    VsmStatus::Ok
}

/// Load a vocabulary JSON file, resolved against the default Spanish
/// phoneme inventory.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` as above.
#[no_mangle]
pub unsafe extern "C" fn vsm_vocabulary_load(
    path: *const c_char,
    out: *mut *mut VsmVocabulary,
) -> VsmStatus {
    if out.is_null() {
        return fail(VsmStatus::NullArgument, "NULL output pointer");
    }
    let path = match path_from(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => return fail(VsmStatus::Io, format!("{}: {e}", path.display())),
    };
    let set = PhonemeSet::spanish_sampa();
    match vocabulary_from_json(&text, &set) {
        Ok(vocab) => {
            *out = Box::into_raw(Box::new(VsmVocabulary { vocab }));
            VsmStatus::Ok
        }
        Err(e) => fail(VsmStatus::Parse, e.to_string()),
    }
}

/// Number of viseme groups.
///
/// # Safety
/// `handle` must be a live vocabulary handle.
#[no_mangle]
pub unsafe extern "C" fn vsm_vocabulary_len(handle: *const VsmVocabulary) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).vocab.len()
}

/// Number of phoneme classes the vocabulary partitions.
///
/// # Safety
/// `handle` must be a live vocabulary handle.
#[no_mangle]
pub unsafe extern "C" fn vsm_vocabulary_phoneme_count(handle: *const VsmVocabulary) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).vocab.phoneme_count()
}

/// Map phoneme class indices to viseme group indices, element-wise.
///
/// # Safety
/// `phonemes` and `out_visemes` must point to `len` readable/writable u32.
#[no_mangle]
pub unsafe extern "C" fn vsm_vocabulary_map(
    handle: *const VsmVocabulary,
    phonemes: *const u32,
    len: usize,
    out_visemes: *mut u32,
) -> VsmStatus {
    if handle.is_null() || (len > 0 && (phonemes.is_null() || out_visemes.is_null())) {
        return fail(VsmStatus::NullArgument, "NULL argument");
    }
    let vocab = &(*handle).vocab;
    let input = std::slice::from_raw_parts(phonemes, len);
    let output = std::slice::from_raw_parts_mut(out_visemes, len);
    for (o, &p) in output.iter_mut().zip(input) {
        if p as usize >= vocab.phoneme_count() {
            return fail(
                VsmStatus::InvalidArgument,
                format!("phoneme index {p} out of range"),
            );
        }
        *o = vocab.group_of(p as usize) as u32;
    }
    VsmStatus::Ok
}

/// # Safety
/// `handle` must come from a `vsm_vocabulary_*` constructor; NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn vsm_vocabulary_free(handle: *mut VsmVocabulary) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

// ---------------------------------------------------------------------------
// HMM handle
// ---------------------------------------------------------------------------

/// Opaque one-state-per-class HMM.
pub struct VsmHmm {
    model: HmmModel,
}

/// Load an HMM from its JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must hold one pointer.
#[no_mangle]
pub unsafe extern "C" fn vsm_hmm_load(path: *const c_char, out: *mut *mut VsmHmm) -> VsmStatus {
    if out.is_null() {
        return fail(VsmStatus::NullArgument, "NULL output pointer");
    }
    let path = match path_from(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match visemic::hmm::load_hmm(&path) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(VsmHmm { model }));
            VsmStatus::Ok
        }
        Err(e) => fail(VsmStatus::Parse, e.to_string()),
    }
}

/// # Safety
/// `handle` must be a live HMM handle.
#[no_mangle]
pub unsafe extern "C" fn vsm_hmm_n_states(handle: *const VsmHmm) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).model.n_states()
}

/// # Safety
/// `handle` must be a live HMM handle.
#[no_mangle]
pub unsafe extern "C" fn vsm_hmm_n_observations(handle: *const VsmHmm) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).model.n_obs()
}

/// Most probable state path for a hard observation sequence.
///
/// # Safety
/// `obs` must point to `len` u32; `out_states` to `len` writable u32;
/// `out_log_prob` to one writable double (may be NULL).
#[no_mangle]
pub unsafe extern "C" fn vsm_hmm_viterbi(
    handle: *const VsmHmm,
    obs: *const u32,
    len: usize,
    out_states: *mut u32,
    out_log_prob: *mut f64,
) -> VsmStatus {
    if handle.is_null() || (len > 0 && (obs.is_null() || out_states.is_null())) {
        return fail(VsmStatus::NullArgument, "NULL argument");
    }
    let model = &(*handle).model;
    let sequence: Vec<usize> = std::slice::from_raw_parts(obs, len)
        .iter()
        .map(|&o| o as usize)
        .collect();
    match viterbi(model, &sequence) {
        Ok(path) => {
            if path.is_impossible() {
                return fail(
                    VsmStatus::DecodeImpossible,
                    "no positive-probability path exists",
                );
            }
            let out = std::slice::from_raw_parts_mut(out_states, len);
            for (o, &s) in out.iter_mut().zip(&path.states) {
                *o = s as u32;
            }
            if !out_log_prob.is_null() {
                *out_log_prob = path.log_prob;
            }
            VsmStatus::Ok
        }
        Err(e) => fail(VsmStatus::InvalidArgument, e.to_string()),
    }
}

/// Likelihood-augmented Viterbi over soft observations: `soft` is row-major
/// `len x n_observations`, each row a likelihood vector summing to one.
/// `rank` limits the candidate observations per step (0 = all).
///
/// # Safety
/// `soft` must point to `len * n_observations` doubles; `out_states` to
/// `len` writable u32; `out_log_prob` to one writable double (may be NULL).
#[no_mangle]
pub unsafe extern "C" fn vsm_hmm_viterbi_soft(
    handle: *const VsmHmm,
    soft: *const f64,
    len: usize,
    rank: usize,
    out_states: *mut u32,
    out_log_prob: *mut f64,
) -> VsmStatus {
    if handle.is_null() || (len > 0 && (soft.is_null() || out_states.is_null())) {
        return fail(VsmStatus::NullArgument, "NULL argument");
    }
    let model = &(*handle).model;
    let m = model.n_obs();
    let rows: Vec<Vec<f64>> = std::slice::from_raw_parts(soft, len * m)
        .chunks_exact(m)
        .map(<[f64]>::to_vec)
        .collect();
    let rank = if rank == 0 { m } else { rank };
    match viterbi_soft(model, &rows, rank) {
        Ok(path) => {
            if path.is_impossible() {
                return fail(
                    VsmStatus::DecodeImpossible,
                    "no positive-probability path exists",
                );
            }
            let out = std::slice::from_raw_parts_mut(out_states, len);
            for (o, &s) in out.iter_mut().zip(&path.states) {
                *o = s as u32;
            }
            if !out_log_prob.is_null() {
                *out_log_prob = path.log_prob;
            }
            VsmStatus::Ok
        }
        Err(e) => fail(VsmStatus::InvalidArgument, e.to_string()),
    }
}

/// # Safety
/// `handle` must come from `vsm_hmm_load`; NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn vsm_hmm_free(handle: *mut VsmHmm) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

// ---------------------------------------------------------------------------
// Ensemble handle
// ---------------------------------------------------------------------------

/// Opaque bagged LDA ensemble.
pub struct VsmEnsemble {
    ensemble: visemic::classifier::LdaEnsemble,
}

/// Load an ensemble model file (.vsem).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must hold one pointer.
#[no_mangle]
pub unsafe extern "C" fn vsm_ensemble_load(
    path: *const c_char,
    out: *mut *mut VsmEnsemble,
) -> VsmStatus {
    if out.is_null() {
        return fail(VsmStatus::NullArgument, "NULL output pointer");
    }
    let path = match path_from(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match visemic::classifier::load_ensemble(&path) {
        Ok(stored) => {
            *out = Box::into_raw(Box::new(VsmEnsemble {
                ensemble: stored.ensemble,
            }));
            VsmStatus::Ok
        }
        Err(e) => fail(VsmStatus::Parse, e.to_string()),
    }
}

/// # Safety
/// `handle` must be a live ensemble handle.
#[no_mangle]
pub unsafe extern "C" fn vsm_ensemble_class_count(handle: *const VsmEnsemble) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).ensemble.class_count
}

/// # Safety
/// `handle` must be a live ensemble handle.
#[no_mangle]
pub unsafe extern "C" fn vsm_ensemble_dim(handle: *const VsmEnsemble) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).ensemble.dim
}

/// Normalized per-class likelihoods of one feature vector: writes
/// `class_count` doubles summing to one.
///
/// # Safety
/// `features` must point to `dim` doubles, `out_likelihoods` to
/// `class_count` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn vsm_ensemble_likelihood(
    handle: *const VsmEnsemble,
    features: *const f64,
    dim: usize,
    out_likelihoods: *mut f64,
) -> VsmStatus {
    if handle.is_null() || features.is_null() || out_likelihoods.is_null() {
        return fail(VsmStatus::NullArgument, "NULL argument");
    }
    let ensemble = &(*handle).ensemble;
    if dim != ensemble.dim {
        return fail(
            VsmStatus::InvalidArgument,
            format!("feature dim {dim} does not match model dim {}", ensemble.dim),
        );
    }
    let x = std::slice::from_raw_parts(features, dim);
    match ensemble.ensemble_likelihood(x) {
        Ok(v) => {
            let out = std::slice::from_raw_parts_mut(out_likelihoods, ensemble.class_count);
            out.copy_from_slice(v.values());
            VsmStatus::Ok
        }
        Err(e) => fail(VsmStatus::InvalidArgument, e.to_string()),
    }
}

/// Highest-likelihood class of one feature vector (ties to lowest index).
///
/// # Safety
/// `features` must point to `dim` doubles; `out_class` to one writable u32.
#[no_mangle]
pub unsafe extern "C" fn vsm_ensemble_classify(
    handle: *const VsmEnsemble,
    features: *const f64,
    dim: usize,
    out_class: *mut u32,
) -> VsmStatus {
    if handle.is_null() || features.is_null() || out_class.is_null() {
        return fail(VsmStatus::NullArgument, "NULL argument");
    }
    let ensemble = &(*handle).ensemble;
    if dim != ensemble.dim {
        return fail(
            VsmStatus::InvalidArgument,
            format!("feature dim {dim} does not match model dim {}", ensemble.dim),
        );
    }
    let x = std::slice::from_raw_parts(features, dim);
    match ensemble.classify(x) {
        Ok(c) => {
            *out_class = c as u32;
            VsmStatus::Ok
        }
        Err(e) => fail(VsmStatus::InvalidArgument, e.to_string()),
    }
}

/// # Safety
/// `handle` must come from `vsm_ensemble_load`; NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn vsm_ensemble_free(handle: *mut VsmEnsemble) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}
