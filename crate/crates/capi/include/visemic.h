/* C interface for the visemic visual speech decoding library.
 *
 * Maintained by hand; crates/capi/tests/header_sync.rs checks that every
 * exported symbol is declared here.
 *
 * Conventions:
 *  - Functions returning VsmStatus describe failures via
 *    vsm_last_error_message() (thread-local, valid until the next failing
 *    call on the same thread).
 *  - Output parameters are written only on VSM_OK.
 *  - Each handle is released exactly once with its _free function; passing
 *    NULL to a _free is a no-op.
 */

#ifndef VISEMIC_H
#define VISEMIC_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum VsmStatus {
  VSM_OK = 0,
  VSM_NULL_ARGUMENT = 1,
  VSM_INVALID_UTF8 = 2,
  VSM_IO = 3,
  VSM_PARSE = 4,
  VSM_INVALID_ARGUMENT = 5,
  VSM_DECODE_IMPOSSIBLE = 6,
} VsmStatus;

/* Opaque handles. */
typedef struct VsmVocabulary VsmVocabulary;
typedef struct VsmHmm VsmHmm;
typedef struct VsmEnsemble VsmEnsemble;

const char *vsm_last_error_message(void);
uint32_t vsm_abi_version(void);

/* Viseme vocabularies (partitions of a phoneme inventory). */
VsmStatus vsm_vocabulary_spanish_20(VsmVocabulary **out);
VsmStatus vsm_vocabulary_load(const char *path, VsmVocabulary **out);
size_t vsm_vocabulary_len(const VsmVocabulary *handle);
size_t vsm_vocabulary_phoneme_count(const VsmVocabulary *handle);
VsmStatus vsm_vocabulary_map(const VsmVocabulary *handle, const uint32_t *phonemes, size_t len,
                             uint32_t *out_visemes);
void vsm_vocabulary_free(VsmVocabulary *handle);

/* One-state-per-class HMM decoding. */
VsmStatus vsm_hmm_load(const char *path, VsmHmm **out);
size_t vsm_hmm_n_states(const VsmHmm *handle);
size_t vsm_hmm_n_observations(const VsmHmm *handle);
VsmStatus vsm_hmm_viterbi(const VsmHmm *handle, const uint32_t *obs, size_t len,
                          uint32_t *out_states, double *out_log_prob);
/* soft: row-major len x n_observations likelihoods, each row summing to 1.
 * rank = 0 considers all observation candidates per step. */
VsmStatus vsm_hmm_viterbi_soft(const VsmHmm *handle, const double *soft, size_t len, size_t rank,
                               uint32_t *out_states, double *out_log_prob);
void vsm_hmm_free(VsmHmm *handle);

/* Bagged LDA ensembles (.vsem model files). */
VsmStatus vsm_ensemble_load(const char *path, VsmEnsemble **out);
size_t vsm_ensemble_class_count(const VsmEnsemble *handle);
size_t vsm_ensemble_dim(const VsmEnsemble *handle);
VsmStatus vsm_ensemble_likelihood(const VsmEnsemble *handle, const double *features, size_t dim,
                                  double *out_likelihoods);
VsmStatus vsm_ensemble_classify(const VsmEnsemble *handle, const double *features, size_t dim,
                                uint32_t *out_class);
void vsm_ensemble_free(VsmEnsemble *handle);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* VISEMIC_H */
