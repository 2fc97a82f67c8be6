#ifndef NFTREC_H
#define NFTREC_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NftrecStatus {
  NFTREC_STATUS_OK = 0,
  NFTREC_STATUS_NULL_POINTER = 1,
  NFTREC_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Malformed or inconsistent input files or configuration.
   */
  NFTREC_STATUS_INPUT_ERROR = 3,
  NFTREC_STATUS_RUNTIME_ERROR = 4,
  NFTREC_STATUS_BUFFER_TOO_SMALL = 5,
  NFTREC_STATUS_PANIC = 6,
} NftrecStatus;

/**
 * Loaded interaction dataset.
 */
typedef struct NftrecDataset NftrecDataset;

/**
 * Checkpoint restored against its run configuration.
 */
typedef struct NftrecRecommender NftrecRecommender;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *nftrec_version(void);

/**
 * Message for the last failed call on this thread (empty after a success).
 * Valid until the next call into this library on the same thread.
 */
const char *nftrec_last_error(void);

/**
 * Recall@k of a ranked item list against a ground-truth set.
 *
 * # Safety
 * `ranked` and `ground_truth` must point to at least `*_len` readable
 * elements; `out` must be writable.
 */
enum NftrecStatus nftrec_recall_at_k(const size_t *ranked,
                                     size_t ranked_len,
                                     const size_t *ground_truth,
                                     size_t ground_truth_len,
                                     size_t k,
                                     double *out);

/**
 * NDCG@k with binary relevance.
 *
 * # Safety
 * As for [`nftrec_recall_at_k`].
 */
enum NftrecStatus nftrec_ndcg_at_k(const size_t *ranked,
                                   size_t ranked_len,
                                   const size_t *ground_truth,
                                   size_t ground_truth_len,
                                   size_t k,
                                   double *out);

/**
 * Ingests a transaction CSV, keeping items with at least `min_interactions`
 * distinct buyers.
 *
 * # Safety
 * `csv_path` must be a NUL-terminated string; `out` must be writable.
 */
enum NftrecStatus nftrec_dataset_from_csv(const char *csv_path,
                                          size_t min_interactions,
                                          struct NftrecDataset **out);

/**
 * Loads a dataset file written by `nftrec ingest`.
 *
 * # Safety
 * As for [`nftrec_dataset_from_csv`].
 */
enum NftrecStatus nftrec_dataset_load(const char *path, struct NftrecDataset **out);

/**
 * Writes user, item and interaction counts; any output may be null.
 *
 * # Safety
 * `dataset` must come from this library; non-null outputs must be writable.
 */
enum NftrecStatus nftrec_dataset_counts(const struct NftrecDataset *dataset,
                                        size_t *num_users,
                                        size_t *num_items,
                                        size_t *num_interactions);

/**
 * # Safety
 * `dataset` must come from this library and not be used afterwards. Null is
 * ignored.
 */
void nftrec_dataset_free(struct NftrecDataset *dataset);

/**
 * Restores `checkpoint_path` against the run configuration at
 * `config_path` (same dataset, split seed and feature files as training).
 *
 * # Safety
 * Both paths must be NUL-terminated strings; `out` must be writable.
 */
enum NftrecStatus nftrec_recommender_open(const char *config_path,
                                          const char *checkpoint_path,
                                          struct NftrecRecommender **out);

/**
 * Writes user and item counts; either output may be null.
 *
 * # Safety
 * `rec` must come from this library; non-null outputs must be writable.
 */
enum NftrecStatus nftrec_recommender_counts(const struct NftrecRecommender *rec,
                                            size_t *num_users,
                                            size_t *num_items);

/**
 * Looks up the user index of a wallet address.
 *
 * # Safety
 * `rec` must come from this library, `wallet` must be NUL-terminated and
 * `out` writable.
 */
enum NftrecStatus nftrec_recommender_user_index(const struct NftrecRecommender *rec,
                                                const char *wallet,
                                                size_t *out);

/**
 * Copies the token id of item `item` into `buf` as a NUL-terminated string.
 * `*needed` receives the required size including the NUL; if `buf_len` is
 * smaller, nothing is copied and `BufferTooSmall` is returned.
 *
 * # Safety
 * `rec` must come from this library, `buf` writable for `buf_len` bytes
 * (may be null when `buf_len` is 0) and `needed` writable.
 */
enum NftrecStatus nftrec_recommender_item_token(const struct NftrecRecommender *rec,
                                                size_t item,
                                                char *buf,
                                                size_t buf_len,
                                                size_t *needed);

/**
 * Top-`k` items for user index `user`, excluding its train items, by
 * descending score. Writes up to `min(k, capacity)` results; `*written`
 * receives the count. `scores` may be null.
 *
 * # Safety
 * `rec` must come from this library; `items` (and `scores` if non-null)
 * must be writable for `capacity` elements; `written` must be writable.
 */
enum NftrecStatus nftrec_recommender_recommend(const struct NftrecRecommender *rec,
                                               size_t user,
                                               size_t k,
                                               size_t *items,
                                               double *scores,
                                               size_t capacity,
                                               size_t *written);

/**
 * # Safety
 * `rec` must come from this library and not be used afterwards. Null is
 * ignored.
 */
void nftrec_recommender_free(struct NftrecRecommender *rec);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NFTREC_H */
