#ifndef POLARFLIP_H
#define POLARFLIP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PfAlgorithm {
  PF_ALGORITHM_SCL = 0,
  PF_ALGORITHM_CA_SCL = 1,
  PF_ALGORITHM_SCLF = 2,
  PF_ALGORITHM_PSCLF = 3,
} PfAlgorithm;

typedef enum PfDecodeStatus {
  PF_DECODE_STATUS_SUCCESS = 0,
  PF_DECODE_STATUS_EARLY_TERMINATED = 1,
  PF_DECODE_STATUS_EXHAUSTED = 2,
} PfDecodeStatus;

typedef enum PfRestart {
  PF_RESTART_CHECK_KEEP = 0,
  PF_RESTART_CHECK_REMOVE = 1,
} PfRestart;

typedef enum PfStatus {
  PF_STATUS_OK = 0,
  PF_STATUS_NULL_POINTER = 1,
  PF_STATUS_INVALID_PARAMETER = 2,
  PF_STATUS_INVALID_CODE = 3,
  PF_STATUS_INFEASIBLE_PARTITION = 4,
  PF_STATUS_PARSE = 5,
  PF_STATUS_IO = 6,
  PF_STATUS_BUFFER_TOO_SMALL = 7,
  PF_STATUS_PANIC = 8,
} PfStatus;

// A partitioned polar code.
typedef struct PfCode PfCode;

// A decoder bound to one code, reusable across frames.
typedef struct PfDecoder PfDecoder;

typedef struct PfDecoderConfig {
  size_t list_size;
  size_t omega;
  size_t t_max;
  // Flip-metric weight, at least 1.
  double alpha;
  enum PfRestart restart;
  // Metric penalty of check-and-remove.
  double penalty;
} PfDecoderConfig;

typedef struct PfDecodeResult {
  enum PfDecodeStatus status;
  // 1-based partition that stopped an early-terminated frame, else 0.
  size_t failed_partition;
  size_t total_trials;
} PfDecodeResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Length in bytes of the last error message of this thread, without the
// terminating NUL. Zero after a successful call.
size_t pf_last_error_length(void);

// Copies the last error message into `buf` as a NUL-terminated string,
// truncating to `cap - 1` bytes. Returns the full message length.
//
// # Safety
// `buf` must be null or valid for `cap` bytes.
size_t pf_last_error_message(char *buf, size_t cap);

// Builds a partitioned code from a Gaussian-approximation construction.
//
// `info_size` counts message and CRC bits. `mu` holds the last leaf of each
// partition (the final one must be `n_len - 1`) and `crc_widths` one CRC
// width per partition, both of length `parts`.
//
// # Safety
// `mu` and `crc_widths` must be valid for `parts` elements and `out` must
// be a valid pointer.
enum PfStatus pf_code_new(size_t n_len,
                          size_t info_size,
                          double design_snr_db,
                          const size_t *mu,
                          const uint32_t *crc_widths,
                          size_t parts,
                          struct PfCode **out);

// # Safety
// `code` must be null or a handle from [`pf_code_new`] not yet freed.
void pf_code_free(struct PfCode *code);

// Block length `N`, or 0 for a null handle.
//
// # Safety
// `code` must be null or a live handle.
size_t pf_code_length(const struct PfCode *code);

// Message bits per frame, CRC bits excluded.
//
// # Safety
// `code` must be null or a live handle.
size_t pf_code_message_length(const struct PfCode *code);

// # Safety
// `code` must be null or a live handle.
size_t pf_code_partitions(const struct PfCode *code);

// Appends the partition CRCs to `message` (one bit per byte) and writes the
// `N` codeword bits to `codeword`.
//
// # Safety
// Pointers must be valid for the given lengths.
enum PfStatus pf_code_encode(const struct PfCode *code,
                             const uint8_t *message,
                             size_t message_len,
                             uint8_t *codeword,
                             size_t codeword_len);

// BPSK over AWGN at `snr_db` (Eb/N0) for a code of the given rate. Frame
// `frame` of stream `seed` always sees the same noise.
//
// # Safety
// `codeword` and `llrs` must be valid for `len` elements.
enum PfStatus pf_transmit(const uint8_t *codeword,
                          size_t len,
                          double snr_db,
                          double rate,
                          uint64_t seed,
                          uint64_t frame,
                          double *llrs);

// Default settings: L=2, omega=1, T_max=20, alpha=1, check-and-keep.
struct PfDecoderConfig pf_decoder_config_default(void);

// # Safety
// `code` and `config` must be live, `out` must be a valid pointer.
enum PfStatus pf_decoder_new(const struct PfCode *code,
                             const struct PfDecoderConfig *config,
                             struct PfDecoder **out);

// # Safety
// `dec` must be null or a handle from [`pf_decoder_new`] not yet freed.
void pf_decoder_free(struct PfDecoder *dec);

// Decodes one frame of `N` channel LLRs (positive favours bit 0).
//
// On return `result` describes the outcome. When it reports success the
// decoded message is written to `message`; otherwise `message` is left
// untouched. `Sclf` needs a single-partition code.
//
// # Safety
// Pointers must be valid for the given lengths; `result` must be valid.
enum PfStatus pf_decoder_decode(struct PfDecoder *dec,
                                enum PfAlgorithm algorithm,
                                const double *llrs,
                                size_t llrs_len,
                                uint8_t *message,
                                size_t message_len,
                                struct PfDecodeResult *result);

// Probability that one of `L * T_max` random sequences passes a
// `width`-bit CRC.
double pf_p_collision_trials(uint32_t width, size_t list_size, size_t t_max);

// Probability that every partition sees a collision.
//
// # Safety
// `widths` must be valid for `parts` elements and `out` must be valid.
enum PfStatus pf_p_all_partitions_collide(const uint32_t *widths,
                                          size_t parts,
                                          size_t list_size,
                                          size_t t_max,
                                          double *out);

// Probability that a random frame stops early in some partition.
//
// # Safety
// `widths` must be valid for `parts` elements and `out` must be valid.
enum PfStatus pf_p_early_termination(const uint32_t *widths,
                                     size_t parts,
                                     size_t list_size,
                                     size_t t_max,
                                     double *out);

// SCL latency in cycles for a semi-parallel decoder with `phi` processing
// elements.
//
// # Safety
// `out` must be valid.
enum PfStatus pf_scl_latency(size_t n_len, size_t phi, size_t info_size, uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLARFLIP_H */
