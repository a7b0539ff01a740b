#ifndef EDGECD_H
#define EDGECD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum EdgecdStatus {
  EDGECD_STATUS_OK = 0,
  EDGECD_STATUS_INVALID_ARGUMENT = 1,
  EDGECD_STATUS_VALIDATION = 2,
  EDGECD_STATUS_NUMERICAL = 3,
  EDGECD_STATUS_NULL_POINTER = 4,
  EDGECD_STATUS_BUFFER_TOO_SMALL = 5,
  EDGECD_STATUS_PANIC = 6,
  EDGECD_STATUS_IO = 7,
} EdgecdStatus;

// Hopping schedule family.
typedef enum EdgecdScheduleKind {
  // `t1,2 = t0 (1 ± cos Ωt)`.
  EDGECD_SCHEDULE_KIND_COSINE = 0,
  // Cubic polynomial ramp over `T = π/Ω`.
  EDGECD_SCHEDULE_KIND_CUBIC = 1,
  // `t1 = t0 cos(Ωt/2)`, `t2 = t0 sin(Ωt/2)`.
  EDGECD_SCHEDULE_KIND_TRIG = 2,
} EdgecdScheduleKind;

// A chain together with its hopping schedule.
typedef struct EdgecdChain EdgecdChain;

// A Pauli term list.
typedef struct EdgecdTerms EdgecdTerms;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *edgecd_version(void);

// Writes the last error message of this thread into `buf` (NUL
// terminated). An empty string means the last call succeeded.
//
// # Safety
// `buf` must point to `len` writable bytes.
enum EdgecdStatus edgecd_last_error(char *buf, size_t len);

// Creates a chain of `sites` sites (odd, at least 3) with energy scale `t0`
// and ramp rate `omega` (`T = π/Ω`).
//
// # Safety
// `out` must be a valid pointer; on success it receives a handle to free
// with [`edgecd_chain_free`].
enum EdgecdStatus edgecd_chain_new(size_t sites,
                                   double t0,
                                   double omega,
                                   enum EdgecdScheduleKind kind,
                                   struct EdgecdChain **out);

// Releases a chain handle. Null is ignored.
//
// # Safety
// `chain` must come from [`edgecd_chain_new`] and not be used afterwards.
void edgecd_chain_free(struct EdgecdChain *chain);

// Number of sites, or 0 for a null handle.
//
// # Safety
// `chain` must be null or a live handle.
size_t edgecd_chain_sites(const struct EdgecdChain *chain);

// Protocol time `T`, or NaN for a null handle.
//
// # Safety
// `chain` must be null or a live handle.
double edgecd_chain_horizon(const struct EdgecdChain *chain);

// Hoppings `t1(t)`, `t2(t)`.
//
// # Safety
// `chain` must be a live handle; `t1` and `t2` valid pointers.
enum EdgecdStatus edgecd_hoppings(const struct EdgecdChain *chain,
                                  double t,
                                  double *t1,
                                  double *t2);

// Real amplitudes of the normalized zero mode at time `t`; `len` must be
// at least the site count.
//
// # Safety
// `chain` must be a live handle; `buf` must point to `len` writable doubles.
enum EdgecdStatus edgecd_zero_mode(const struct EdgecdChain *chain,
                                   double t,
                                   double *buf,
                                   size_t len);

// Converged transfer fidelity `F(T)` under `H0` plus the CD variant named
// by `cd` (`none`, `full2`, `suba2`, `nnn1`, `equal1`, ...).
//
// # Safety
// `chain` must be a live handle; `cd` a NUL-terminated string; `fidelity`
// a valid pointer.
enum EdgecdStatus edgecd_transfer_fidelity(const struct EdgecdChain *chain,
                                           const char *cd,
                                           double *fidelity);

// Closed-form gauge coefficients `α_1..α_order` (order 1 or 2) for a chain
// of `n_cells` unit cells at hoppings `(t1, t2)`.
//
// # Safety
// `out` must point to `len >= order` writable doubles.
enum EdgecdStatus edgecd_alpha_closed_form(size_t n_cells,
                                           double t1,
                                           double t2,
                                           size_t order,
                                           double *out,
                                           size_t len);

// Pauli decomposition of one Hamiltonian family: `part` is `h0`, `ht1`,
// `ht2`, `kappa` (unit NNN couplings) or `rice-mele`.
//
// # Safety
// `chain` must be a live handle; `part` a NUL-terminated string; `out` a
// valid pointer receiving a handle to free with [`edgecd_terms_free`].
enum EdgecdStatus edgecd_decompose(const struct EdgecdChain *chain,
                                   const char *part,
                                   double t1,
                                   double t2,
                                   struct EdgecdTerms **out);

// Number of terms, or 0 for a null handle.
//
// # Safety
// `terms` must be null or a live handle.
size_t edgecd_terms_len(const struct EdgecdTerms *terms);

// Coefficient and label of term `index`; the label is written NUL
// terminated into `label` (one letter per qubit, highest qubit first).
//
// # Safety
// `terms` must be a live handle; `coefficient` a valid pointer; `label`
// must point to `label_len` writable bytes.
enum EdgecdStatus edgecd_terms_get(const struct EdgecdTerms *terms,
                                   size_t index,
                                   double *coefficient,
                                   char *label,
                                   size_t label_len);

// Releases a term list. Null is ignored.
//
// # Safety
// `terms` must come from [`edgecd_decompose`] and not be used afterwards.
void edgecd_terms_free(struct EdgecdTerms *terms);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EDGECD_H */
