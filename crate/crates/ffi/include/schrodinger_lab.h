#ifndef SCHRODINGER_LAB_H
#define SCHRODINGER_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_ARGUMENT = 2,
  SL_STATUS_RESOURCE_LIMIT = 3,
  SL_STATUS_SUP_UNRESOLVED = 4,
  SL_STATUS_DOMAIN = 5,
  SL_STATUS_CONFIG = 6,
  SL_STATUS_DIVERGENT_CONSTANT = 7,
  SL_STATUS_EMPTY_ENSEMBLE = 8,
  SL_STATUS_NON_COMPACT = 9,
  SL_STATUS_IO = 10,
  SL_STATUS_PANIC = 11,
} SlStatus;

typedef enum SlModel {
  SL_MODEL_CIRCLE = 0,
  SL_MODEL_TORUS2 = 1,
  SL_MODEL_TORUS3 = 2,
  SL_MODEL_SPHERE2 = 3,
  SL_MODEL_SPHERE_ZONAL3 = 4,
  SL_MODEL_HYPERBOLIC_RADIAL3 = 5,
} SlModel;

/**
 * A spectral coefficient vector over a mode table.
 */
typedef struct SlField SlField;

/**
 * An enumerated eigenmode table.
 */
typedef struct SlModeTable SlModeTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Enumerate all modes with frequency λ_j at most `cutoff`.
 *
 * # Safety
 * `out_table` must be valid for writes.
 */
enum SlStatus sl_mode_table_new(enum SlModel model, double cutoff, struct SlModeTable **out_table);

/**
 * # Safety
 * `table` must come from [`sl_mode_table_new`] and not be freed twice.
 */
void sl_mode_table_free(struct SlModeTable *table);

/**
 * Number of modes, or 0 for a null handle.
 *
 * # Safety
 * `table` must be null or a live handle.
 */
size_t sl_mode_table_len(const struct SlModeTable *table);

/**
 * # Safety
 * `table` must be a live handle and `out_value` valid for writes.
 */
enum SlStatus sl_mode_table_eigenvalue(const struct SlModeTable *table,
                                       size_t index,
                                       double *out_value);

/**
 * Gaussian random field normalized in `H^alpha`.
 *
 * # Safety
 * `table` must be a live handle and `out_field` valid for writes.
 */
enum SlStatus sl_field_random(const struct SlModeTable *table,
                              double alpha,
                              uint64_t seed,
                              struct SlField **out_field);

/**
 * Field from split real and imaginary coefficient arrays of the table length.
 *
 * # Safety
 * `re` and `im` must point to `len` readable doubles.
 */
enum SlStatus sl_field_from_coeffs(const struct SlModeTable *table,
                                   const double *re,
                                   const double *im,
                                   size_t len,
                                   struct SlField **out_field);

/**
 * # Safety
 * `field` must come from this library and not be freed twice.
 */
void sl_field_free(struct SlField *field);

/**
 * Number of coefficients, or 0 for a null handle.
 *
 * # Safety
 * `field` must be null or a live handle.
 */
size_t sl_field_len(const struct SlField *field);

/**
 * Copy coefficients into caller buffers of exactly the field length.
 *
 * # Safety
 * `re` and `im` must point to `len` writable doubles.
 */
enum SlStatus sl_field_coeffs(const struct SlField *field, double *re, double *im, size_t len);

/**
 * `e^{-itΔ} f` as a new field.
 *
 * # Safety
 * `field` must be a live handle and `out_field` valid for writes.
 */
enum SlStatus sl_propagate(const struct SlField *field, double t, struct SlField **out_field);

/**
 * Coefficient l² norm, or NaN for a null handle.
 *
 * # Safety
 * `field` must be null or a live handle.
 */
double sl_field_l2_norm(const struct SlField *field);

/**
 * `‖f‖_{H^alpha}`, or NaN for a null handle.
 *
 * # Safety
 * `field` must be null or a live handle.
 */
double sl_field_sobolev_norm(const struct SlField *field, double alpha);

/**
 * Evaluate the field at a point given by its chart coordinates.
 *
 * # Safety
 * `coords` must point to `ncoords` doubles; `out_re` and `out_im` valid for writes.
 */
enum SlStatus sl_field_eval(const struct SlField *field,
                            const double *coords,
                            size_t ncoords,
                            double *out_re,
                            double *out_im);

/**
 * Certified enclosure `[lo, hi]` of `sup_{t∈[0,1]} |e^{-itΔ} f(x)|`.
 *
 * On `SupUnresolved` the best enclosure found is still written.
 *
 * # Safety
 * `coords` must point to `ncoords` doubles; `out_lo` and `out_hi` valid for writes.
 */
enum SlStatus sl_certified_sup(const struct SlField *field,
                               const double *coords,
                               size_t ncoords,
                               double tol,
                               double *out_lo,
                               double *out_hi);

/**
 * `‖e^{-itΔ} f‖_{L^p([0,1]×M)}` on automatically resolved grids.
 *
 * # Safety
 * `field` must be a live handle and `out_value` valid for writes.
 */
enum SlStatus sl_spacetime_norm(const struct SlField *field, double p, double *out_value);

/**
 * Copy the calling thread's last error message, NUL-terminated, into `buf`.
 *
 * Returns the message length in bytes excluding the terminator. A call
 * with a null `buf` or zero `cap` only reports the length.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t sl_last_error_message(char *buf, size_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCHRODINGER_LAB_H */
