#ifndef VLASER_H
#define VLASER_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VlStatus {
  VL_STATUS_OK = 0,
  VL_STATUS_NULL_POINTER = 1,
  VL_STATUS_INVALID_ARGUMENT = 2,
  VL_STATUS_CONFIG = 3,
  /**
   * The moments oscillate; there is no steady state.
   */
  VL_STATUS_LIMIT_CYCLE = 4,
  VL_STATUS_SOLVER = 5,
  VL_STATUS_IO = 6,
  VL_STATUS_PANIC = 7,
} VlStatus;

/**
 * Model parameters together with the unit system of their preset.
 */
typedef struct VlParams VlParams;

/**
 * A normalized spectrum on its frequency grid.
 */
typedef struct VlSpectrum VlSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t vl_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *vl_version(void);

/**
 * Creates parameters from a preset name ("Sr88", "Yb174").
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum VlStatus vl_params_preset(const char *name, struct VlParams **out);

/**
 * # Safety
 * `p` must come from [`vl_params_preset`] and not be used afterwards.
 */
void vl_params_free(struct VlParams *p);

/**
 * Sets one parameter from a value with unit, e.g. ("delta2", "5 Gamma3")
 * or ("n_atoms", "50000").
 *
 * # Safety
 * `p` must be a live handle; strings must be NUL-terminated.
 */
enum VlStatus vl_params_set(struct VlParams *p, const char *name, const char *value);

/**
 * Reads one parameter in internal units (Γ₃ = 1; atom count for n_atoms).
 *
 * # Safety
 * `p` must be a live handle; `name` NUL-terminated; `out` writable.
 */
enum VlStatus vl_params_get(const struct VlParams *p, const char *name, double *out);

/**
 * Steady inversion ⟨σ₂₂⟩ − ⟨σ₁₁⟩ of one driven atom.
 *
 * # Safety
 * `p` must be a live handle; `out` writable.
 */
enum VlStatus vl_steady_inversion(const struct VlParams *p, double *out);

/**
 * Steady photon number and per-atom inversion of the N-atom laser.
 *
 * # Safety
 * `p` must be a live handle; outputs writable.
 */
enum VlStatus vl_laser_steady(const struct VlParams *p, double *photons, double *inversion);

/**
 * Cavity output spectrum of the N-atom laser.
 *
 * # Safety
 * `p` must be a live handle; `out` writable.
 */
enum VlStatus vl_laser_spectrum(const struct VlParams *p, struct VlSpectrum **out);

/**
 * Fluorescence spectrum of one driven atom around the narrow line.
 *
 * # Safety
 * `p` must be a live handle; `out` writable.
 */
enum VlStatus vl_single_atom_spectrum(const struct VlParams *p, struct VlSpectrum **out);

/**
 * Number of grid points of a spectrum (0 for a null handle).
 *
 * # Safety
 * `s` must be null or a live handle.
 */
size_t vl_spectrum_len(const struct VlSpectrum *s);

/**
 * Copies up to `len` points: offsets from the narrow line (units of Γ₂)
 * and peak-normalized values.
 *
 * # Safety
 * `s` must be a live handle; `omega` and `value` must hold `len` doubles.
 */
enum VlStatus vl_spectrum_data(const struct VlSpectrum *s,
                               double *omega,
                               double *value,
                               size_t len);

/**
 * FWHM and peak offset of the dominant line, both in units of Γ₂.
 *
 * # Safety
 * `s` must be a live handle; outputs writable.
 */
enum VlStatus vl_spectrum_peak(const struct VlSpectrum *s, double *fwhm, double *peak);

/**
 * # Safety
 * `s` must come from a spectrum constructor and not be used afterwards.
 */
void vl_spectrum_free(struct VlSpectrum *s);

/**
 * Doppler FWHM (rad/s) for thermal energy `kbt` (J), angular frequency
 * `omega` (rad/s) and mass (kg).
 *
 * # Safety
 * `out` must be writable.
 */
enum VlStatus vl_doppler_broadening(double kbt, double omega, double mass, double *out);

/**
 * Runs a config file into `out_root/<config stem>`. `failed` receives the
 * number of failed points.
 *
 * # Safety
 * Strings must be NUL-terminated; `failed` must be null or writable.
 */
enum VlStatus vl_run_config(const char *config, const char *out_root, bool force, size_t *failed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VLASER_H */
