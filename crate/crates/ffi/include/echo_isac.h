#ifndef ECHO_ISAC_H
#define ECHO_ISAC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EisStatus {
  EIS_STATUS_OK = 0,
  // A required pointer was null.
  EIS_STATUS_NULL = 1,
  EIS_STATUS_CONFIG = 2,
  EIS_STATUS_INVALID_ARG = 3,
  EIS_STATUS_NUMERIC = 4,
  EIS_STATUS_IO = 5,
  EIS_STATUS_PANIC = 6,
} EisStatus;

typedef enum EisWindow {
  EIS_WINDOW_PREAMBLE = 0,
  EIS_WINDOW_KNOWN_FRAME = 1,
  EIS_WINDOW_BLIND = 2,
} EisWindow;

// System and modulation parameters.
typedef struct EisConfig EisConfig;

// Distribution model of the synchronization statistic.
typedef struct EisGlrt EisGlrt;

// A synthesized observation together with its ground truth.
typedef struct EisSignal EisSignal;

typedef struct EisCoupling {
  double mcrb_tau;
  double freq_var;
  double symbol_snr;
  double xi;
  double sinr_eff;
  double eta;
  double eta_eff;
  double rate_bps;
} EisCoupling;

typedef struct EisFisher {
  double a;
  double b;
  double ratio_ab;
  double ratio_ba;
} EisFisher;

typedef struct EisTruth {
  double amplitude;
  double tau_s;
  double beat_freq_hz;
  double theta_rad;
  size_t start_index;
  size_t num_samples;
} EisTruth;

typedef struct EisEstimate {
  double f_hat_hz;
  double range_hat_m;
  double theta_hat_rad;
  double tau_hat_s;
} EisEstimate;

typedef struct EisChainResult {
  double beat_freq_true_hz;
  double beat_freq_hat_hz;
  double lambda_max;
  bool detected;
  size_t start_true;
  size_t start_hat;
  size_t symbol_errors_viterbi;
  size_t symbol_errors_correlator;
  size_t data_len;
} EisChainResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *eis_last_error(void);

// Library version as a static NUL-terminated string.
const char *eis_version(void);

// New configuration with default parameters.
struct EisConfig *eis_config_new(void);

// Load a configuration file; `*out` receives a new handle.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum EisStatus eis_config_load(const char *path, struct EisConfig **out);

// # Safety
// `cfg` must come from this library and not be used afterwards. Null is ignored.
void eis_config_free(struct EisConfig *cfg);

// # Safety
// `cfg` must be a valid handle.
enum EisStatus eis_config_set_snr_db(struct EisConfig *cfg, double snr_db);

// # Safety
// `cfg` must be a valid handle.
enum EisStatus eis_config_set_beta(struct EisConfig *cfg, double beta);

// Set the CPM format. `samples_per_symbol` and `data_len` of 0 mean automatic.
//
// # Safety
// `cfg` must be a valid handle.
enum EisStatus eis_config_set_cpm(struct EisConfig *cfg,
                                  double mod_index,
                                  size_t alphabet_size,
                                  size_t preamble_len,
                                  size_t samples_per_symbol,
                                  size_t data_len);

// Check the configuration, including the phase-wrapping constraint.
//
// # Safety
// `cfg` must be a valid handle.
enum EisStatus eis_config_validate(const struct EisConfig *cfg);

// # Safety
// `cfg` must be a valid handle and `out` a valid pointer.
enum EisStatus eis_mcrb_tau(const struct EisConfig *cfg, double *out);

// # Safety
// `cfg` must be a valid handle and `out` a valid pointer.
enum EisStatus eis_crb_sensing_only(const struct EisConfig *cfg, double *out);

// Coupling chain with the frequency error at its bound.
//
// # Safety
// `cfg` must be a valid handle and `out` a valid pointer.
enum EisStatus eis_coupling(const struct EisConfig *cfg, struct EisCoupling *out);

// # Safety
// `cfg` must be a valid handle and `out` a valid pointer.
enum EisStatus eis_fisher_coefficients(const struct EisConfig *cfg, struct EisFisher *out);

// `b / a` for modulation index `h` and alphabet size `alphabet_size`.
double eis_ratio_ba(double h, size_t alphabet_size);

// # Safety
// `out` must be a valid pointer.
enum EisStatus eis_optimal_beta(double ratio_ba, double s_min, double *out);

// Frontier samples: `s_out[i] = S(beta[i])`, `c_out[i] = beta[i]`.
//
// # Safety
// `beta`, `s_out` and `c_out` must each hold `n` elements.
enum EisStatus eis_pareto(double ratio_ba,
                          const double *beta,
                          size_t n,
                          double *s_out,
                          double *c_out);

// Random frame and observation from `seed`.
//
// # Safety
// `cfg` must be a valid handle and `out` a valid pointer.
enum EisStatus eis_signal_synthesize(const struct EisConfig *cfg,
                                     uint64_t seed,
                                     struct EisSignal **out);

// # Safety
// `sig` must come from this library and not be used afterwards. Null is ignored.
void eis_signal_free(struct EisSignal *sig);

// # Safety
// `sig` must be a valid handle and `out` a valid pointer.
enum EisStatus eis_signal_truth(const struct EisSignal *sig, struct EisTruth *out);

// Copy up to `cap` samples into `re` / `im`; `*written` receives the count.
//
// # Safety
// `re` and `im` must hold `cap` elements; `sig` and `written` must be valid.
enum EisStatus eis_signal_samples(const struct EisSignal *sig,
                                  double *re,
                                  double *im,
                                  size_t cap,
                                  size_t *written);

// Beat-frequency estimate at the configured frame start.
//
// # Safety
// `sig` and `cfg` must be valid handles and `out` a valid pointer.
enum EisStatus eis_estimate(const struct EisSignal *sig,
                            const struct EisConfig *cfg,
                            enum EisWindow window,
                            struct EisEstimate *out);

// Model at residual frequency offset `eps_f_hz`.
//
// # Safety
// `cfg` must be a valid handle and `out` a valid pointer.
enum EisStatus eis_glrt_new(const struct EisConfig *cfg, double eps_f_hz, struct EisGlrt **out);

// # Safety
// `g` must come from this library and not be used afterwards. Null is ignored.
void eis_glrt_free(struct EisGlrt *g);

// Detection and false-alarm probabilities at threshold `eta`.
//
// # Safety
// `g` must be a valid handle; `pd` and `pfa` valid pointers.
enum EisStatus eis_glrt_pd_pfa(const struct EisGlrt *g, double eta, double *pd, double *pfa);

// Threshold giving per-offset false-alarm probability `pfa`.
//
// # Safety
// `g` must be a valid handle and `eta` a valid pointer.
enum EisStatus eis_glrt_threshold(const struct EisGlrt *g, double pfa, double *eta);

// One end-to-end trial: synthesis, estimation, synchronization, detection.
//
// # Safety
// `cfg` must be a valid handle and `out` a valid pointer.
enum EisStatus eis_chain_run(const struct EisConfig *cfg,
                             double pfa,
                             uint64_t seed,
                             struct EisChainResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ECHO_ISAC_H */
