#ifndef FUZZREG_H
#define FUZZREG_H

#include <stddef.h>
#include <stdint.h>

#define FZR_OK 0

#define FZR_ERR_NULL_POINTER 1

#define FZR_ERR_INVALID_PARAMETER 2

#define FZR_ERR_DOMAIN 3

#define FZR_ERR_DIMENSION 4

// Quadrature, conversion, convergence or approximation failure.
#define FZR_ERR_NUMERICAL 5

#define FZR_ERR_CHAIN_ABORTED 6

#define FZR_ERR_INSUFFICIENT_DATA 7

#define FZR_ERR_PARSE 8

#define FZR_ERR_IO 9

// A Rust panic was caught at the boundary.
#define FZR_ERR_PANIC 10

#define FZR_ERR_BUFFER_TOO_SMALL 11

#define FZR_FAMILY_BETA 0

#define FZR_FAMILY_LOGITNORMAL 1

#define FZR_FAMILY_KUMARASWAMY 2

#define FZR_FAMILY_LOGNORMAL 3

#define FZR_FAMILY_LOGBILAL 4

#define FZR_FAMILY_TRUNCNORMAL 5

// Use the family's default link.
#define FZR_LINK_DEFAULT -1

#define FZR_LINK_LOGIT 0

#define FZR_LINK_LOG 1

#define FZR_LINK_IDENTITY 2

#define FZR_FORMAT_BETA_FUZZY 0

#define FZR_FORMAT_TRAPEZOIDAL 1

// Observed fuzzy data with its design matrix.
typedef struct FzrDataset FzrDataset;

// Posterior draws of all chains.
typedef struct FzrFit FzrFit;

// Family, link, bounds and prior.
typedef struct FzrModel FzrModel;

// Sampler settings; obtain defaults from `fzr_sampler_config_default`.
typedef struct FzrSamplerConfig {
  size_t chains;
  size_t samples;
  size_t burnin;
  uint64_t seed;
  double eps;
  // Non-zero enables the Metropolis–Hastings correction.
  int32_t mh_correct;
  size_t sn_refresh;
  // Non-zero runs chains on a thread pool.
  int32_t parallel;
} FzrSamplerConfig;

// Posterior summary of one parameter.
typedef struct FzrParamSummary {
  double mean;
  double sd;
  double hpdi_lower;
  double hpdi_upper;
  double rhat;
  double ess_bulk;
  double ess_tail;
} FzrParamSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *fzr_version(void);

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length in bytes.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t fzr_last_error(char *buf, size_t len);

// Builds a dataset from modes `m`, precisions `s` (length `n`) and a
// row-major `n × n_coef` design matrix `x` (include the intercept column).
//
// # Safety
// Pointers must reference arrays of the stated lengths; `out` must be writable.
int32_t fzr_dataset_new(const double *m,
                        const double *s,
                        size_t n,
                        const double *x,
                        size_t n_coef,
                        double lb,
                        double ub,
                        struct FzrDataset **out);

// Reads a CSV data file (`FZR_FORMAT_*`); an intercept column is added.
// Bounds are derived from the file; covariates are z-scored when
// `standardize` is non-zero.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
int32_t fzr_dataset_read_csv(const char *path,
                             int32_t format,
                             int32_t standardize,
                             struct FzrDataset **out);

// Number of units and of coefficients.
//
// # Safety
// `data` must be a live handle; out-pointers must be writable.
int32_t fzr_dataset_shape(const struct FzrDataset *data, size_t *n, size_t *n_coef);

// Shared bounds of the dataset.
//
// # Safety
// `data` must be a live handle; out-pointers must be writable.
int32_t fzr_dataset_bounds(const struct FzrDataset *data, double *lb, double *ub);

// # Safety
// `data` must be null or a handle from this library, freed at most once.
void fzr_dataset_free(struct FzrDataset *data);

// Model with default priors; `link` may be `FZR_LINK_DEFAULT`.
//
// # Safety
// `out` must be writable.
int32_t fzr_model_new(int32_t family_code,
                      int32_t link_code,
                      double lb,
                      double ub,
                      size_t n_coef,
                      struct FzrModel **out);

// Normal priors: β ~ N(beta_mean, beta_sd²), φ ~ N(phi_mean, phi_sd²).
//
// # Safety
// `model` must be a live handle.
int32_t fzr_model_set_prior(struct FzrModel *model,
                            double beta_mean,
                            double beta_sd,
                            double phi_mean,
                            double phi_sd);

// # Safety
// `model` must be null or a handle from this library, freed at most once.
void fzr_model_free(struct FzrModel *model);

// Default sampler settings.
//
// # Safety
// `out` must be writable.
int32_t fzr_sampler_config_default(struct FzrSamplerConfig *out);

// Runs the sampler.
//
// # Safety
// `data`, `model` and `cfg` must be live; `out` must be writable.
int32_t fzr_fit(const struct FzrDataset *data,
                const struct FzrModel *model,
                const struct FzrSamplerConfig *cfg,
                struct FzrFit **out);

// Chains, retained draws per chain and parameters per draw (coefficients, then φ).
//
// # Safety
// `fit` must be live; out-pointers must be writable.
int32_t fzr_fit_shape(const struct FzrFit *fit, size_t *chains, size_t *draws, size_t *params);

// Copies the draws of `chain` row-major (draws × params) into `buf`.
//
// # Safety
// `fit` must be live; `buf` must hold `len` doubles.
int32_t fzr_fit_draws(const struct FzrFit *fit, size_t chain, double *buf, size_t len);

// Posterior summary of parameter `param` over all chains.
//
// # Safety
// `fit` must be live; `out` must be writable.
int32_t fzr_fit_summary(const struct FzrFit *fit, size_t param, struct FzrParamSummary *out);

// # Safety
// `fit` must be null or a handle from this library, freed at most once.
void fzr_fit_free(struct FzrFit *fit);

// Scaling factor c = E[1/(S + 1)] for S ~ Gamma(shape, scale).
//
// # Safety
// `out` must be writable.
int32_t fzr_c_factor(double alpha_s, double beta_s, double *out);

// Centroid, Kaufman index and α-cut of a Beta fuzzy number.
//
// # Safety
// Out-pointers must be writable.
int32_t fzr_bfn_statistics(double m,
                           double s,
                           double lb,
                           double ub,
                           double alpha,
                           double *centroid,
                           double *kaufman,
                           double *cut_lower,
                           double *cut_upper);

// Beta fuzzy number on [a1, a4] closest in L² to the trapezoid.
//
// # Safety
// Out-pointers must be writable.
int32_t fzr_trapezoid_to_beta(double a1, double a2, double a3, double a4, double *m, double *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FUZZREG_H */
