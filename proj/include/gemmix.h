/*
 * gemmix: gradient EM for isotropic Gaussian mixtures, closed-form local
 * convergence bounds, and Monte-Carlo verifiers.
 *
 * Plain C interface over opaque handles. Every fallible call returns a
 * gemmix_status; on failure gemmix_last_error() describes the problem for the
 * calling thread. Arrays are caller-allocated unless a function hands back a
 * string, which the caller releases with gemmix_string_free().
 *
 * Stacked means are row-major M x d arrays (component-major).
 */
#ifndef GEMMIX_H
#define GEMMIX_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(GEMMIX_BUILDING)
#    define GEMMIX_API __declspec(dllexport)
#  else
#    define GEMMIX_API __declspec(dllimport)
#  endif
#else
#  define GEMMIX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gemmix_status {
    GEMMIX_OK = 0,
    GEMMIX_ERR_NULL = 1,             /* a required pointer was NULL */
    GEMMIX_ERR_INVALID_ARGUMENT = 2, /* malformed input, spec or config */
    GEMMIX_ERR_DOMAIN = 3,           /* formula evaluated outside its validity domain */
    GEMMIX_ERR_IO = 4,
    GEMMIX_ERR_RUNTIME = 5
} gemmix_status;

typedef enum gemmix_run_status {
    GEMMIX_RUN_CONVERGED = 0,
    GEMMIX_RUN_MAX_ITERS = 1,
    GEMMIX_RUN_DIVERGED = 2
} gemmix_run_status;

typedef enum gemmix_radius_mode {
    GEMMIX_RADIUS_EXPLICIT = 0,
    GEMMIX_RADIUS_SOLVED = 1,
    GEMMIX_RADIUS_ASYMPTOTIC = 2
} gemmix_radius_mode;

typedef enum gemmix_eps_mode {
    GEMMIX_EPS_ORIGINAL = 0,
    GEMMIX_EPS_IMPROVED = 1
} gemmix_eps_mode;

typedef struct gemmix_separation {
    double r_min;
    double r_max;
    double kappa;
    size_t d0;
    double max_center_norm;
} gemmix_separation;

typedef struct gemmix_mixture gemmix_mixture;
typedef struct gemmix_sample gemmix_sample;
typedef struct gemmix_trajectory gemmix_trajectory;
typedef struct gemmix_specs gemmix_specs;

/* ---- library ---------------------------------------------------------- */

GEMMIX_API const char* gemmix_version(void);
/* Message for the most recent failure on this thread ("" if none). */
GEMMIX_API const char* gemmix_last_error(void);
/* Worker threads for Monte-Carlo loops; 0 selects the hardware count. */
GEMMIX_API void gemmix_set_threads(unsigned threads);
GEMMIX_API void gemmix_string_free(char* s);

/* ---- mixtures ---------------------------------------------------------- */

GEMMIX_API gemmix_status gemmix_mixture_create(const double* weights, const double* means, size_t components,
                                               size_t dim, gemmix_mixture** out);
GEMMIX_API gemmix_status gemmix_mixture_from_json(const char* json, gemmix_mixture** out);
GEMMIX_API gemmix_status gemmix_mixture_load(const char* path, gemmix_mixture** out);
/* Planar-arc layout with the given R_min and R_max / R_min ratio, centered.
 * weights may be NULL for balanced components. */
GEMMIX_API gemmix_status gemmix_mixture_generate(size_t components, size_t dim, double r_min, double ratio,
                                                 const double* weights, gemmix_mixture** out);
GEMMIX_API void gemmix_mixture_destroy(gemmix_mixture* mixture);

GEMMIX_API gemmix_status gemmix_mixture_shape(const gemmix_mixture* mixture, size_t* components, size_t* dim);
GEMMIX_API gemmix_status gemmix_mixture_weights(const gemmix_mixture* mixture, double* out);
GEMMIX_API gemmix_status gemmix_mixture_means(const gemmix_mixture* mixture, double* out);
GEMMIX_API gemmix_status gemmix_mixture_to_json(const gemmix_mixture* mixture, char** out);
GEMMIX_API gemmix_status gemmix_mixture_center(const gemmix_mixture* mixture, gemmix_mixture** out);
GEMMIX_API gemmix_status gemmix_separation_stats(const gemmix_mixture* mixture, gemmix_separation* out);
GEMMIX_API gemmix_status gemmix_responsibilities(const gemmix_mixture* mixture, const double* x, double* out);
GEMMIX_API gemmix_status gemmix_log_density(const gemmix_mixture* mixture, const double* x, double* out);
GEMMIX_API gemmix_status gemmix_mixture_subgaussian_norm(const gemmix_mixture* mixture, double* out);

/* ---- samples ----------------------------------------------------------- */

GEMMIX_API gemmix_status gemmix_sample_draw(const gemmix_mixture* mixture, size_t n, uint64_t seed,
                                            gemmix_sample** out);
GEMMIX_API void gemmix_sample_destroy(gemmix_sample* sample);
GEMMIX_API gemmix_status gemmix_sample_shape(const gemmix_sample* sample, size_t* n, size_t* dim);
GEMMIX_API gemmix_status gemmix_sample_points(const gemmix_sample* sample, double* out);
/* 0-based component labels; diagnostics only. */
GEMMIX_API gemmix_status gemmix_sample_labels(const gemmix_sample* sample, int* out);
GEMMIX_API gemmix_status gemmix_sample_write_csv(const gemmix_sample* sample, const char* path);

/* ---- gradients and EM -------------------------------------------------- */

GEMMIX_API gemmix_status gemmix_oracle_gradient(const gemmix_mixture* mixture, const double* means_est, double* out);
/* std_err may be NULL; otherwise it receives M per-component standard errors. */
GEMMIX_API gemmix_status gemmix_population_gradient(const gemmix_mixture* mixture, const double* means_est,
                                                    size_t mc_samples, uint64_t seed, double* grad, double* std_err);
/* Weights are taken from `mixture`; the points from `sample`. */
GEMMIX_API gemmix_status gemmix_sample_gradient(const gemmix_sample* sample, const gemmix_mixture* mixture,
                                                const double* means_est, double* out);
/* result[k] is the true component matched to estimate k. */
GEMMIX_API gemmix_status gemmix_match_components(const double* estimates, const double* truth, size_t components,
                                                 size_t dim, size_t* result);

/* step_size <= 0 selects 2 / (pi_min + pi_max). */
GEMMIX_API gemmix_status gemmix_run_population_em(const gemmix_mixture* mixture, const double* init, double step_size,
                                                  size_t max_iters, double tol, size_t mc_samples, uint64_t seed,
                                                  gemmix_trajectory** out);
GEMMIX_API gemmix_status gemmix_run_sample_em(const gemmix_mixture* mixture, const gemmix_sample* sample,
                                              const double* init, double step_size, size_t max_iters, double tol,
                                              gemmix_trajectory** out);
/* Streaming EM with step c_s / (t + 2) and projection onto B(mu_i^0, radius).
 * step_constant <= 0 selects the default 3 / (2 xi). */
GEMMIX_API gemmix_status gemmix_run_stochastic_em(const gemmix_mixture* mixture, const double* init,
                                                  double projection_radius, size_t batch, size_t max_iters,
                                                  double step_constant, uint64_t seed, gemmix_trajectory** out);
GEMMIX_API void gemmix_trajectory_destroy(gemmix_trajectory* trajectory);
/* Number of records (iterations + 1). */
GEMMIX_API gemmix_status gemmix_trajectory_length(const gemmix_trajectory* trajectory, size_t* out);
GEMMIX_API gemmix_status gemmix_trajectory_status(const gemmix_trajectory* trajectory, gemmix_run_status* out);
GEMMIX_API gemmix_status gemmix_trajectory_errors(const gemmix_trajectory* trajectory, double* out);
GEMMIX_API gemmix_status gemmix_trajectory_final_means(const gemmix_trajectory* trajectory, double* out);
GEMMIX_API gemmix_status gemmix_trajectory_csv(const gemmix_trajectory* trajectory, char** out);

/* ---- closed-form bounds ------------------------------------------------ */

GEMMIX_API gemmix_status gemmix_gamma_gs(const gemmix_separation* stats, size_t components, double radius_a,
                                         double* out);
GEMMIX_API gemmix_status gemmix_zeta_rate(double pi_min, double pi_max, double gamma, double* zeta,
                                          int* contractive);
GEMMIX_API gemmix_status gemmix_contraction_radius(const gemmix_separation* stats, size_t components, double pi_min,
                                                   gemmix_radius_mode mode, double c_a, double* out);
GEMMIX_API gemmix_status gemmix_eps_unif(double r_max, double kappa, size_t components, size_t dim, size_t n,
                                         double constant_c, gemmix_eps_mode mode, double* out);
GEMMIX_API gemmix_status gemmix_restart_count(size_t components, double radius_a, size_t dim, double delta,
                                              size_t* out);
/* Full bound report for a mixture, as JSON. */
GEMMIX_API gemmix_status gemmix_bound_report(const gemmix_mixture* mixture, gemmix_radius_mode mode, size_t n,
                                             char** out_json);

/* ---- Gaussian utilities ------------------------------------------------ */

GEMMIX_API gemmix_status gemmix_gaussian_norm_moment(int p, size_t dim, double sigma, double* out);
GEMMIX_API gemmix_status gemmix_gaussian_norm_tail(double r, size_t dim, double* out);
GEMMIX_API gemmix_status gemmix_sphere_covering_bound(size_t dim, double eps, double* out);

/* ---- experiments ------------------------------------------------------- */

/* Parses a spec file holding one experiment or {"experiments": [...]}. */
GEMMIX_API gemmix_status gemmix_specs_load(const char* path, gemmix_specs** out);
GEMMIX_API gemmix_status gemmix_specs_parse(const char* json, gemmix_specs** out);
GEMMIX_API void gemmix_specs_destroy(gemmix_specs* specs);
GEMMIX_API gemmix_status gemmix_specs_count(const gemmix_specs* specs, size_t* out);
/* Kind name of experiment `index` ("convergence", "bounds", ...). */
GEMMIX_API gemmix_status gemmix_specs_kind(const gemmix_specs* specs, size_t index, char** out);
GEMMIX_API gemmix_status gemmix_specs_set_seed(gemmix_specs* specs, uint64_t seed);
GEMMIX_API gemmix_status gemmix_specs_set_against_best_fixed_point(gemmix_specs* specs, int enabled);
/* Runs one experiment, writing artifacts into out_dir. summary_json receives
 * {"name", "kind", "artifacts", "summary", "report"}; it may be NULL. */
GEMMIX_API gemmix_status gemmix_run_experiment(const gemmix_specs* specs, size_t index, const char* out_dir,
                                               char** summary_json);
/* Runs all experiments and writes out_dir/manifest.json. *failures receives
 * the number of experiments that did not complete. */
GEMMIX_API gemmix_status gemmix_run_suite(const gemmix_specs* specs, const char* out_dir, char** manifest_json,
                                          size_t* failures);

#ifdef __cplusplus
}
#endif

#endif /* GEMMIX_H */
