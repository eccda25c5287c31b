#include "gemmix.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "gemmix/bounds.hpp"
#include "gemmix/em.hpp"
#include "gemmix/experiment_spec.hpp"
#include "gemmix/experiments.hpp"
#include "gemmix/gaussian_utils.hpp"
#include "gemmix/matching.hpp"
#include "gemmix/mixture.hpp"
#include "gemmix/parallel.hpp"

struct gemmix_mixture {
    gemmix::MixtureConfig config;
};

struct gemmix_sample {
    gemmix::Sample sample;
};

struct gemmix_trajectory {
    gemmix::Trajectory trajectory;
};

struct gemmix_specs {
    std::vector<gemmix::ExperimentSpec> specs;
};

namespace {

thread_local std::string g_last_error;

gemmix_status fail(gemmix_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

// Runs `body` and translates exceptions into status codes.
template <typename Body>
gemmix_status guarded(Body&& body) {
    try {
        g_last_error.clear();
        body();
        return GEMMIX_OK;
    } catch (const std::domain_error& e) {
        return fail(GEMMIX_ERR_DOMAIN, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(GEMMIX_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::out_of_range& e) {
        return fail(GEMMIX_ERR_INVALID_ARGUMENT, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(GEMMIX_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::ios_base::failure& e) {
        return fail(GEMMIX_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(GEMMIX_ERR_RUNTIME, e.what());
    } catch (...) {
        return fail(GEMMIX_ERR_RUNTIME, "unknown error");
    }
}

#define GEMMIX_REQUIRE(ptr)                                               \
    do {                                                                  \
        if ((ptr) == nullptr) return fail(GEMMIX_ERR_NULL, #ptr " is NULL"); \
    } while (0)

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

gemmix::Means means_from(const double* data, std::size_t m, std::size_t d) {
    return gemmix::Means(m, d, std::vector<double>(data, data + m * d));
}

void copy_out(const gemmix::Matrix& mat, double* out) { std::memcpy(out, mat.flat().data(), mat.flat().size() * sizeof(double)); }

gemmix::SeparationStats stats_from(const gemmix_separation& s) {
    return {s.r_min, s.r_max, s.kappa, s.d0, s.max_center_norm};
}

gemmix::EmOptions em_options(double step_size, std::size_t max_iters, double tol) {
    gemmix::EmOptions o;
    if (step_size > 0.0) o.step_size = step_size;
    o.max_iters = max_iters;
    o.tol = tol;
    return o;
}

gemmix::RadiusMode radius_mode(gemmix_radius_mode mode) {
    switch (mode) {
        case GEMMIX_RADIUS_EXPLICIT: return gemmix::RadiusMode::explicit_gs;
        case GEMMIX_RADIUS_SOLVED: return gemmix::RadiusMode::solved;
        case GEMMIX_RADIUS_ASYMPTOTIC: return gemmix::RadiusMode::asymptotic;
    }
    throw std::invalid_argument("unknown radius mode");
}

}  // namespace

extern "C" {

const char* gemmix_version(void) { return "1.0.0"; }

const char* gemmix_last_error(void) { return g_last_error.c_str(); }

void gemmix_set_threads(unsigned threads) { gemmix::set_thread_count(threads); }

void gemmix_string_free(char* s) { std::free(s); }

// ---- mixtures

gemmix_status gemmix_mixture_create(const double* weights, const double* means, size_t components, size_t dim,
                                    gemmix_mixture** out) {
    GEMMIX_REQUIRE(weights);
    GEMMIX_REQUIRE(means);
    GEMMIX_REQUIRE(out);
    return guarded([&] {
        *out = new gemmix_mixture{gemmix::MixtureConfig(std::vector<double>(weights, weights + components),
                                                        means_from(means, components, dim))};
    });
}

gemmix_status gemmix_mixture_from_json(const char* json, gemmix_mixture** out) {
    GEMMIX_REQUIRE(json);
    GEMMIX_REQUIRE(out);
    return guarded([&] {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(json);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
        }
        *out = new gemmix_mixture{gemmix::MixtureConfig::from_json(j)};
    });
}

gemmix_status gemmix_mixture_load(const char* path, gemmix_mixture** out) {
    GEMMIX_REQUIRE(path);
    GEMMIX_REQUIRE(out);
    return guarded([&] { *out = new gemmix_mixture{gemmix::MixtureConfig::load(path)}; });
}

gemmix_status gemmix_mixture_generate(size_t components, size_t dim, double r_min, double ratio, const double* weights,
                                      gemmix_mixture** out) {
    GEMMIX_REQUIRE(out);
    return guarded([&] {
        gemmix::GeneratorSpec g;
        g.components = components;
        g.dim = dim;
        g.r_min = r_min;
        g.ratio = ratio;
        if (weights) g.weights.assign(weights, weights + components);
        *out = new gemmix_mixture{gemmix::generate_config(g)};
    });
}

void gemmix_mixture_destroy(gemmix_mixture* mixture) { delete mixture; }

gemmix_status gemmix_mixture_shape(const gemmix_mixture* mixture, size_t* components, size_t* dim) {
    GEMMIX_REQUIRE(mixture);
    if (components) *components = mixture->config.components();
    if (dim) *dim = mixture->config.dim();
    return GEMMIX_OK;
}

gemmix_status gemmix_mixture_weights(const gemmix_mixture* mixture, double* out) {
    GEMMIX_REQUIRE(mixture);
    GEMMIX_REQUIRE(out);
    const auto& w = mixture->config.weights();
    std::memcpy(out, w.data(), w.size() * sizeof(double));
    return GEMMIX_OK;
}

gemmix_status gemmix_mixture_means(const gemmix_mixture* mixture, double* out) {
    GEMMIX_REQUIRE(mixture);
    GEMMIX_REQUIRE(out);
    copy_out(mixture->config.means(), out);
    return GEMMIX_OK;
}

gemmix_status gemmix_mixture_to_json(const gemmix_mixture* mixture, char** out) {
    GEMMIX_REQUIRE(mixture);
    GEMMIX_REQUIRE(out);
    return guarded([&] { *out = copy_string(mixture->config.to_json().dump()); });
}

gemmix_status gemmix_mixture_center(const gemmix_mixture* mixture, gemmix_mixture** out) {
    GEMMIX_REQUIRE(mixture);
    GEMMIX_REQUIRE(out);
    return guarded([&] { *out = new gemmix_mixture{gemmix::center_means(mixture->config)}; });
}

gemmix_status gemmix_separation_stats(const gemmix_mixture* mixture, gemmix_separation* out) {
    GEMMIX_REQUIRE(mixture);
    GEMMIX_REQUIRE(out);
    return guarded([&] {
        const auto s = gemmix::separation_stats(mixture->config);
        *out = {s.r_min, s.r_max, s.kappa, s.d0, s.max_center_norm};
    });
}

gemmix_status gemmix_responsibilities(const gemmix_mixture* mixture, const double* x, double* out) {
    GEMMIX_REQUIRE(mixture);
    GEMMIX_REQUIRE(x);
    GEMMIX_REQUIRE(out);
    return guarded([&] {
        const auto w = gemmix::responsibilities(mixture->config, std::span<const double>(x, mixture->config.dim()));
        std::memcpy(out, w.data(), w.size() * sizeof(double));
    });
}

gemmix_status gemmix_log_density(const gemmix_mixture* mixture, const double* x, double* out) {
    GEMMIX_REQUIRE(mixture);
    GEMMIX_REQUIRE(x);
    GEMMIX_REQUIRE(out);
    return guarded(
        [&] { *out = gemmix::log_density(mixture->config, std::span<const double>(x, mixture->config.dim())); });
}

gemmix_status gemmix_mixture_subgaussian_norm(const gemmix_mixture* mixture, double* out) {
    GEMMIX_REQUIRE(mixture);
    GEMMIX_REQUIRE(out);
    return guarded([&] { *out = gemmix::mixture_subgaussian_norm(mixture->config); });
}

// ---- samples

gemmix_status gemmix_sample_draw(const gemmix_mixture* mixture, size_t n, uint64_t seed, gemmix_sample** out) {
    GEMMIX_REQUIRE(mixture);
    GEMMIX_REQUIRE(out);
    return guarded([&] { *out = new gemmix_sample{gemmix::sample(mixture->config, n, seed)}; });
}

void gemmix_sample_destroy(gemmix_sample* sample) { delete sample; }

gemmix_status gemmix_sample_shape(const gemmix_sample* sample, size_t* n, size_t* dim) {
    GEMMIX_REQUIRE(sample);
    if (n) *n = sample->sample.points.rows();
    if (dim) *dim = sample->sample.points.cols();
    return GEMMIX_OK;
}

gemmix_status gemmix_sample_points(const gemmix_sample* sample, double* out) {
    GEMMIX_REQUIRE(sample);
    GEMMIX_REQUIRE(out);
    copy_out(sample->sample.points, out);
    return GEMMIX_OK;
}

gemmix_status gemmix_sample_labels(const gemmix_sample* sample, int* out) {
    GEMMIX_REQUIRE(sample);
    GEMMIX_REQUIRE(out);
    const auto& l = sample->sample.labels;
    std::memcpy(out, l.data(), l.size() * sizeof(int));
    return GEMMIX_OK;
}

gemmix_status gemmix_sample_write_csv(const gemmix_sample* sample, const char* path) {
    GEMMIX_REQUIRE(sample);
    GEMMIX_REQUIRE(path);
    const auto status = guarded([&] { gemmix::write_sample_csv(sample->sample, path); });
    return status == GEMMIX_ERR_RUNTIME ? fail(GEMMIX_ERR_IO, g_last_error) : status;
}

// ---- gradients and EM

gemmix_status gemmix_oracle_gradient(const gemmix_mixture* mixture, const double* means_est, double* out) {
    GEMMIX_REQUIRE(mixture);
    GEMMIX_REQUIRE(means_est);
    GEMMIX_REQUIRE(out);
    return guarded([&] {
        const auto& c = mixture->config;
        copy_out(gemmix::oracle_gradient_q(c, means_from(means_est, c.components(), c.dim())), out);
    });
}

gemmix_status gemmix_population_gradient(const gemmix_mixture* mixture, const double* means_est, size_t mc_samples,
                                         uint64_t seed, double* grad, double* std_err) {
    GEMMIX_REQUIRE(mixture);
    GEMMIX_REQUIRE(means_est);
    GEMMIX_REQUIRE(grad);
    return guarded([&] {
        const auto& c = mixture->config;
        const auto est =
            gemmix::population_gradient(c, means_from(means_est, c.components(), c.dim()), mc_samples, seed);
        copy_out(est.grad, grad);
        if (std_err) std::memcpy(std_err, est.std_err.data(), est.std_err.size() * sizeof(double));
    });
}

gemmix_status gemmix_sample_gradient(const gemmix_sample* sample, const gemmix_mixture* mixture,
                                     const double* means_est, double* out) {
    GEMMIX_REQUIRE(sample);
    GEMMIX_REQUIRE(mixture);
    GEMMIX_REQUIRE(means_est);
    GEMMIX_REQUIRE(out);
    return guarded([&] {
        const auto& c = mixture->config;
        copy_out(gemmix::sample_gradient(sample->sample.points, c.weights(),
                                         means_from(means_est, c.components(), c.dim())),
                 out);
    });
}

gemmix_status gemmix_match_components(const double* estimates, const double* truth, size_t components, size_t dim,
                                      size_t* result) {
    GEMMIX_REQUIRE(estimates);
    GEMMIX_REQUIRE(truth);
    GEMMIX_REQUIRE(result);
    return guarded([&] {
        const auto m = gemmix::match_components(means_from(estimates, components, dim), means_from(truth, components, dim));
        for (std::size_t k = 0; k < m.size(); ++k) result[k] = m[k];
    });
}

gemmix_status gemmix_run_population_em(const gemmix_mixture* mixture, const double* init, double step_size,
                                       size_t max_iters, double tol, size_t mc_samples, uint64_t seed,
                                       gemmix_trajectory** out) {
    GEMMIX_REQUIRE(mixture);
    GEMMIX_REQUIRE(init);
    GEMMIX_REQUIRE(out);
    return guarded([&] {
        const auto& c = mixture->config;
        *out = new gemmix_trajectory{gemmix::run_population_em(c, means_from(init, c.components(), c.dim()),
                                                               em_options(step_size, max_iters, tol), mc_samples, seed)};
    });
}

gemmix_status gemmix_run_sample_em(const gemmix_mixture* mixture, const gemmix_sample* sample, const double* init,
                                   double step_size, size_t max_iters, double tol, gemmix_trajectory** out) {
    GEMMIX_REQUIRE(mixture);
    GEMMIX_REQUIRE(sample);
    GEMMIX_REQUIRE(init);
    GEMMIX_REQUIRE(out);
    return guarded([&] {
        const auto& c = mixture->config;
        *out = new gemmix_trajectory{gemmix::run_sample_em(c, sample->sample.points,
                                                           means_from(init, c.components(), c.dim()),
                                                           em_options(step_size, max_iters, tol))};
    });
}

gemmix_status gemmix_run_stochastic_em(const gemmix_mixture* mixture, const double* init, double projection_radius,
                                       size_t batch, size_t max_iters, double step_constant, uint64_t seed,
                                       gemmix_trajectory** out) {
    GEMMIX_REQUIRE(mixture);
    GEMMIX_REQUIRE(init);
    GEMMIX_REQUIRE(out);
    return guarded([&] {
        const auto& c = mixture->config;
        gemmix::StochasticOptions o;
        if (projection_radius > 0.0) o.projection_radius = projection_radius;
        o.batch = batch;
        o.max_iters = max_iters;
        if (step_constant > 0.0) o.step_constant = step_constant;
        o.seed = seed;
        *out = new gemmix_trajectory{gemmix::stochastic_em_run(c, means_from(init, c.components(), c.dim()), o)};
    });
}

void gemmix_trajectory_destroy(gemmix_trajectory* trajectory) { delete trajectory; }

gemmix_status gemmix_trajectory_length(const gemmix_trajectory* trajectory, size_t* out) {
    GEMMIX_REQUIRE(trajectory);
    GEMMIX_REQUIRE(out);
    *out = trajectory->trajectory.records.size();
    return GEMMIX_OK;
}

gemmix_status gemmix_trajectory_status(const gemmix_trajectory* trajectory, gemmix_run_status* out) {
    GEMMIX_REQUIRE(trajectory);
    GEMMIX_REQUIRE(out);
    switch (trajectory->trajectory.status) {
        case gemmix::RunStatus::converged: *out = GEMMIX_RUN_CONVERGED; break;
        case gemmix::RunStatus::max_iters: *out = GEMMIX_RUN_MAX_ITERS; break;
        case gemmix::RunStatus::diverged: *out = GEMMIX_RUN_DIVERGED; break;
    }
    return GEMMIX_OK;
}

gemmix_status gemmix_trajectory_errors(const gemmix_trajectory* trajectory, double* out) {
    GEMMIX_REQUIRE(trajectory);
    GEMMIX_REQUIRE(out);
    for (const auto& rec : trajectory->trajectory.records) *out++ = rec.err_total;
    return GEMMIX_OK;
}

gemmix_status gemmix_trajectory_final_means(const gemmix_trajectory* trajectory, double* out) {
    GEMMIX_REQUIRE(trajectory);
    GEMMIX_REQUIRE(out);
    copy_out(trajectory->trajectory.final_means, out);
    return GEMMIX_OK;
}

gemmix_status gemmix_trajectory_csv(const gemmix_trajectory* trajectory, char** out) {
    GEMMIX_REQUIRE(trajectory);
    GEMMIX_REQUIRE(out);
    return guarded([&] { *out = copy_string(gemmix::trajectory_csv(trajectory->trajectory)); });
}

// ---- bounds

gemmix_status gemmix_gamma_gs(const gemmix_separation* stats, size_t components, double radius_a, double* out) {
    GEMMIX_REQUIRE(stats);
    GEMMIX_REQUIRE(out);
    return guarded([&] { *out = gemmix::gamma_gs(stats_from(*stats), components, radius_a); });
}

gemmix_status gemmix_zeta_rate(double pi_min, double pi_max, double gamma, double* zeta, int* contractive) {
    GEMMIX_REQUIRE(zeta);
    return guarded([&] {
        const auto r = gemmix::zeta_rate(pi_min, pi_max, gamma);
        *zeta = r.zeta;
        if (contractive) *contractive = r.contractive ? 1 : 0;
    });
}

gemmix_status gemmix_contraction_radius(const gemmix_separation* stats, size_t components, double pi_min,
                                        gemmix_radius_mode mode, double c_a, double* out) {
    GEMMIX_REQUIRE(stats);
    GEMMIX_REQUIRE(out);
    return guarded(
        [&] { *out = gemmix::contraction_radius(stats_from(*stats), components, pi_min, radius_mode(mode), c_a); });
}

gemmix_status gemmix_eps_unif(double r_max, double kappa, size_t components, size_t dim, size_t n, double constant_c,
                              gemmix_eps_mode mode, double* out) {
    GEMMIX_REQUIRE(out);
    return guarded([&] {
        *out = gemmix::eps_unif(r_max, kappa, components, dim, n, constant_c,
                                mode == GEMMIX_EPS_ORIGINAL ? gemmix::EpsMode::original : gemmix::EpsMode::improved);
    });
}

gemmix_status gemmix_restart_count(size_t components, double radius_a, size_t dim, double delta, size_t* out) {
    GEMMIX_REQUIRE(out);
    return guarded([&] { *out = gemmix::restart_count(components, radius_a, dim, delta); });
}

gemmix_status gemmix_bound_report(const gemmix_mixture* mixture, gemmix_radius_mode mode, size_t n, char** out_json) {
    GEMMIX_REQUIRE(mixture);
    GEMMIX_REQUIRE(out_json);
    return guarded([&] {
        gemmix::BoundOptions o;
        o.mode = radius_mode(mode);
        o.n = n;
        *out_json = copy_string(gemmix::bound_report(mixture->config, o).to_json().dump());
    });
}

// ---- Gaussian utilities

gemmix_status gemmix_gaussian_norm_moment(int p, size_t dim, double sigma, double* out) {
    GEMMIX_REQUIRE(out);
    return guarded([&] { *out = gemmix::gaussian_norm_moment(p, dim, sigma); });
}

gemmix_status gemmix_gaussian_norm_tail(double r, size_t dim, double* out) {
    GEMMIX_REQUIRE(out);
    return guarded([&] { *out = gemmix::gaussian_norm_tail(r, dim); });
}

gemmix_status gemmix_sphere_covering_bound(size_t dim, double eps, double* out) {
    GEMMIX_REQUIRE(out);
    return guarded([&] { *out = gemmix::sphere_covering_bound(dim, eps); });
}

// ---- experiments

gemmix_status gemmix_specs_load(const char* path, gemmix_specs** out) {
    GEMMIX_REQUIRE(path);
    GEMMIX_REQUIRE(out);
    return guarded([&] { *out = new gemmix_specs{gemmix::load_spec_file(path)}; });
}

gemmix_status gemmix_specs_parse(const char* json, gemmix_specs** out) {
    GEMMIX_REQUIRE(json);
    GEMMIX_REQUIRE(out);
    return guarded([&] {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(json);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
        }
        *out = new gemmix_specs{gemmix::parse_spec_document(doc)};
    });
}

void gemmix_specs_destroy(gemmix_specs* specs) { delete specs; }

gemmix_status gemmix_specs_count(const gemmix_specs* specs, size_t* out) {
    GEMMIX_REQUIRE(specs);
    GEMMIX_REQUIRE(out);
    *out = specs->specs.size();
    return GEMMIX_OK;
}

gemmix_status gemmix_specs_kind(const gemmix_specs* specs, size_t index, char** out) {
    GEMMIX_REQUIRE(specs);
    GEMMIX_REQUIRE(out);
    return guarded([&] { *out = copy_string(gemmix::to_string(specs->specs.at(index).kind)); });
}

gemmix_status gemmix_specs_set_seed(gemmix_specs* specs, uint64_t seed) {
    GEMMIX_REQUIRE(specs);
    for (auto& s : specs->specs) s.seed = seed;
    return GEMMIX_OK;
}

gemmix_status gemmix_specs_set_against_best_fixed_point(gemmix_specs* specs, int enabled) {
    GEMMIX_REQUIRE(specs);
    for (auto& s : specs->specs) s.against_best_fixed_point = enabled != 0;
    return GEMMIX_OK;
}

gemmix_status gemmix_run_experiment(const gemmix_specs* specs, size_t index, const char* out_dir,
                                    char** summary_json) {
    GEMMIX_REQUIRE(specs);
    GEMMIX_REQUIRE(out_dir);
    return guarded([&] {
        const auto outcome = gemmix::run_experiment(specs->specs.at(index), out_dir);
        if (summary_json) {
            const nlohmann::json j{{"name", outcome.name},
                                   {"kind", gemmix::to_string(outcome.kind)},
                                   {"artifacts", outcome.artifacts},
                                   {"summary", outcome.summary},
                                   {"report", outcome.report}};
            *summary_json = copy_string(j.dump(2));
        }
    });
}

gemmix_status gemmix_run_suite(const gemmix_specs* specs, const char* out_dir, char** manifest_json,
                               size_t* failures) {
    GEMMIX_REQUIRE(specs);
    GEMMIX_REQUIRE(out_dir);
    return guarded([&] {
        const auto manifest = gemmix::run_suite(specs->specs, out_dir);
        if (failures) {
            *failures = 0;
            for (const auto& e : manifest.at("experiments")) {
                if (e.at("status") != "ok") ++*failures;
            }
        }
        if (manifest_json) *manifest_json = copy_string(manifest.dump(2));
    });
}

}  // extern "C"
