#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gemmix/matrix.hpp"
#include "gemmix/mixture.hpp"

namespace gemmix {

// Monte-Carlo or empirical estimate of the stacked gradient
// [E w_i(X; mu) (X - mu_i)]_i together with per-component standard errors.
struct GradientEstimate {
    Means grad;
    std::size_t mc_samples = 0;
    std::vector<double> std_err;
};

// Closed form pi_i (mu_i* - mu_i) of the gradient of q(mu) = Q(mu | mu*).
// Expects a centered config.
Means oracle_gradient_q(const MixtureConfig& config, const Means& means_est);

// Average of w_i(x; mu)(x - mu_i) over `points`, with standard errors from the
// per-point variance. The gradient carries no extra pi_i factor.
GradientEstimate empirical_gradient(const Points& points, std::span<const double> weights, const Means& means_est);

// Population gradient estimated from a fresh draw of mc_samples points. One
// shared sample serves every component.
GradientEstimate population_gradient(const MixtureConfig& config, const Means& means_est, std::size_t mc_samples,
                                     std::uint64_t seed);

// G_n: the empirical gradient over an observed sample.
Means sample_gradient(const Points& points, std::span<const double> weights, const Means& means_est);

// Q_n(mu | mu_t) up to an additive constant:
// -(1/2n) sum_j sum_i w_i(x_j; mu_t) ||x_j - mu_i||^2.
double auxiliary_objective(const Points& points, std::span<const double> weights, const Means& mu,
                           const Means& mu_t);

using GradientFn = std::function<Means(const Means&)>;

// Gradient source over a fixed point set. Used for sample EM on the observed
// data and for population EM on a common-random-numbers mega-sample.
GradientFn fixed_points_source(std::shared_ptr<const Points> points, std::vector<double> weights);

enum class RunStatus { converged, max_iters, diverged };
std::string to_string(RunStatus s);

struct IterationRecord {
    std::size_t t = 0;
    double err_total = 0.0;
    std::vector<double> err;  // per estimated component, against its matched reference
    double grad_norm = 0.0;
};

struct Trajectory {
    std::vector<IterationRecord> records;
    RunStatus status = RunStatus::max_iters;
    Means final_means;
    std::vector<std::size_t> matching;  // estimate k -> reference component
    double step_size = 0.0;

    std::size_t iterations() const { return records.empty() ? 0 : records.back().t; }
};

inline constexpr double kDivergenceBound = 1e8;

struct EmOptions {
    std::optional<double> step_size;  // default 2 / (pi_min + pi_max)
    std::size_t max_iters = 500;
    double tol = 1e-8;
};

double default_step_size(std::span<const double> weights);

// mu^{t+1} = mu^t + s * grad(mu^t) until ||mu^{t+1} - mu^t|| < tol, max_iters,
// or a coordinate leaves [-1e8, 1e8]. Errors are measured against
// `reference` under the matching fixed at initialization.
Trajectory run_gradient_em(const GradientFn& gradient, std::span<const double> weights, const Means& reference,
                           const Means& init, const EmOptions& options);

enum class GradientKind { population, sample };

// Population EM: the expectation is replaced by a fixed mega-sample of
// mc_samples points drawn once from `config` with `seed`.
Trajectory run_population_em(const MixtureConfig& config, const Means& init, const EmOptions& options,
                             std::size_t mc_samples = 1'000'000, std::uint64_t seed = 0);

Trajectory run_sample_em(const MixtureConfig& config, const Points& points, const Means& init,
                         const EmOptions& options, const Means* reference = nullptr);

// Euclidean projection onto the closed ball B(center, radius).
void project_to_ball(std::span<double> point, std::span<const double> center, double radius);

struct StochasticOptions {
    std::optional<double> projection_radius;  // default a/2 from the solved contraction radius
    std::size_t batch = 1;
    std::size_t max_iters = 10'000;
    std::optional<double> step_constant;  // c_s; default 3 / (2 xi)
    double gamma_estimate = 0.0;          // gamma used in xi
    bool constant_step = false;           // s^t = c_s instead of c_s / (t + 2)
    std::uint64_t seed = 0;
};

// xi = 2 pi_max pi_min / (pi_max + pi_min) - gamma.
double stochastic_xi(std::span<const double> weights, double gamma);
double default_step_constant(std::span<const double> weights, double gamma);

// Streaming EM: each iteration draws `batch` fresh points, steps along the
// batch gradient and projects every mu_i onto B(mu_i^0, radius).
Trajectory stochastic_em_run(const MixtureConfig& config, const Means& init, const StochasticOptions& options);

// Same update but every iteration uses the whole fixed sample as its batch.
Trajectory stochastic_em_run(const MixtureConfig& config, const Points& points, const Means& init,
                             const StochasticOptions& options);

// CSV with columns t, err_total, err_1..err_M, grad_norm, status. The status
// column reads "running" except on the terminal row.
std::string trajectory_csv(const Trajectory& trajectory);
void write_trajectory(const Trajectory& trajectory, const std::string& csv_path, const nlohmann::json& run_meta);

}  // namespace gemmix
