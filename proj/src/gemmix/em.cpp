#include "gemmix/em.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gemmix/bounds.hpp"
#include "gemmix/matching.hpp"
#include "gemmix/parallel.hpp"
#include "gemmix/rng.hpp"

namespace gemmix {

Means oracle_gradient_q(const MixtureConfig& config, const Means& means_est) {
    if (means_est.rows() != config.components() || means_est.cols() != config.dim()) {
        throw std::invalid_argument("dimension mismatch between config and estimate");
    }
    Means g(means_est.rows(), means_est.cols());
    for (std::size_t i = 0; i < g.rows(); ++i) {
        const double pi = config.weights()[i];
        for (std::size_t k = 0; k < g.cols(); ++k) g(i, k) = pi * (config.means()(i, k) - means_est(i, k));
    }
    return g;
}

namespace {

void check_shapes(const Points& points, std::span<const double> weights, const Means& means_est) {
    if (points.rows() == 0) throw std::invalid_argument("need at least one point");
    if (weights.size() != means_est.rows()) throw std::invalid_argument("weights and means disagree on M");
    if (points.cols() != means_est.cols()) throw std::invalid_argument("points and means disagree on d");
}

std::vector<double> logs_of(std::span<const double> weights) {
    std::vector<double> out(weights.size());
    std::transform(weights.begin(), weights.end(), out.begin(), [](double w) { return std::log(w); });
    return out;
}

// Per-block sums of y_i = w_i(x)(x - mu_i) and, optionally, of y_i^2.
GradientEstimate accumulate_gradient(const Points& points, std::span<const double> weights, const Means& mu,
                                     bool with_errors) {
    check_shapes(points, weights, mu);
    const std::size_t n = points.rows();
    const std::size_t m = mu.rows();
    const std::size_t d = mu.cols();
    const std::size_t width = m * d;
    const auto logw = logs_of(weights);
    const std::size_t blocks = block_count(n);
    std::vector<double> sums(blocks * width, 0.0);
    std::vector<double> squares(with_errors ? blocks * width : 0, 0.0);

    parallel_for(blocks, [&](std::size_t b) {
        std::vector<double> w(m);
        double* s = sums.data() + b * width;
        double* q = with_errors ? squares.data() + b * width : nullptr;
        const std::size_t end = std::min(n, (b + 1) * kBlockSize);
        for (std::size_t p = b * kBlockSize; p < end; ++p) {
            auto x = points.row(p);
            responsibilities_into(mu, logw, x, w);
            for (std::size_t i = 0; i < m; ++i) {
                auto mi = mu.row(i);
                for (std::size_t k = 0; k < d; ++k) {
                    const double y = w[i] * (x[k] - mi[k]);
                    s[i * d + k] += y;
                    if (q) q[i * d + k] += y * y;
                }
            }
        }
    });

    GradientEstimate est;
    est.grad = Means(m, d);
    est.mc_samples = n;
    std::vector<double> total_sq(width, 0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t c = 0; c < width; ++c) {
            est.grad.flat()[c] += sums[b * width + c];
            if (with_errors) total_sq[c] += squares[b * width + c];
        }
    }
    const double nn = static_cast<double>(n);
    for (double& v : est.grad.flat()) v /= nn;
    est.std_err.assign(m, 0.0);
    if (with_errors) {
        for (std::size_t i = 0; i < m; ++i) {
            double var = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double mean = est.grad(i, k);
                var += std::max(0.0, total_sq[i * d + k] / nn - mean * mean);
            }
            est.std_err[i] = std::sqrt(var / nn);
        }
    }
    return est;
}

}  // namespace

GradientEstimate empirical_gradient(const Points& points, std::span<const double> weights, const Means& means_est) {
    return accumulate_gradient(points, weights, means_est, true);
}

GradientEstimate population_gradient(const MixtureConfig& config, const Means& means_est, std::size_t mc_samples,
                                     std::uint64_t seed) {
    if (mc_samples < 1000) throw std::invalid_argument("population gradient needs at least 1000 Monte-Carlo samples");
    if (means_est.rows() != config.components() || means_est.cols() != config.dim()) {
        throw std::invalid_argument("dimension mismatch between config and estimate");
    }
    const Points mega = sample_points(config, mc_samples, derive_seed(seed, Stream::population));
    return empirical_gradient(mega, config.weights(), means_est);
}

Means sample_gradient(const Points& points, std::span<const double> weights, const Means& means_est) {
    return accumulate_gradient(points, weights, means_est, false).grad;
}

double auxiliary_objective(const Points& points, std::span<const double> weights, const Means& mu,
                           const Means& mu_t) {
    check_shapes(points, weights, mu);
    const auto logw = logs_of(weights);
    const std::size_t m = mu.rows();
    const std::size_t blocks = block_count(points.rows());
    std::vector<double> partial(blocks, 0.0);
    parallel_for(blocks, [&](std::size_t b) {
        std::vector<double> w(m);
        const std::size_t end = std::min(points.rows(), (b + 1) * kBlockSize);
        double acc = 0.0;
        for (std::size_t p = b * kBlockSize; p < end; ++p) {
            auto x = points.row(p);
            responsibilities_into(mu_t, logw, x, w);
            for (std::size_t i = 0; i < m; ++i) acc += w[i] * squared_distance(x, mu.row(i));
        }
        partial[b] = acc;
    });
    double total = 0.0;
    for (double v : partial) total += v;
    return -0.5 * total / static_cast<double>(points.rows());
}

GradientFn fixed_points_source(std::shared_ptr<const Points> points, std::vector<double> weights) {
    return [points = std::move(points), weights = std::move(weights)](const Means& mu) {
        return sample_gradient(*points, weights, mu);
    };
}

std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::converged: return "converged";
        case RunStatus::max_iters: return "max_iters";
        case RunStatus::diverged: return "diverged";
    }
    return "unknown";
}

double default_step_size(std::span<const double> weights) {
    const auto [lo, hi] = std::minmax_element(weights.begin(), weights.end());
    return 2.0 / (*lo + *hi);
}

namespace {

IterationRecord make_record(std::size_t t, const Means& mu, const Means& reference,
                            const std::vector<std::size_t>& matching, double grad_norm) {
    IterationRecord r;
    r.t = t;
    r.err.resize(mu.rows());
    double total = 0.0;
    for (std::size_t k = 0; k < mu.rows(); ++k) {
        const double sq = squared_distance(mu.row(k), reference.row(matching[k]));
        r.err[k] = std::sqrt(sq);
        total += sq;
    }
    r.err_total = std::sqrt(total);
    r.grad_norm = grad_norm;
    return r;
}

bool out_of_bounds(const Means& mu) {
    for (double v : mu.flat()) {
        if (!std::isfinite(v) || std::abs(v) > kDivergenceBound) return true;
    }
    return false;
}

}  // namespace

Trajectory run_gradient_em(const GradientFn& gradient, std::span<const double> weights, const Means& reference,
                           const Means& init, const EmOptions& options) {
    if (init.rows() != reference.rows() || init.cols() != reference.cols()) {
        throw std::invalid_argument("initial means do not match the model shape");
    }
    if (!all_finite(init.flat())) throw std::invalid_argument("initial means must be finite");
    Trajectory traj;
    traj.step_size = options.step_size.value_or(default_step_size(weights));
    if (!(traj.step_size > 0.0)) throw std::invalid_argument("step size must be positive");
    traj.matching = match_components(init, reference);

    Means mu = init;
    bool converged = false;
    for (std::size_t t = 0;; ++t) {
        const Means g = gradient(mu);
        const bool finite = all_finite(g.flat());
        traj.records.push_back(
            make_record(t, mu, reference, traj.matching, finite ? stacked_norm(g) : std::nan("")));
        if (!finite) {
            traj.status = RunStatus::diverged;
            break;
        }
        if (converged) {
            traj.status = RunStatus::converged;
            break;
        }
        if (t >= options.max_iters) {
            traj.status = RunStatus::max_iters;
            break;
        }
        Means next = mu;
        for (std::size_t c = 0; c < next.flat().size(); ++c) next.flat()[c] += traj.step_size * g.flat()[c];
        if (out_of_bounds(next)) {
            traj.status = RunStatus::diverged;
            break;
        }
        converged = stacked_distance(next, mu) < options.tol;
        mu = std::move(next);
    }
    traj.final_means = std::move(mu);
    return traj;
}

Trajectory run_population_em(const MixtureConfig& config, const Means& init, const EmOptions& options,
                             std::size_t mc_samples, std::uint64_t seed) {
    if (mc_samples < 1000) throw std::invalid_argument("population gradient needs at least 1000 Monte-Carlo samples");
    auto mega = std::make_shared<const Points>(
        sample_points(config, mc_samples, derive_seed(seed, Stream::population)));
    return run_gradient_em(fixed_points_source(std::move(mega), config.weights()), config.weights(),
                           config.means(), init, options);
}

Trajectory run_sample_em(const MixtureConfig& config, const Points& points, const Means& init,
                         const EmOptions& options, const Means* reference) {
    auto data = std::make_shared<const Points>(points);
    return run_gradient_em(fixed_points_source(std::move(data), config.weights()), config.weights(),
                           reference ? *reference : config.means(), init, options);
}

void project_to_ball(std::span<double> point, std::span<const double> center, double radius) {
    const double dist = distance(point, center);
    if (dist <= radius) return;
    const double scale = radius / dist;
    for (std::size_t k = 0; k < point.size(); ++k) point[k] = center[k] + scale * (point[k] - center[k]);
}

double stochastic_xi(std::span<const double> weights, double gamma) {
    const auto [lo, hi] = std::minmax_element(weights.begin(), weights.end());
    return 2.0 * (*hi) * (*lo) / (*hi + *lo) - gamma;
}

double default_step_constant(std::span<const double> weights, double gamma) {
    const double xi = stochastic_xi(weights, gamma);
    if (!(xi > 0.0)) throw std::invalid_argument("xi must be positive: gamma too large for a step schedule");
    return 3.0 / (2.0 * xi);
}

namespace {

double resolve_projection_radius(const MixtureConfig& config, const StochasticOptions& options) {
    if (options.projection_radius) {
        if (!(*options.projection_radius > 0.0)) throw std::invalid_argument("projection radius must be positive");
        return *options.projection_radius;
    }
    const auto stats = separation_stats(config);
    return 0.5 * contraction_radius(stats, config.components(), config.pi_min(), RadiusMode::solved);
}

template <typename BatchFn>
Trajectory stochastic_loop(const MixtureConfig& config, const Means& init, const StochasticOptions& options,
                           BatchFn&& batch_gradient) {
    if (init.rows() != config.components() || init.cols() != config.dim()) {
        throw std::invalid_argument("initial means do not match the model shape");
    }
    const double radius = resolve_projection_radius(config, options);
    const double c_s = options.step_constant.value_or(default_step_constant(config.weights(), options.gamma_estimate));
    Trajectory traj;
    traj.step_size = c_s;
    traj.matching = match_components(init, config.means());
    Means mu = init;
    traj.status = RunStatus::max_iters;
    for (std::size_t t = 0;; ++t) {
        if (t == options.max_iters) {
            traj.records.push_back(make_record(t, mu, config.means(), traj.matching, std::nan("")));
            break;
        }
        const Means g = batch_gradient(t, mu);
        if (!all_finite(g.flat())) {
            traj.records.push_back(make_record(t, mu, config.means(), traj.matching, std::nan("")));
            traj.status = RunStatus::diverged;
            break;
        }
        traj.records.push_back(make_record(t, mu, config.means(), traj.matching, stacked_norm(g)));
        const double step = options.constant_step ? c_s : c_s / static_cast<double>(t + 2);
        for (std::size_t c = 0; c < mu.flat().size(); ++c) mu.flat()[c] += step * g.flat()[c];
        for (std::size_t i = 0; i < mu.rows(); ++i) project_to_ball(mu.row(i), init.row(i), radius);
    }
    traj.final_means = std::move(mu);
    return traj;
}

}  // namespace

Trajectory stochastic_em_run(const MixtureConfig& config, const Means& init, const StochasticOptions& options) {
    if (options.batch == 0) throw std::invalid_argument("batch must be at least 1");
    return stochastic_loop(config, init, options, [&](std::size_t t, const Means& mu) {
        const Points batch = sample_points(config, options.batch, derive_seed(options.seed, Stream::stochastic, t));
        return sample_gradient(batch, config.weights(), mu);
    });
}

Trajectory stochastic_em_run(const MixtureConfig& config, const Points& points, const Means& init,
                             const StochasticOptions& options) {
    return stochastic_loop(config, init, options, [&](std::size_t, const Means& mu) {
        return sample_gradient(points, config.weights(), mu);
    });
}

std::string trajectory_csv(const Trajectory& trajectory) {
    std::ostringstream out;
    out.precision(17);
    const std::size_t m = trajectory.final_means.rows();
    out << "t,err_total";
    for (std::size_t k = 0; k < m; ++k) out << ",err_" << (k + 1);
    out << ",grad_norm,status\n";
    for (std::size_t r = 0; r < trajectory.records.size(); ++r) {
        const auto& rec = trajectory.records[r];
        out << rec.t << ',' << rec.err_total;
        for (double e : rec.err) out << ',' << e;
        out << ',' << rec.grad_norm << ','
            << (r + 1 == trajectory.records.size() ? to_string(trajectory.status) : "running") << '\n';
    }
    return out.str();
}

void write_trajectory(const Trajectory& trajectory, const std::string& csv_path, const nlohmann::json& run_meta) {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write " + csv_path);
    csv << trajectory_csv(trajectory);
    nlohmann::json meta = run_meta;
    meta["step_size"] = trajectory.step_size;
    meta["status"] = to_string(trajectory.status);
    meta["iterations"] = trajectory.iterations();
    std::ofstream side(csv_path + ".json");
    if (!side) throw std::runtime_error("cannot write " + csv_path + ".json");
    side << meta.dump(2) << '\n';
}

}  // namespace gemmix
