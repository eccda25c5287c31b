#include "gemmix/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gemmix/parallel.hpp"
#include "gemmix/rng.hpp"

namespace gemmix {

double gamma_gs(const SeparationStats& stats, std::size_t components, double radius_a) {
    if (!(radius_a >= 0.0) || !(radius_a < 0.5 * stats.r_min)) {
        throw std::domain_error("outside admissible radius");
    }
    const double m = static_cast<double>(components);
    const double d0 = static_cast<double>(stats.d0);
    const double gap = 0.5 * stats.r_min - radius_a;
    const double spread = 2.0 * stats.r_max + d0;
    return m * m * (2.0 * stats.kappa + 4.0) * spread * spread * std::exp(-gap * gap * std::sqrt(d0) / 8.0);
}

Rate zeta_rate(double pi_min, double pi_max, double gamma) {
    if (!(pi_min > 0.0) || !(pi_max >= pi_min) || !(gamma >= 0.0)) {
        throw std::invalid_argument("invalid weights or gamma for rate");
    }
    Rate r;
    r.zeta = (pi_max - pi_min + 2.0 * gamma) / (pi_max + pi_min);
    r.contractive = gamma < pi_min;
    return r;
}

std::string to_string(RadiusMode mode) {
    switch (mode) {
        case RadiusMode::explicit_gs: return "explicit";
        case RadiusMode::solved: return "solved";
        case RadiusMode::asymptotic: return "asymptotic";
    }
    return "unknown";
}

RadiusMode radius_mode_from_string(const std::string& s) {
    if (s == "explicit") return RadiusMode::explicit_gs;
    if (s == "solved") return RadiusMode::solved;
    if (s == "asymptotic") return RadiusMode::asymptotic;
    throw std::invalid_argument("unknown radius mode '" + s + "'");
}

double contraction_radius(const SeparationStats& stats, std::size_t components, double pi_min, RadiusMode mode,
                          double c_a) {
    const double half = 0.5 * stats.r_min;
    const double root_d0 = std::sqrt(static_cast<double>(stats.d0));
    double a = 0.0;
    switch (mode) {
        case RadiusMode::explicit_gs: {
            const double log_term = std::max(0.0, std::log(stats.r_min / 4.0));
            a = half - root_d0 * std::max(4.0 * std::sqrt(2.0 * log_term), 8.0 * std::sqrt(3.0));
            break;
        }
        case RadiusMode::asymptotic: {
            const double m = static_cast<double>(components);
            const double arg = std::max({m * m * stats.kappa / pi_min, stats.r_max, static_cast<double>(stats.d0)});
            a = half - c_a * root_d0 * std::sqrt(std::log(arg));
            break;
        }
        case RadiusMode::solved: {
            if (!(gamma_gs(stats, components, 0.0) < pi_min)) {
                throw std::domain_error("separation too small for certificate");
            }
            double lo = 0.0;
            double hi = half;
            while (hi - lo > kRadiusTolerance) {
                const double mid = 0.5 * (lo + hi);
                if (mid < half && gamma_gs(stats, components, mid) < pi_min) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            a = lo;
            break;
        }
    }
    if (!(a > 0.0)) throw std::domain_error("separation too small for certificate");
    return a;
}

double eps_unif(double r_max, double kappa, std::size_t components, std::size_t dim, std::size_t n,
                double constant_c, EpsMode mode) {
    if (n < 2) throw std::invalid_argument("eps_unif needs n >= 2");
    if (!(constant_c > 0.0)) throw std::invalid_argument("constant must be positive");
    const double m = static_cast<double>(components);
    const double d = static_cast<double>(dim);
    const double nn = static_cast<double>(n);
    const double log_n = std::log(nn);
    const double imbalance = std::max(1.0, std::log(kappa));
    if (mode == EpsMode::improved) {
        const double spread = 1.0 + 3.0 * r_max;
        return constant_c * std::pow(m, 1.5) * spread * spread * spread * imbalance * std::sqrt(d * log_n / nn);
    }
    const double spread = 1.0 + r_max;
    const double rademacher = m * m * m * spread * spread * spread * std::sqrt(d) * imbalance / std::sqrt(nn);
    const double concentration = spread * d * std::pow(log_n, 2.5) / std::sqrt(nn);
    return constant_c * std::max(rademacher, concentration);
}

std::size_t restart_count(std::size_t components, double radius_a, std::size_t dim, double delta) {
    if (!(radius_a > 0.0)) throw std::invalid_argument("radius must be positive");
    if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in (0, 1]");
    const double m = static_cast<double>(components);
    const double hit = 1.0 - std::exp(-0.5 * radius_a * std::sqrt(static_cast<double>(dim)));
    const double t = std::log(1.0 / delta) / std::sqrt(2.0 * std::numbers::pi * m) * std::pow(std::numbers::e / hit, m);
    return static_cast<std::size_t>(std::ceil(t));
}

std::optional<std::size_t> predicted_iterations(double zeta, double err0, double tol) {
    if (!(zeta < 1.0) || zeta < 0.0) return std::nullopt;
    if (err0 <= tol) return 0;
    if (zeta == 0.0) return 1;
    return static_cast<std::size_t>(std::ceil(std::log(tol / err0) / std::log(zeta)));
}

nlohmann::json BoundReport::to_json() const {
    nlohmann::json j;
    j["certified"] = certified;
    j["message"] = message;
    j["gamma"] = gamma;
    j["zeta"] = rate.zeta;
    j["contractive"] = rate.contractive;
    j["radius_a"] = radius_a;
    j["eps_unif"] = eps_unif;
    j["restart_count"] = restart_count ? nlohmann::json(*restart_count) : nlohmann::json(nullptr);
    j["inputs"] = {
        {"M", components},
        {"d", dim},
        {"d0", stats.d0},
        {"r_min", stats.r_min},
        {"r_max", stats.r_max},
        {"kappa", stats.kappa},
        {"pi_min", pi_min},
        {"pi_max", pi_max},
        {"n", options.n},
        {"delta", options.delta},
        {"radius_mode", to_string(options.mode)},
        {"eps_mode", options.eps_mode == EpsMode::improved ? "improved" : "original"},
        {"c_a", options.c_a},
        {"c_eps", options.c_eps},
    };
    return j;
}

BoundReport bound_report(const MixtureConfig& config, const BoundOptions& options) {
    BoundReport r;
    r.options = options;
    r.stats = separation_stats(config);
    r.components = config.components();
    r.dim = config.dim();
    r.pi_min = config.pi_min();
    r.pi_max = config.pi_max();
    r.eps_unif = eps_unif(r.stats.r_max, r.stats.kappa, r.components, r.dim, options.n, options.c_eps,
                          options.eps_mode);
    try {
        r.radius_a = contraction_radius(r.stats, r.components, r.pi_min, options.mode, options.c_a);
        r.gamma = gamma_gs(r.stats, r.components, r.radius_a);
        r.rate = zeta_rate(r.pi_min, r.pi_max, r.gamma);
        r.certified = true;
        r.message = r.rate.contractive ? "contractive" : "not contractive";
        if (r.pi_max - r.pi_min < 1e-12) r.restart_count = restart_count(r.components, r.radius_a, r.dim, options.delta);
    } catch (const std::domain_error& e) {
        r.certified = false;
        r.message = e.what();
        r.rate = {std::numeric_limits<double>::infinity(), false};
    }
    return r;
}

nlohmann::json GsReport::to_json() const {
    nlohmann::json trials_json = nlohmann::json::array();
    for (const auto& t : trials) {
        trials_json.push_back({{"distance", t.distance},
                               {"deviation", t.deviation},
                               {"std_err", t.std_err},
                               {"ratio", t.ratio},
                               {"ratio_std_err", t.ratio_std_err},
                               {"skipped", t.skipped},
                               {"note", t.note}});
    }
    return {{"radius_a", radius_a},   {"gamma_hat", gamma_hat}, {"gamma_hat_std_err", gamma_hat_std_err},
            {"gamma_bound", gamma_bound}, {"pass", pass},       {"mc_samples", mc_samples},
            {"trials", trials_json}};
}

namespace {

void random_unit(Engine& engine, std::span<double> out) {
    std::normal_distribution<double> normal(0.0, 1.0);
    double len = 0.0;
    while (len < 1e-12) {
        for (double& v : out) v = normal(engine);
        len = norm(out);
    }
    for (double& v : out) v /= len;
}

}  // namespace

std::vector<Means> default_gs_trial_points(const MixtureConfig& config, double radius_a, std::uint64_t seed) {
    const std::size_t m = config.components();
    const std::size_t d = config.dim();
    const double tol = 1e-6 * radius_a;
    const double radii[4] = {0.25 * radius_a, 0.5 * radius_a, 0.75 * radius_a, radius_a - tol};
    auto engine = make_engine(seed, Stream::trial_points);
    std::vector<double> dir(d);
    std::vector<Means> points;
    for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t j = 0; j < 8; ++j) {
            const double r = radii[j % 4];
            Means mu = config.means();
            for (std::size_t i = 0; i < m; ++i) {
                random_unit(engine, dir);
                const double ri = (i == c) ? r : 0.5 * r;
                for (std::size_t k = 0; k < d; ++k) mu(i, k) += ri * dir[k];
            }
            points.push_back(std::move(mu));
        }
    }
    return points;
}

GsReport verify_gs_empirical(const MixtureConfig& config, const std::vector<Means>& trial_points, double radius_a,
                             std::size_t mc_samples, std::uint64_t seed) {
    if (mc_samples < 1000) throw std::invalid_argument("need at least 1000 Monte-Carlo samples");
    const auto stats = separation_stats(config);
    GsReport report;
    report.radius_a = radius_a;
    report.gamma_bound = gamma_gs(stats, config.components(), radius_a);
    report.mc_samples = mc_samples;

    const std::size_t m = config.components();
    const std::size_t d = config.dim();
    const std::size_t width = m * d;
    const Points mega = sample_points(config, mc_samples, derive_seed(seed, Stream::population));
    const auto& truth = config.means();
    const auto& logw = config.log_weights();
    const std::size_t blocks = block_count(mc_samples);

    for (const auto& mu : trial_points) {
        GsTrial trial;
        trial.point = mu;
        if (mu.rows() != m || mu.cols() != d) throw std::invalid_argument("trial point has the wrong shape");
        double worst = 0.0;
        for (std::size_t i = 0; i < m; ++i) worst = std::max(worst, distance(mu.row(i), truth.row(i)));
        trial.distance = stacked_distance(mu, truth);
        if (worst > radius_a) {
            trial.skipped = true;
            trial.note = "outside region";
        } else if (trial.distance == 0.0) {
            trial.skipped = true;
            trial.note = "at truth";
        }
        if (trial.skipped) {
            report.trials.push_back(std::move(trial));
            continue;
        }

        std::vector<double> sums(blocks * width, 0.0), squares(blocks * width, 0.0);
        parallel_for(blocks, [&](std::size_t b) {
            std::vector<double> w(m), w_star(m);
            double* s = sums.data() + b * width;
            double* q = squares.data() + b * width;
            const std::size_t end = std::min(mc_samples, (b + 1) * kBlockSize);
            for (std::size_t p = b * kBlockSize; p < end; ++p) {
                auto x = mega.row(p);
                responsibilities_into(mu, logw, x, w);
                responsibilities_into(truth, logw, x, w_star);
                for (std::size_t i = 0; i < m; ++i) {
                    const double dw = w[i] - w_star[i];
                    for (std::size_t k = 0; k < d; ++k) {
                        const double y = dw * (x[k] - mu(i, k));
                        s[i * d + k] += y;
                        q[i * d + k] += y * y;
                    }
                }
            }
        });
        std::vector<double> mean(width, 0.0), sq(width, 0.0);
        for (std::size_t b = 0; b < blocks; ++b) {
            for (std::size_t c = 0; c < width; ++c) {
                mean[c] += sums[b * width + c];
                sq[c] += squares[b * width + c];
            }
        }
        const double nn = static_cast<double>(mc_samples);
        double var = 0.0;
        for (std::size_t c = 0; c < width; ++c) {
            mean[c] /= nn;
            var += std::max(0.0, sq[c] / nn - mean[c] * mean[c]);
        }
        trial.deviation = norm(mean);
        trial.std_err = std::sqrt(var / nn);
        trial.ratio = trial.deviation / trial.distance;
        trial.ratio_std_err = trial.std_err / trial.distance;
        report.trials.push_back(std::move(trial));
    }

    bool any = false;
    for (const auto& t : report.trials) {
        if (t.skipped) continue;
        if (!any || t.ratio > report.gamma_hat) {
            report.gamma_hat = t.ratio;
            report.gamma_hat_std_err = t.ratio_std_err;
        }
        any = true;
    }
    report.pass = any && report.gamma_hat + 4.0 * report.gamma_hat_std_err <= report.gamma_bound;
    return report;
}

}  // namespace gemmix
