#include "gemmix/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "gemmix/bounds.hpp"
#include "gemmix/em.hpp"
#include "gemmix/parallel.hpp"
#include "gemmix/rng.hpp"

namespace gemmix {

double SupEstimate::median() const {
    if (replicate_values.empty()) return value;
    auto v = replicate_values;
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size() / 2;
    return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

nlohmann::json SupEstimate::to_json() const {
    nlohmann::json j{{"value", value},
                     {"std_err", std_err},
                     {"replications", replications},
                     {"replicate_values", replicate_values},
                     {"noise_floor", noise_floor},
                     {"optimizer_meta",
                      {{"multistarts", meta.multistarts},
                       {"iterations", meta.iterations},
                       {"evaluations", meta.evaluations},
                       {"region_radius", meta.region_radius},
                       {"component", meta.component},
                       {"direction", meta.direction},
                       {"covering_size", meta.covering_size}}}};
    j["covering_surrogate"] = covering_surrogate ? nlohmann::json(*covering_surrogate) : nlohmann::json(nullptr);
    return j;
}

namespace {

// Weighted point set entering V(mu) = sum_sets scale * sum_j coef_j w_i(x_j; mu)(x_j - mu_i).
struct PointSet {
    const Points* points = nullptr;
    const std::vector<double>* coef = nullptr;  // per point; null means 1
    double scale = 1.0;
};

struct KernelValue {
    std::vector<double> value;     // d
    std::vector<double> jacobian;  // d x (M d), row-major
};

KernelValue evaluate_kernel(const std::vector<PointSet>& sets, std::span<const double> logw, const Means& mu,
                            std::size_t component) {
    const std::size_t m = mu.rows();
    const std::size_t d = mu.cols();
    const std::size_t md = m * d;
    const std::size_t stride = d + d * md + 1;  // value, jacobian, sum of coef * w_i
    KernelValue out{std::vector<double>(d, 0.0), std::vector<double>(d * md, 0.0)};
    auto mi = mu.row(component);

    for (const auto& set : sets) {
        const Points& pts = *set.points;
        const std::size_t n = pts.rows();
        const std::size_t blocks = block_count(n);
        std::vector<double> partial(blocks * stride, 0.0);
        parallel_for(blocks, [&](std::size_t b) {
            std::vector<double> w(m), e(d);
            double* acc = partial.data() + b * stride;
            double* val = acc;
            double* jac = acc + d;
            double& wsum = acc[stride - 1];
            const std::size_t end = std::min(n, (b + 1) * kBlockSize);
            for (std::size_t p = b * kBlockSize; p < end; ++p) {
                auto x = pts.row(p);
                responsibilities_into(mu, logw, x, w);
                const double c = set.coef ? (*set.coef)[p] : 1.0;
                const double cw = c * w[component];
                if (cw == 0.0) continue;
                for (std::size_t k = 0; k < d; ++k) {
                    e[k] = x[k] - mi[k];
                    val[k] += cw * e[k];
                }
                wsum += cw;
                for (std::size_t j = 0; j < m; ++j) {
                    const double factor = cw * ((j == component ? 1.0 : 0.0) - w[j]);
                    if (factor == 0.0) continue;
                    auto mj = mu.row(j);
                    for (std::size_t r = 0; r < d; ++r) {
                        const double fr = factor * e[r];
                        double* row = jac + r * md + j * d;
                        for (std::size_t l = 0; l < d; ++l) row[l] += fr * (x[l] - mj[l]);
                    }
                }
            }
        });
        std::vector<double> total(stride, 0.0);
        for (std::size_t b = 0; b < blocks; ++b) {
            for (std::size_t s = 0; s < stride; ++s) total[s] += partial[b * stride + s];
        }
        // d(x - mu_i)/d mu_i = -I contributes -sum c w_i on the diagonal block.
        for (std::size_t r = 0; r < d; ++r) total[d + r * md + component * d + r] -= total[stride - 1];
        for (std::size_t r = 0; r < d; ++r) out.value[r] += set.scale * total[r];
        for (std::size_t s = 0; s < d * md; ++s) out.jacobian[s] += set.scale * total[d + s];
    }
    return out;
}

// Gradient of <V(mu), v> in mu, as stacked means.
Means directional_gradient(const KernelValue& kv, std::span<const double> v, std::size_t m, std::size_t d) {
    Means g(m, d);
    const std::size_t md = m * d;
    for (std::size_t r = 0; r < d; ++r) {
        if (v[r] == 0.0) continue;
        for (std::size_t s = 0; s < md; ++s) g.flat()[s] += v[r] * kv.jacobian[r * md + s];
    }
    return g;
}

void project_region(Means& mu, const Means& truth, double radius) {
    for (std::size_t i = 0; i < mu.rows(); ++i) {
        auto row = mu.row(i);
        auto center = truth.row(i);
        const double dist = distance(row, center);
        if (dist > radius) {
            const double s = dist > 0.0 ? radius / dist : 0.0;
            for (std::size_t k = 0; k < row.size(); ++k) row[k] = center[k] + s * (row[k] - center[k]);
        }
    }
}

struct AscentResult {
    double value = -std::numeric_limits<double>::infinity();
    Means argmax;
    std::size_t evaluations = 0;
};

// Objective returns (value, gradient in mu).
using Objective = std::function<std::pair<double, Means>(const Means&)>;

AscentResult projected_ascent(const Objective& objective, Means start, const Means& truth, double radius,
                              std::size_t iterations) {
    AscentResult res;
    project_region(start, truth, radius);
    auto [f, g] = objective(start);
    res.evaluations = 1;
    Means x = std::move(start);
    if (radius > 0.0) {
        const double gn = stacked_norm(g);
        double eta = gn > 0.0 ? 0.25 * radius / gn : 0.0;
        for (std::size_t it = 0; it < iterations && eta > 0.0; ++it) {
            bool improved = false;
            for (int bt = 0; bt < 30; ++bt) {
                Means y = x;
                for (std::size_t s = 0; s < y.flat().size(); ++s) y.flat()[s] += eta * g.flat()[s];
                project_region(y, truth, radius);
                auto [fy, gy] = objective(y);
                ++res.evaluations;
                if (fy > f) {
                    const double gain = fy - f;
                    x = std::move(y);
                    f = fy;
                    g = std::move(gy);
                    eta *= 2.0;
                    improved = gain > 1e-12 * std::max(1.0, std::abs(f));
                    if (!improved) it = iterations;
                    break;
                }
                eta *= 0.5;
            }
            if (!improved) break;
        }
    }
    res.value = f;
    res.argmax = std::move(x);
    return res;
}

void random_direction(Engine& engine, std::span<double> out) {
    std::normal_distribution<double> normal(0.0, 1.0);
    double len = 0.0;
    while (len < 1e-12) {
        for (double& v : out) v = normal(engine);
        len = norm(out);
    }
    for (double& v : out) v /= len;
}

void check_region(const MixtureConfig& config, double radius, std::size_t component) {
    if (!(radius >= 0.0)) throw std::invalid_argument("region radius must be nonnegative");
    if (component >= config.components()) throw std::invalid_argument("component index out of range");
}

}  // namespace

std::vector<Means> multistart_points(const Means& truth, double radius, std::size_t count, std::uint64_t seed) {
    std::vector<Means> starts;
    if (count == 0) return starts;
    starts.push_back(truth);
    auto engine = Engine(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<double> dir(truth.cols());
    const std::size_t boundary = (count - 1) / 2;
    const double d = static_cast<double>(truth.cols());
    for (std::size_t s = 1; s < count; ++s) {
        Means mu = truth;
        for (std::size_t i = 0; i < mu.rows(); ++i) {
            random_direction(engine, dir);
            const double r = s <= boundary ? radius : radius * std::pow(uniform(engine), 1.0 / d);
            for (std::size_t k = 0; k < dir.size(); ++k) mu(i, k) += r * dir[k];
        }
        starts.push_back(std::move(mu));
    }
    return starts;
}

SupEstimate empirical_rademacher(const Points& points, const MixtureConfig& config, double region_radius,
                                 std::size_t component, std::span<const double> direction,
                                 const AscentOptions& ascent, std::size_t replications, std::uint64_t seed) {
    check_region(config, region_radius, component);
    if (points.rows() == 0 || points.cols() != config.dim()) throw std::invalid_argument("sample shape mismatch");
    if (direction.size() != config.dim() || std::abs(norm(direction) - 1.0) > 1e-9) {
        throw std::invalid_argument("direction must be a unit vector of dimension d");
    }
    if (replications == 0) throw std::invalid_argument("need at least one replication");
    const std::size_t m = config.components();
    const std::size_t d = config.dim();
    const std::size_t n = points.rows();

    SupEstimate est;
    est.replications = replications;
    est.meta = {ascent.multistarts, ascent.iterations, 0, region_radius, component,
                std::vector<double>(direction.begin(), direction.end()), 0};
    double best_overall = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < replications; ++r) {
        auto engine = make_engine(seed, Stream::rademacher, r);
        std::bernoulli_distribution coin(0.5);
        std::vector<double> signs(n);
        for (double& s : signs) s = coin(engine) ? 1.0 : -1.0;
        const std::vector<PointSet> sets{{&points, &signs, 1.0 / static_cast<double>(n)}};
        Objective objective = [&](const Means& mu) {
            const auto kv = evaluate_kernel(sets, config.log_weights(), mu, component);
            return std::make_pair(dot(kv.value, direction), directional_gradient(kv, direction, m, d));
        };
        AscentResult best;
        const auto starts =
            multistart_points(config.means(), region_radius, ascent.multistarts, derive_seed(seed, Stream::multistart, r));
        for (const auto& start : starts) {
            auto res = projected_ascent(objective, start, config.means(), region_radius, ascent.iterations);
            est.meta.evaluations += res.evaluations;
            if (res.value > best.value) best = std::move(res);
        }
        est.replicate_values.push_back(best.value);
        if (best.value > best_overall) {
            best_overall = best.value;
            est.argmax = best.argmax;
        }
    }
    double mean = 0.0;
    for (double v : est.replicate_values) mean += v;
    mean /= static_cast<double>(replications);
    double var = 0.0;
    for (double v : est.replicate_values) var += (v - mean) * (v - mean);
    est.value = mean;
    est.std_err = replications > 1 ? std::sqrt(var / static_cast<double>(replications - 1) / replications) : 0.0;
    return est;
}

std::vector<std::vector<double>> half_net(std::size_t d, std::uint64_t seed) {
    if (d == 0 || d > 4) throw std::invalid_argument("half net is only built for 1 <= d <= 4");
    std::vector<std::vector<double>> net;
    if (d == 1) return {{1.0}, {-1.0}};
    if (d == 2) {
        // Angular step 1.0 keeps every direction within chord 2 sin(1/4) < 1/2.
        const auto k = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi / 1.0));
        for (std::size_t j = 0; j < k; ++j) {
            const double t = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(k);
            net.push_back({std::cos(t), std::sin(t)});
        }
        return net;
    }
    // Greedy 0.4-separated subset of dense random candidates; the slack below
    // 1/2 absorbs the gaps between candidates.
    auto engine = Engine(derive_seed(seed, 99));
    std::vector<double> v(d);
    for (int c = 0; c < 40000; ++c) {
        random_direction(engine, v);
        bool covered = false;
        for (const auto& u : net) {
            if (distance(u, v) < 0.4) {
                covered = true;
                break;
            }
        }
        if (!covered) net.push_back(v);
    }
    return net;
}

SupEstimate sup_gradient_deviation(const Points& points, const Points& population, const MixtureConfig& config,
                                   double region_radius, std::size_t component, const DeviationOptions& options,
                                   std::uint64_t seed) {
    check_region(config, region_radius, component);
    if (points.rows() == 0 || points.cols() != config.dim()) throw std::invalid_argument("sample shape mismatch");
    if (population.rows() < 2 || population.cols() != config.dim()) {
        throw std::invalid_argument("population sample shape mismatch");
    }
    const std::size_t m = config.components();
    const std::size_t d = config.dim();
    const std::vector<PointSet> sets{{&population, nullptr, 1.0 / static_cast<double>(population.rows())},
                                     {&points, nullptr, -1.0 / static_cast<double>(points.rows())}};

    SupEstimate est;
    est.replications = 1;
    est.meta = {options.ascent.multistarts, options.ascent.iterations, 0, region_radius, component, {}, 0};

    {
        // Noise floor of the population side at the truth.
        const auto ge = empirical_gradient(population, config.weights(), config.means());
        est.noise_floor = ge.std_err[component];
    }

    Objective norm_objective = [&](const Means& mu) {
        const auto kv = evaluate_kernel(sets, config.log_weights(), mu, component);
        const double len = norm(kv.value);
        std::vector<double> v(d, 0.0);
        if (len > 0.0) {
            for (std::size_t k = 0; k < d; ++k) v[k] = kv.value[k] / len;
        }
        return std::make_pair(len, directional_gradient(kv, v, m, d));
    };
    const auto starts = multistart_points(config.means(), region_radius, options.ascent.multistarts,
                                          derive_seed(seed, Stream::multistart));
    AscentResult best;
    for (const auto& start : starts) {
        auto res = projected_ascent(norm_objective, start, config.means(), region_radius, options.ascent.iterations);
        est.meta.evaluations += res.evaluations;
        if (res.value > best.value) best = std::move(res);
    }
    est.value = best.value;
    est.argmax = best.argmax;
    est.std_err = est.noise_floor;
    est.replicate_values = {est.value};

    if (options.covering && d <= 4) {
        const auto net = half_net(d, seed);
        est.meta.covering_size = net.size();
        std::vector<Means> dir_starts{best.argmax};
        for (std::size_t s = 0; s < std::min<std::size_t>(starts.size(), 4); ++s) dir_starts.push_back(starts[s]);
        double surrogate = 0.0;
        for (const auto& u : net) {
            Objective dir_objective = [&](const Means& mu) {
                const auto kv = evaluate_kernel(sets, config.log_weights(), mu, component);
                return std::make_pair(dot(kv.value, u), directional_gradient(kv, u, m, d));
            };
            for (const auto& start : dir_starts) {
                auto res = projected_ascent(dir_objective, start, config.means(), region_radius,
                                            options.ascent.iterations);
                est.meta.evaluations += res.evaluations;
                surrogate = std::max(surrogate, res.value);
            }
        }
        est.covering_surrogate = 2.0 * surrogate;
    }
    return est;
}

std::string to_string(ScalingQuantity q) {
    switch (q) {
        case ScalingQuantity::rademacher: return "rademacher";
        case ScalingQuantity::deviation: return "deviation";
        case ScalingQuantity::constant: return "constant";
    }
    return "unknown";
}

ScalingQuantity scaling_quantity_from_string(const std::string& s) {
    if (s == "rademacher") return ScalingQuantity::rademacher;
    if (s == "deviation") return ScalingQuantity::deviation;
    if (s == "constant") return ScalingQuantity::constant;
    throw std::invalid_argument("unknown scaling quantity '" + s + "'");
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope fit needs at least two points");
    double mx = 0.0, my = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

namespace {

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

std::string ScalingTable::csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "quantity,n,d,median,iqr,slope_fit\n";
    for (const auto& r : rows) {
        out << to_string(r.quantity) << ',' << r.n << ',' << r.d << ',' << r.median << ',' << r.iqr << ','
            << r.slope_fit << '\n';
    }
    return out.str();
}

double ScalingTable::slope(std::size_t d) const {
    for (const auto& r : rows) {
        if (r.d == d) return r.slope_fit;
    }
    throw std::invalid_argument("no rows for requested dimension");
}

std::vector<double> ScalingTable::medians_at(std::size_t n) const {
    std::vector<double> out;
    for (const auto& r : rows) {
        if (r.n == n) out.push_back(r.median);
    }
    return out;
}

ScalingTable scaling_study(ScalingQuantity quantity, const ConfigFamily& family, const ScalingOptions& options,
                           std::uint64_t seed) {
    if (options.ns.size() < 2 || options.ds.empty()) throw std::invalid_argument("scaling grid too small");
    if (options.seeds == 0) throw std::invalid_argument("need at least one seed");
    if (options.replications == 0) throw std::invalid_argument("need at least one replication");
    ScalingTable table;
    for (std::size_t d : options.ds) {
        const MixtureConfig config = family(d);
        double radius = 0.0;
        if (options.region_radius) {
            radius = *options.region_radius;
        } else {
            const auto stats = separation_stats(config);
            try {
                radius = contraction_radius(stats, config.components(), config.pi_min(), RadiusMode::solved);
            } catch (const std::domain_error&) {
                radius = 0.25 * stats.r_min;
            }
        }
        table.region_radius = radius;
        Points population;
        if (quantity == ScalingQuantity::deviation) {
            population = sample_points(config, options.population_samples, derive_seed(seed, Stream::population));
        }
        std::vector<double> medians;
        std::vector<double> floors;
        const std::size_t first_row = table.rows.size();
        for (std::size_t n : options.ns) {
            std::vector<double> values;
            double floor = 0.0;
            for (std::size_t s = 0; s < options.seeds; ++s) {
                // Seeds ignore d: leading sample columns and Rademacher signs are shared
                // across the dimension sweep.
                const std::uint64_t run_seed = derive_seed(derive_seed(seed, Stream::trials), n, s);
                if (quantity == ScalingQuantity::constant) {
                    values.push_back(1.0);
                    continue;
                }
                const Points pts = sample_points(config, n, run_seed);
                if (quantity == ScalingQuantity::rademacher) {
                    std::vector<double> u(d, 0.0);
                    u[0] = 1.0;
                    values.push_back(
                        empirical_rademacher(pts, config, radius, options.component, u, options.ascent, options.replications, run_seed).value);
                } else {
                    const auto est = sup_gradient_deviation(pts, population, config, radius, options.component,
                                                            {options.ascent, false}, run_seed);
                    floor = est.noise_floor;
                    values.push_back(est.value);
                }
            }
            ScalingRow row;
            row.quantity = quantity;
            row.n = n;
            row.d = d;
            row.median = quantile(values, 0.5);
            row.iqr = quantile(values, 0.75) - quantile(values, 0.25);
            row.noise_floor = floor;
            medians.push_back(std::sqrt(std::max(row.median * row.median - floor * floor, 1e-300)));
            table.rows.push_back(row);
        }
        const std::vector<double> xs(options.ns.begin(), options.ns.end());
        const double slope = loglog_slope(xs, medians);
        for (std::size_t r = first_row; r < table.rows.size(); ++r) table.rows[r].slope_fit = slope;
    }
    return table;
}

}  // namespace gemmix
