#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gemmix/matrix.hpp"
#include "gemmix/mixture.hpp"

namespace gemmix {

struct AscentOptions {
    std::size_t multistarts = 16;
    std::size_t iterations = 200;
};

struct OptimizerMeta {
    std::size_t multistarts = 0;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    double region_radius = 0.0;
    std::size_t component = 0;
    std::vector<double> direction;  // u, when the quantity has one
    std::size_t covering_size = 0;
};

struct SupEstimate {
    double value = 0.0;
    double std_err = 0.0;
    std::size_t replications = 0;
    std::vector<double> replicate_values;
    OptimizerMeta meta;
    double noise_floor = 0.0;                  // Monte-Carlo floor of the population side
    std::optional<double> covering_surrogate;  // 2 max_j g^{u_j} over a 1/2-net, d <= 4
    Means argmax;

    double median() const;
    nlohmann::json to_json() const;
};

// Start points for the sup over A = prod_i B(mu_i*, a): the truth, points on
// the region boundary, and uniform interior points, in that order.
std::vector<Means> multistart_points(const Means& truth, double radius, std::size_t count, std::uint64_t seed);

// E_eps sup_{mu in A} (1/n) sum_j eps_j w_i(x_j; mu) <x_j - mu_i, u>, estimated
// with `replications` sign draws; each sup is a multistart projected gradient
// ascent with the analytic gradient in mu.
SupEstimate empirical_rademacher(const Points& points, const MixtureConfig& config, double region_radius,
                                 std::size_t component, std::span<const double> direction,
                                 const AscentOptions& ascent, std::size_t replications, std::uint64_t seed);

struct DeviationOptions {
    AscentOptions ascent;
    bool covering = true;  // compute the covering surrogate when d <= 4
};

// sup_{mu in A} ||G^{(i)}(mu) - G_n^{(i)}(mu)|| with G^{(i)}(mu) = E w_i(X; mu)(X - mu_i)
// taken over `population` (an independent mega-sample).
SupEstimate sup_gradient_deviation(const Points& points, const Points& population, const MixtureConfig& config,
                                   double region_radius, std::size_t component, const DeviationOptions& options,
                                   std::uint64_t seed);

// A 1/2-net of the unit sphere in R^d (d <= 4), size at most exp(2d).
std::vector<std::vector<double>> half_net(std::size_t d, std::uint64_t seed = 0);

enum class ScalingQuantity { rademacher, deviation, constant };
std::string to_string(ScalingQuantity q);
ScalingQuantity scaling_quantity_from_string(const std::string& s);

struct ScalingOptions {
    std::vector<std::size_t> ns;
    std::vector<std::size_t> ds;
    std::size_t seeds = 20;
    std::size_t replications = 1;  // Rademacher sign draws averaged per seed
    std::size_t component = 0;
    std::optional<double> region_radius;  // default: solved contraction radius, else R_min / 4
    AscentOptions ascent{4, 40};
    std::size_t population_samples = 1'000'000;
};

struct ScalingRow {
    ScalingQuantity quantity;
    std::size_t n = 0;
    std::size_t d = 0;
    double median = 0.0;
    double iqr = 0.0;
    double slope_fit = 0.0;   // log-log slope of the median vs n at this d
    double noise_floor = 0.0;
};

struct ScalingTable {
    std::vector<ScalingRow> rows;
    double region_radius = 0.0;

    std::string csv() const;
    // Slope for a given d, and the d-trend of medians at a given n.
    double slope(std::size_t d) const;
    std::vector<double> medians_at(std::size_t n) const;
};

using ConfigFamily = std::function<MixtureConfig(std::size_t d)>;

ScalingTable scaling_study(ScalingQuantity quantity, const ConfigFamily& family, const ScalingOptions& options,
                           std::uint64_t seed);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace gemmix
