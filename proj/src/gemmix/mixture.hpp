#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gemmix/matrix.hpp"

namespace gemmix {

// Ground-truth isotropic Gaussian mixture with unit covariance.
//
// Construction validates the model: weights strictly positive and summing to
// one within 1e-12, finite means of a common dimension, pairwise distinct
// centers. Instances are immutable.
class MixtureConfig {
public:
    MixtureConfig(std::vector<double> weights, Means means);

    static MixtureConfig from_json(const nlohmann::json& j);
    static MixtureConfig load(const std::string& path);
    nlohmann::json to_json() const;

    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& log_weights() const { return log_weights_; }
    const Means& means() const { return means_; }
    std::size_t dim() const { return means_.cols(); }
    std::size_t components() const { return means_.rows(); }
    double pi_min() const;
    double pi_max() const;

    // Weighted mean sum_i pi_i mu_i.
    std::vector<double> weighted_mean() const;

    bool operator==(const MixtureConfig&) const = default;

private:
    std::vector<double> weights_;
    std::vector<double> log_weights_;
    Means means_;
};

struct SeparationStats {
    double r_min = 0.0;
    double r_max = 0.0;
    double kappa = 1.0;
    std::size_t d0 = 0;
    double max_center_norm = 0.0;
};

// Draws from the mixture. Labels are kept for diagnostics only; estimators
// take `points` and never see them.
struct Sample {
    Points points;
    std::vector<int> labels;
};

// Shifts every mean by -sum_i pi_i mu_i so the mixture has mean zero.
MixtureConfig center_means(const MixtureConfig& config);

SeparationStats separation_stats(const MixtureConfig& config);

// n i.i.d. draws, bit-reproducible for a given seed regardless of thread count.
Sample sample(const MixtureConfig& config, std::size_t n, std::uint64_t seed);

// Draws into the points-only view; used for Monte-Carlo reference samples.
Points sample_points(const MixtureConfig& config, std::size_t n, std::uint64_t seed);

// Posterior membership w_i(x; mu) for the given means and log-weights,
// written into `out`. Computed with a max-shift in log space.
void responsibilities_into(const Means& means, std::span<const double> log_weights,
                           std::span<const double> x, std::span<double> out);

std::vector<double> responsibilities(const Means& means, std::span<const double> weights,
                                     std::span<const double> x);
std::vector<double> responsibilities(const MixtureConfig& config, std::span<const double> x);

double log_density(const MixtureConfig& config, std::span<const double> x);

// Multiplies all means by 1/sigma: a mixture with shared covariance sigma^2 I
// maps onto the unit-covariance model.
MixtureConfig prescale(const MixtureConfig& config, double sigma);

void write_sample_csv(const Sample& s, const std::string& path);
std::string sample_csv(const Sample& s);

}  // namespace gemmix
