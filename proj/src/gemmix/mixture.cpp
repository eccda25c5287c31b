#include "gemmix/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "gemmix/parallel.hpp"
#include "gemmix/rng.hpp"

namespace gemmix {

MixtureConfig::MixtureConfig(std::vector<double> weights, Means means)
    : weights_(std::move(weights)), means_(std::move(means)) {
    if (weights_.empty()) throw std::invalid_argument("mixture needs at least one component");
    if (means_.rows() != weights_.size()) {
        throw std::invalid_argument("number of means does not match number of weights");
    }
    if (means_.cols() == 0) throw std::invalid_argument("dimension must be positive");
    double total = 0.0;
    for (double w : weights_) {
        if (!std::isfinite(w) || w <= 0.0) throw std::invalid_argument("weights must be strictly positive");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("weights must sum to 1");
    if (!all_finite(means_.flat())) throw std::invalid_argument("means must be finite");
    for (std::size_t i = 0; i < means_.rows(); ++i) {
        for (std::size_t j = i + 1; j < means_.rows(); ++j) {
            if (squared_distance(means_.row(i), means_.row(j)) == 0.0) {
                throw std::invalid_argument("means must be pairwise distinct");
            }
        }
    }
    log_weights_.resize(weights_.size());
    std::transform(weights_.begin(), weights_.end(), log_weights_.begin(), [](double w) { return std::log(w); });
}

MixtureConfig MixtureConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("mixture config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (key != "weights" && key != "means" && key != "dim" && key != "components") {
            throw std::invalid_argument("unknown mixture config key '" + key + "'");
        }
    }
    if (!j.contains("weights") || !j.contains("means") || !j.contains("dim")) {
        throw std::invalid_argument("mixture config requires keys weights, means, dim");
    }
    if (!j["dim"].is_number_integer() || j["dim"].get<long long>() < 1) {
        throw std::invalid_argument("dim must be a positive integer");
    }
    const auto dim = j["dim"].get<std::size_t>();
    std::vector<double> weights;
    std::vector<std::vector<double>> rows;
    try {
        weights = j["weights"].get<std::vector<double>>();
        rows = j["means"].get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed mixture config: ") + e.what());
    }
    for (const auto& r : rows) {
        if (r.size() != dim) throw std::invalid_argument("every mean must have length dim");
    }
    if (j.contains("components") && j["components"].get<std::size_t>() != rows.size()) {
        throw std::invalid_argument("components does not match number of means");
    }
    return MixtureConfig(std::move(weights), Matrix::from_rows(rows));
}

MixtureConfig MixtureConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(j);
}

nlohmann::json MixtureConfig::to_json() const {
    return {{"weights", weights_}, {"means", means_.to_rows()}, {"dim", dim()}};
}

double MixtureConfig::pi_min() const { return *std::min_element(weights_.begin(), weights_.end()); }
double MixtureConfig::pi_max() const { return *std::max_element(weights_.begin(), weights_.end()); }

std::vector<double> MixtureConfig::weighted_mean() const {
    std::vector<double> m(dim(), 0.0);
    for (std::size_t i = 0; i < components(); ++i) {
        auto mu = means_.row(i);
        for (std::size_t k = 0; k < dim(); ++k) m[k] += weights_[i] * mu[k];
    }
    return m;
}

MixtureConfig center_means(const MixtureConfig& config) {
    const auto shift = config.weighted_mean();
    Means centered = config.means();
    for (std::size_t i = 0; i < centered.rows(); ++i) {
        auto mu = centered.row(i);
        for (std::size_t k = 0; k < mu.size(); ++k) mu[k] -= shift[k];
    }
    return MixtureConfig(config.weights(), std::move(centered));
}

SeparationStats separation_stats(const MixtureConfig& config) {
    const std::size_t m = config.components();
    if (m < 2) throw std::invalid_argument("need at least two components");
    SeparationStats s;
    s.r_min = std::numeric_limits<double>::infinity();
    s.r_max = 0.0;
    const auto& means = config.means();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double r = distance(means.row(i), means.row(j));
            s.r_min = std::min(s.r_min, r);
            s.r_max = std::max(s.r_max, r);
        }
        s.max_center_norm = std::max(s.max_center_norm, norm(means.row(i)));
    }
    s.kappa = config.pi_max() / config.pi_min();
    s.d0 = std::min(config.dim(), m);
    return s;
}

namespace {

// Labels for the whole block come first, then coordinates one column at a
// time. For a fixed seed the first k coordinates therefore do not depend on d,
// so samples drawn in different dimensions share their leading columns.
void fill_block(const MixtureConfig& config, std::uint64_t seed, std::size_t block, std::size_t begin,
                std::size_t end, Points& points, int* labels) {
    auto engine = make_engine(seed, Stream::sampling, block);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto& w = config.weights();
    const std::size_t m = w.size();
    const std::size_t d = config.dim();
    std::vector<std::size_t> block_labels(end - begin);
    for (std::size_t p = begin; p < end; ++p) {
        const double u = uniform(engine);
        std::size_t label = 0;
        double cumulative = w[0];
        while (label + 1 < m && u >= cumulative) cumulative += w[++label];
        block_labels[p - begin] = label;
        if (labels) labels[p] = static_cast<int>(label);
    }
    const auto& means = config.means();
    for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t p = begin; p < end; ++p) points(p, k) = means(block_labels[p - begin], k) + normal(engine);
    }
}

Points draw(const MixtureConfig& config, std::size_t n, std::uint64_t seed, std::vector<int>* labels) {
    if (n == 0) throw std::invalid_argument("sample size must be at least 1");
    Points points(n, config.dim());
    if (labels) labels->assign(n, 0);
    int* label_data = labels ? labels->data() : nullptr;
    parallel_for(block_count(n), [&](std::size_t b) {
        const std::size_t begin = b * kBlockSize;
        fill_block(config, seed, b, begin, std::min(n, begin + kBlockSize), points, label_data);
    });
    return points;
}

}  // namespace

Sample sample(const MixtureConfig& config, std::size_t n, std::uint64_t seed) {
    Sample s;
    s.points = draw(config, n, seed, &s.labels);
    return s;
}

Points sample_points(const MixtureConfig& config, std::size_t n, std::uint64_t seed) {
    return draw(config, n, seed, nullptr);
}

void responsibilities_into(const Means& means, std::span<const double> log_weights, std::span<const double> x,
                           std::span<double> out) {
    const std::size_t m = means.rows();
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
        out[i] = log_weights[i] - 0.5 * squared_distance(x, means.row(i));
        top = std::max(top, out[i]);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        // exp(0) is exactly 1; skipping it for the leading term saves one exp per point.
        out[i] = out[i] == top ? 1.0 : std::exp(out[i] - top);
        total += out[i];
    }
    for (std::size_t i = 0; i < m; ++i) out[i] /= total;
}

std::vector<double> responsibilities(const Means& means, std::span<const double> weights, std::span<const double> x) {
    if (x.size() != means.cols()) throw std::invalid_argument("point dimension does not match means");
    if (!all_finite(x)) throw std::invalid_argument("point must be finite");
    std::vector<double> logw(weights.size());
    std::transform(weights.begin(), weights.end(), logw.begin(), [](double w) { return std::log(w); });
    std::vector<double> out(means.rows());
    responsibilities_into(means, logw, x, out);
    return out;
}

std::vector<double> responsibilities(const MixtureConfig& config, std::span<const double> x) {
    return responsibilities(config.means(), config.weights(), x);
}

double log_density(const MixtureConfig& config, std::span<const double> x) {
    if (x.size() != config.dim()) throw std::invalid_argument("point dimension does not match config");
    const std::size_t m = config.components();
    std::vector<double> terms(m);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
        terms[i] = config.log_weights()[i] - 0.5 * squared_distance(x, config.means().row(i));
        top = std::max(top, terms[i]);
    }
    double total = 0.0;
    for (double t : terms) total += std::exp(t - top);
    const double d = static_cast<double>(config.dim());
    return top + std::log(total) - 0.5 * d * std::log(2.0 * std::numbers::pi);
}

MixtureConfig prescale(const MixtureConfig& config, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    Means scaled = config.means();
    for (double& v : scaled.flat()) v /= sigma;
    return MixtureConfig(config.weights(), std::move(scaled));
}

std::string sample_csv(const Sample& s) {
    std::ostringstream out;
    out.precision(17);
    const std::size_t d = s.points.cols();
    for (std::size_t k = 0; k < d; ++k) out << 'x' << (k + 1) << ',';
    out << "label\n";
    for (std::size_t p = 0; p < s.points.rows(); ++p) {
        for (double v : s.points.row(p)) out << v << ',';
        out << s.labels[p] << '\n';
    }
    return out.str();
}

void write_sample_csv(const Sample& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << sample_csv(s);
}

}  // namespace gemmix
