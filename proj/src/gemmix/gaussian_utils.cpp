#include "gemmix/gaussian_utils.hpp"

#include <cmath>
#include <stdexcept>

namespace gemmix {

double gaussian_norm_moment(int p, std::size_t d, double sigma) {
    if (d < 1) throw std::invalid_argument("dimension must be at least 1");
    if (p < 0 || p > 3) throw std::invalid_argument("moment order must be in {0,1,2,3}");
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    const double dd = static_cast<double>(d);
    const double log_ratio = std::lgamma(0.5 * (p + dd)) - std::lgamma(0.5 * dd);
    return std::pow(2.0, 0.5 * p) * std::exp(log_ratio) * std::pow(sigma, p);
}

double gaussian_norm_tail(double r, std::size_t d) {
    if (d < 1) throw std::invalid_argument("dimension must be at least 1");
    const double root_d = std::sqrt(static_cast<double>(d));
    if (!(r >= 2.0 * root_d)) throw std::domain_error("bound invalid below 2*sqrt(d)");
    return std::exp(-0.5 * r * root_d);
}

double mixture_subgaussian_norm(const MixtureConfig& config) {
    double s = 1.0;
    for (std::size_t i = 0; i < config.components(); ++i) {
        s += config.weights()[i] * norm(config.means().row(i));
    }
    return s;
}

double sphere_covering_bound(std::size_t d, double eps) {
    if (!(eps > 0.0 && eps <= 2.0)) throw std::invalid_argument("eps must lie in (0, 2]");
    return std::pow(1.0 + 2.0 / eps, static_cast<double>(d));
}

}  // namespace gemmix
