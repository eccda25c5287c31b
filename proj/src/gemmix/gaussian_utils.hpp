#pragma once

#include <cstddef>

#include "gemmix/mixture.hpp"

namespace gemmix {

// E||X - mu||^p for X ~ N(mu, sigma^2 I_d):  2^{p/2} Gamma((p+d)/2) / Gamma(d/2) sigma^p.
double gaussian_norm_moment(int p, std::size_t d, double sigma = 1.0);

// Upper bound exp(-r sqrt(d) / 2) on P(||X|| >= r) for standard normal X.
// Only valid for r >= 2 sqrt(d); throws std::domain_error below that.
double gaussian_norm_tail(double r, std::size_t d);

// Sub-gaussian norm bound 1 + sum_i pi_i ||mu_i|| for the unit-variance mixture.
double mixture_subgaussian_norm(const MixtureConfig& config);

// (1 + 2/eps)^d, a bound on the eps-covering number of the unit sphere in R^d.
double sphere_covering_bound(std::size_t d, double eps);

}  // namespace gemmix
