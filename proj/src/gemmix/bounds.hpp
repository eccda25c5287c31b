#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gemmix/matrix.hpp"
#include "gemmix/mixture.hpp"

namespace gemmix {

// gamma = M^2 (2 kappa + 4)(2 R_max + d0)^2 exp(-(R_min/2 - a)^2 sqrt(d0) / 8).
// Requires 0 <= a < R_min/2.
double gamma_gs(const SeparationStats& stats, std::size_t components, double radius_a);

struct Rate {
    double zeta = 0.0;
    bool contractive = true;  // false once gamma >= pi_min (zeta >= 1)
};

// zeta = (pi_max - pi_min + 2 gamma) / (pi_max + pi_min).
Rate zeta_rate(double pi_min, double pi_max, double gamma);

enum class RadiusMode {
    explicit_gs,  // a = R_min/2 - sqrt(d0) max(4 sqrt(2 [log(R_min/4)]_+), 8 sqrt(3))
    solved,       // largest a in [0, R_min/2) with gamma_gs(a) < pi_min, by bisection
    asymptotic,   // a = R_min/2 - c_a sqrt(d0) sqrt(log max{M^2 kappa / pi_min, R_max, d0})
};

std::string to_string(RadiusMode mode);
RadiusMode radius_mode_from_string(const std::string& s);

inline constexpr double kRadiusTolerance = 1e-10;

// Throws std::domain_error("separation too small for certificate") when no
// positive admissible radius exists.
double contraction_radius(const SeparationStats& stats, std::size_t components, double pi_min, RadiusMode mode,
                          double c_a = 1.0);

enum class EpsMode { original, improved };

// Uniform sample-deviation bound with a user constant c:
//   original: c max{ M^3 (1+R_max)^3 sqrt(d) max{1, log kappa} / sqrt(n),
//                    (1+R_max) d log^{5/2}(n) / sqrt(n) }
//   improved: c M^{3/2} (1 + 3 R_max)^3 max{1, log kappa} sqrt(d log n / n)
double eps_unif(double r_max, double kappa, std::size_t components, std::size_t dim, std::size_t n,
                double constant_c, EpsMode mode);

// ceil( log(1/delta) / sqrt(2 pi M) * (e / (1 - exp(-a sqrt(d) / 2)))^M ).
// Assumes equal weights.
std::size_t restart_count(std::size_t components, double radius_a, std::size_t dim, double delta);

// Iterations needed for zeta^t err0 <= tol; nullopt when zeta >= 1 or zeta == 0
// is not informative (returns 1 for zeta == 0).
std::optional<std::size_t> predicted_iterations(double zeta, double err0, double tol);

struct BoundOptions {
    RadiusMode mode = RadiusMode::solved;
    double c_a = 1.0;
    double c_eps = 1.0;
    EpsMode eps_mode = EpsMode::improved;
    std::size_t n = 12'000;
    double delta = 0.05;
};

struct BoundReport {
    bool certified = false;  // a positive admissible radius exists
    std::string message;
    double gamma = 0.0;
    Rate rate;
    double radius_a = 0.0;
    double eps_unif = 0.0;
    std::optional<std::size_t> restart_count;  // only for equal weights
    SeparationStats stats;
    std::size_t components = 0;
    std::size_t dim = 0;
    double pi_min = 0.0;
    double pi_max = 0.0;
    BoundOptions options;

    nlohmann::json to_json() const;
};

BoundReport bound_report(const MixtureConfig& config, const BoundOptions& options = {});

struct GsTrial {
    Means point;
    double distance = 0.0;   // ||mu - mu*||
    double deviation = 0.0;  // ||grad Q(mu|mu) - grad q(mu)||, Monte-Carlo
    double std_err = 0.0;    // standard error of deviation
    double ratio = 0.0;      // deviation / distance
    double ratio_std_err = 0.0;
    bool skipped = false;
    std::string note;
};

struct GsReport {
    std::vector<GsTrial> trials;
    double radius_a = 0.0;
    double gamma_hat = 0.0;
    double gamma_hat_std_err = 0.0;
    double gamma_bound = 0.0;
    bool pass = false;
    std::size_t mc_samples = 0;

    nlohmann::json to_json() const;
};

// Default probe layout: for each component c, 8 points with mu_c at radius
// {a/4, a/2, 3a/4, a - tol} (each twice) and the other components at half that
// radius, all in seeded random directions.
std::vector<Means> default_gs_trial_points(const MixtureConfig& config, double radius_a, std::uint64_t seed);

// Estimates ||grad Q(mu|mu) - grad q(mu)|| / ||mu - mu*|| at each trial point.
// The estimate pairs w_i(X; mu) with w_i(X; mu*) on a shared Monte-Carlo
// sample; the second term has the exact mean pi_i (mu_i* - mu_i).
// PASS iff gamma_hat + 4 se <= gamma_gs(a).
GsReport verify_gs_empirical(const MixtureConfig& config, const std::vector<Means>& trial_points, double radius_a,
                             std::size_t mc_samples, std::uint64_t seed);

}  // namespace gemmix
