#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gemmix/bounds.hpp"
#include "gemmix/empirical.hpp"
#include "gemmix/experiment_spec.hpp"

namespace gemmix {

// Iterate offset used when a configuration has no certified contraction
// radius: each mu_i^0 starts R_min / 4 away from mu_i*.
inline constexpr double kUncertifiedInitFraction = 0.25;

// A trial's fit window ends at the first iterate whose error is within this
// factor of the terminal error.
inline constexpr double kPlateauFactor = 10.0;

// Per-iteration contraction factor exp(slope) of a least-squares line through
// log(err_t) over the pre-plateau window of one trajectory.
double fitted_contraction_factor(const std::vector<double>& errors);

struct ConvergenceCurve {
    double snr = 0.0;
    bool certified = false;
    double init_offset = 0.0;            // ||mu_i^0 - mu_i*|| per component
    std::vector<double> mean_log_err;    // over trials, padded with each trial's terminal error
    std::vector<double> sd_log_err;
    std::vector<double> trial_factors;
    double fitted_factor = 0.0;          // median of trial_factors
    double decay_ratio = 0.0;            // mean error at t=0 over the smallest mean error for t <= 25
    std::size_t diverged_trials = 0;
};

struct ConvergenceResult {
    std::vector<ConvergenceCurve> curves;
    nlohmann::json summary() const;
};

ConvergenceResult convergence_study(const ExperimentSpec& spec);

struct ProbeRun {
    double eps_fraction = 0.0;  // eps / R_min
    std::size_t trial = 0;
    double final_error = 0.0;   // ||mu^T - mu*|| / R_min
    std::string status;
    std::vector<double> path;   // err_total / R_min per iteration
};

struct RegionProbeResult {
    double r_min = 0.0;
    std::vector<ProbeRun> runs;
    nlohmann::json summary() const;
};

RegionProbeResult region_probe(const ExperimentSpec& spec);

struct BoundsResult {
    BoundReport report;
    // Certificate for the companion run: every iterate stays within the initial
    // stacked error err_0 of the truth, so gamma is evaluated at radius err_0.
    double run_gamma = 0.0;
    Rate run_rate;
    std::optional<std::size_t> predicted_iterations;
    std::optional<std::size_t> measured_iterations;
    double initial_error = 0.0;
    double target_tol = 0.0;
    double measured_factor = 0.0;  // geometric mean of err_{t+1}/err_t over the measured run
    nlohmann::json summary() const;
    std::string table() const;
};

BoundsResult bounds_study(const ExperimentSpec& spec);

struct GsRow {
    double r_min = 0.0;
    GsReport report;
};

struct GsStudyResult {
    std::vector<GsRow> rows;
    nlohmann::json summary() const;
};

GsStudyResult verify_gs_study(const ExperimentSpec& spec);

ScalingTable scaling_experiment(const ExperimentSpec& spec);

struct StochasticResult {
    std::vector<std::size_t> t_grid;
    std::vector<double> mse;  // mean over trials of ||mu^t - mu*||^2
    double slope = 0.0;       // log-log slope of mse over [fit_t_min, fit_t_max]
    double step_constant = 0.0;
    double projection_radius = 0.0;
    nlohmann::json summary() const;
};

StochasticResult stochastic_study(const ExperimentSpec& spec);

struct ExperimentOutcome {
    std::string name;
    ExperimentKind kind = ExperimentKind::convergence;
    bool ok = false;
    std::string error;
    std::vector<std::string> artifacts;  // paths relative to out_dir
    nlohmann::json summary;
    std::string report;  // human-readable table, when the kind has one
};

// Runs one experiment and writes its CSV, SVG and JSON artifacts into out_dir.
// Failures propagate as exceptions.
ExperimentOutcome run_experiment(const ExperimentSpec& spec, const std::string& out_dir);

// Runs every experiment, recording failures and continuing, then writes
// out_dir/manifest.json with artifact checksums. Returns the manifest.
nlohmann::json run_suite(const std::vector<ExperimentSpec>& specs, const std::string& out_dir);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace gemmix
