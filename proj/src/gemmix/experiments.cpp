#include "gemmix/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

#include "gemmix/em.hpp"
#include "gemmix/parallel.hpp"
#include "gemmix/rng.hpp"
#include "gemmix/svg.hpp"

namespace gemmix {

namespace {

constexpr double kLogFloor = 1e-300;
constexpr std::size_t kDecayWindow = 25;

double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

void random_unit(Engine& engine, std::span<double> out) {
    std::normal_distribution<double> normal(0.0, 1.0);
    double len = 0.0;
    do {
        len = 0.0;
        for (double& v : out) {
            v = normal(engine);
            len += v * v;
        }
    } while (len < 1e-24);
    len = std::sqrt(len);
    for (double& v : out) v /= len;
}

// mu_i^0 = mu_i* + offset * u_i with independent uniform directions u_i.
Means perturbed_init(const Means& truth, double offset, std::uint64_t seed) {
    auto engine = make_engine(seed, Stream::initialization);
    Means init = truth;
    std::vector<double> dir(truth.cols());
    for (std::size_t i = 0; i < init.rows(); ++i) {
        random_unit(engine, dir);
        for (std::size_t k = 0; k < dir.size(); ++k) init(i, k) += offset * dir[k];
    }
    return init;
}

std::optional<double> solved_radius(const MixtureConfig& config) {
    try {
        return contraction_radius(separation_stats(config), config.components(), config.pi_min(), RadiusMode::solved);
    } catch (const std::domain_error&) {
        return std::nullopt;
    }
}

std::vector<std::optional<double>> snr_points(const ExperimentSpec& spec) {
    std::vector<std::optional<double>> out;
    if (spec.snr_grid.empty()) {
        out.emplace_back(std::nullopt);
    } else {
        for (double s : spec.snr_grid) out.emplace_back(s);
    }
    return out;
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t trial) { return derive_seed(master, Stream::trials, trial); }

std::string num(double v) {
    std::ostringstream o;
    o << std::setprecision(6) << v;
    return o.str();
}

}  // namespace

double fitted_contraction_factor(const std::vector<double>& errors) {
    if (errors.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double terminal = errors.back();
    std::size_t end = errors.size() - 1;
    for (std::size_t t = 1; t < errors.size(); ++t) {
        if (errors[t] <= kPlateauFactor * terminal) {
            end = t;
            break;
        }
    }
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    const double count = static_cast<double>(end + 1);
    for (std::size_t t = 0; t <= end; ++t) {
        const double x = static_cast<double>(t);
        const double y = std::log(std::max(errors[t], kLogFloor));
        st += x;
        sy += y;
        stt += x * x;
        sty += x * y;
    }
    const double slope = (count * sty - st * sy) / (count * stt - st * st);
    return std::exp(slope);
}

// ---------------------------------------------------------------- convergence

nlohmann::json ConvergenceResult::summary() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : curves) {
        arr.push_back({{"snr", c.snr},
                       {"certified", c.certified},
                       {"init_offset", c.init_offset},
                       {"fitted_factor", c.fitted_factor},
                       {"trial_factors", c.trial_factors},
                       {"decay_ratio", c.decay_ratio},
                       {"diverged_trials", c.diverged_trials}});
    }
    return {{"curves", arr}};
}

ConvergenceResult convergence_study(const ExperimentSpec& spec) {
    ConvergenceResult result;
    const auto snrs = snr_points(spec);
    // Build every model first so an infeasible generator fails before any run.
    std::vector<MixtureConfig> configs;
    for (const auto& snr : snrs) configs.push_back(spec.model_at(snr));

    EmOptions options;
    options.max_iters = spec.max_iters;
    options.tol = spec.tol;

    for (std::size_t s = 0; s < configs.size(); ++s) {
        const auto& config = configs[s];
        const auto stats = separation_stats(config);
        ConvergenceCurve curve;
        curve.snr = snrs[s].value_or(stats.r_min);
        const auto radius = solved_radius(config);
        curve.certified = radius.has_value();
        curve.init_offset = spec.init_radius ? *spec.init_radius
                            : radius      ? 0.5 * *radius
                                          : kUncertifiedInitFraction * stats.r_min;

        std::vector<std::vector<double>> errors(spec.trials);
        std::vector<RunStatus> statuses(spec.trials);
        parallel_for(spec.trials, [&](std::size_t t) {
            // Trial seeds do not depend on the SNR, so every SNR sees the same
            // noise draws and init directions.
            const std::uint64_t ts = trial_seed(spec.seed, t);
            const Points points = sample_points(config, spec.n, derive_seed(ts, Stream::sampling));
            const Means init = perturbed_init(config.means(), curve.init_offset, ts);
            std::optional<Means> reference;
            if (spec.against_best_fixed_point) {
                EmOptions fp = options;
                fp.max_iters = std::max<std::size_t>(10 * options.max_iters, 1000);
                fp.tol = std::min(options.tol, 1e-10);
                reference = run_sample_em(config, points, config.means(), fp).final_means;
            }
            const auto traj = run_sample_em(config, points, init, options, reference ? &*reference : nullptr);
            for (const auto& rec : traj.records) errors[t].push_back(rec.err_total);
            statuses[t] = traj.status;
        });

        std::size_t length = 0;
        for (const auto& e : errors) length = std::max(length, e.size());
        curve.mean_log_err.assign(length, 0.0);
        curve.sd_log_err.assign(length, 0.0);
        for (std::size_t k = 0; k < length; ++k) {
            std::vector<double> logs;
            for (const auto& e : errors) logs.push_back(std::log(std::max(e[std::min(k, e.size() - 1)], kLogFloor)));
            const double mean = std::accumulate(logs.begin(), logs.end(), 0.0) / static_cast<double>(logs.size());
            double var = 0.0;
            for (double v : logs) var += (v - mean) * (v - mean);
            curve.mean_log_err[k] = mean;
            curve.sd_log_err[k] = logs.size() > 1 ? std::sqrt(var / static_cast<double>(logs.size() - 1)) : 0.0;
        }
        for (std::size_t t = 0; t < spec.trials; ++t) {
            if (statuses[t] == RunStatus::diverged) {
                ++curve.diverged_trials;
                curve.trial_factors.push_back(std::numeric_limits<double>::infinity());
            } else {
                curve.trial_factors.push_back(fitted_contraction_factor(errors[t]));
            }
        }
        curve.fitted_factor = median_of(curve.trial_factors);
        const std::size_t window = std::min(length, kDecayWindow + 1);
        const double lowest = *std::min_element(curve.mean_log_err.begin(), curve.mean_log_err.begin() + window);
        curve.decay_ratio = std::exp(curve.mean_log_err.front() - lowest);
        result.curves.push_back(std::move(curve));
    }
    return result;
}

// --------------------------------------------------------------- region probe

nlohmann::json RegionProbeResult::summary() const {
    std::map<double, std::vector<double>> by_eps;
    for (const auto& r : runs) by_eps[r.eps_fraction].push_back(r.final_error);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [eps, finals] : by_eps) {
        const auto below = std::count_if(finals.begin(), finals.end(), [](double e) { return e < 0.05; });
        const auto above = std::count_if(finals.begin(), finals.end(), [](double e) { return e > 0.2; });
        arr.push_back({{"eps_fraction", eps},
                       {"median_final_error", median_of(finals)},
                       {"trials", finals.size()},
                       {"converged_below_0.05", below},
                       {"stalled_above_0.2", above}});
    }
    return {{"r_min", r_min}, {"eps", arr}};
}

RegionProbeResult region_probe(const ExperimentSpec& spec) {
    const auto snrs = snr_points(spec);
    const MixtureConfig config = spec.model_at(snrs.front());
    if (config.components() < 3) throw std::invalid_argument("region probe needs at least three components");
    const auto stats = separation_stats(config);
    const std::vector<double> grid =
        spec.eps_grid.empty() ? std::vector<double>{0.0, 0.0125, 0.025, 0.05, 0.1, 0.2, 0.5} : spec.eps_grid;
    for (double e : grid) {
        if (!(e >= 0.0)) throw std::invalid_argument("eps_grid entries must be nonnegative");
    }

    // The straddled pair is components 1 and 2 (0-based); the arc layout puts
    // them at distance R_min.
    const std::size_t p = 1, q = 2;
    const Means& truth = config.means();
    const std::size_t d = config.dim();
    std::vector<double> mid(d), unit(d);
    for (std::size_t k = 0; k < d; ++k) {
        mid[k] = 0.5 * (truth(p, k) + truth(q, k));
        unit[k] = truth(q, k) - truth(p, k);
    }
    const double len = norm(unit);
    for (double& u : unit) u /= len;

    EmOptions options;
    options.max_iters = spec.max_iters;
    options.tol = spec.tol;

    RegionProbeResult result;
    result.r_min = stats.r_min;
    result.runs.resize(grid.size() * spec.trials);
    parallel_for(spec.trials, [&](std::size_t t) {
        const std::uint64_t ts = trial_seed(spec.seed, t);
        const Points points = sample_points(config, spec.n, derive_seed(ts, Stream::sampling));
        const Means jitter = perturbed_init(truth, 0.01 * stats.r_min, ts);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            Means init = jitter;
            const double eps = grid[g] * stats.r_min;
            for (std::size_t k = 0; k < d; ++k) {
                init(p, k) = mid[k] - eps * unit[k];
                init(q, k) = mid[k] + eps * unit[k];
            }
            const auto traj = run_sample_em(config, points, init, options);
            ProbeRun run;
            run.eps_fraction = grid[g];
            run.trial = t;
            for (const auto& rec : traj.records) run.path.push_back(rec.err_total / stats.r_min);
            run.final_error = run.path.back();
            run.status = to_string(traj.status);
            result.runs[g * spec.trials + t] = std::move(run);
        }
    });
    return result;
}

// --------------------------------------------------------------------- bounds

nlohmann::json BoundsResult::summary() const {
    nlohmann::json j = report.to_json();
    j["initial_error"] = initial_error;
    j["target_tol"] = target_tol;
    j["predicted_iterations"] = predicted_iterations ? nlohmann::json(*predicted_iterations) : nlohmann::json(nullptr);
    j["measured_iterations"] = measured_iterations ? nlohmann::json(*measured_iterations) : nlohmann::json(nullptr);
    j["measured_factor"] = measured_factor;
    j["run_gamma"] = run_gamma;
    j["run_zeta"] = run_rate.zeta;
    j["run_contractive"] = run_rate.contractive;
    return j;
}

std::string BoundsResult::table() const {
    std::ostringstream o;
    o << std::left << std::setw(4) << "M" << std::setw(12) << "R_min" << std::setw(14) << "gamma" << std::setw(14)
      << "zeta" << std::setw(12) << "a" << std::setw(14) << "zeta_run" << std::setw(11) << "predicted"
      << "measured\n";
    o << std::setw(4) << report.components << std::setw(12) << num(report.stats.r_min);
    if (!report.certified) {
        o << report.message << '\n';
        return o.str();
    }
    o << std::setw(14) << num(report.gamma) << std::setw(14)
      << (report.rate.contractive ? num(report.rate.zeta) : std::string("not-contractive")) << std::setw(12)
      << num(report.radius_a) << std::setw(14)
      << (run_rate.contractive && initial_error > 0.0 ? num(run_rate.zeta) : std::string("-")) << std::setw(11)
      << (predicted_iterations ? std::to_string(*predicted_iterations) : std::string("-"))
      << (measured_iterations ? std::to_string(*measured_iterations) : std::string("-")) << '\n';
    return o.str();
}

BoundsResult bounds_study(const ExperimentSpec& spec) {
    const auto snrs = snr_points(spec);
    const MixtureConfig config = spec.model_at(snrs.front());
    BoundOptions opts;
    opts.mode = radius_mode_from_string(spec.radius_mode);
    opts.c_a = spec.c_a;
    opts.c_eps = spec.c_eps;
    opts.eps_mode = spec.eps_mode == "original" ? EpsMode::original : EpsMode::improved;
    opts.n = spec.n;
    opts.delta = spec.delta;

    BoundsResult result;
    result.report = bound_report(config, opts);
    if (!result.report.certified || !result.report.rate.contractive) return result;

    // a/2 per component, shrunk for M > 4 so the stacked error stays within a.
    const double offset =
        0.5 * result.report.radius_a * std::min(1.0, 2.0 / std::sqrt(static_cast<double>(config.components())));
    const Means init = perturbed_init(config.means(), offset, spec.seed);
    result.initial_error = stacked_distance(init, config.means());
    result.target_tol = spec.target_tol_fraction * result.initial_error;
    result.run_gamma = gamma_gs(result.report.stats, config.components(), result.initial_error);
    result.run_rate = zeta_rate(config.pi_min(), config.pi_max(), result.run_gamma);
    if (result.run_rate.contractive) {
        result.predicted_iterations = predicted_iterations(result.run_rate.zeta, result.initial_error, result.target_tol);
    }

    EmOptions options;
    options.max_iters = spec.max_iters;
    options.tol = spec.tol;
    const auto traj = run_population_em(config, init, options, spec.mc_samples, spec.seed);
    for (const auto& rec : traj.records) {
        if (rec.err_total <= result.target_tol) {
            result.measured_iterations = rec.t;
            break;
        }
    }
    const std::size_t span = result.measured_iterations.value_or(traj.iterations());
    if (span > 0) {
        const double ratio = traj.records[span].err_total / result.initial_error;
        result.measured_factor = std::pow(ratio, 1.0 / static_cast<double>(span));
    }
    return result;
}

// ------------------------------------------------------------------ verify-gs

nlohmann::json GsStudyResult::summary() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : rows) {
        auto j = row.report.to_json();
        j["r_min"] = row.r_min;
        arr.push_back(std::move(j));
    }
    return {{"rows", arr}};
}

GsStudyResult verify_gs_study(const ExperimentSpec& spec) {
    const auto snrs = snr_points(spec);
    std::vector<MixtureConfig> configs;
    for (const auto& snr : snrs) configs.push_back(spec.model_at(snr));
    GsStudyResult result;
    for (std::size_t s = 0; s < configs.size(); ++s) {
        const auto& config = configs[s];
        const auto stats = separation_stats(config);
        const double a = spec.region_radius
                             ? *spec.region_radius
                             : contraction_radius(stats, config.components(), config.pi_min(), RadiusMode::solved);
        const auto points = default_gs_trial_points(config, a, derive_seed(spec.seed, Stream::trial_points, s));
        result.rows.push_back(
            {stats.r_min, verify_gs_empirical(config, points, a, spec.mc_samples, derive_seed(spec.seed, Stream::population, s))});
    }
    return result;
}

// -------------------------------------------------------------------- scaling

ScalingTable scaling_experiment(const ExperimentSpec& spec) {
    ScalingOptions options;
    options.ns = spec.ns.empty() ? std::vector<std::size_t>{2000, 8000, 32000} : spec.ns;
    options.ds = spec.ds.empty() ? std::vector<std::size_t>{spec.model ? spec.model->dim() : spec.generator.dim} : spec.ds;
    options.seeds = spec.seeds;
    options.replications = spec.replications;
    options.region_radius = spec.region_radius;
    options.ascent = {spec.multistarts, spec.ascent_iters};
    options.population_samples = spec.population_samples;
    ConfigFamily family;
    if (spec.model) {
        const MixtureConfig model = *spec.model;
        family = [model](std::size_t d) {
            if (d != model.dim()) throw std::invalid_argument("explicit model fixes d; use a generator to vary it");
            return model;
        };
    } else {
        const GeneratorSpec base = spec.generator;
        family = [base](std::size_t d) {
            GeneratorSpec g = base;
            g.dim = d;
            return generate_config(g);
        };
    }
    const ScalingQuantity quantity =
        spec.kind == ExperimentKind::rademacher_scaling ? ScalingQuantity::rademacher : ScalingQuantity::deviation;
    return scaling_study(quantity, family, options, spec.seed);
}

// ----------------------------------------------------------------- stochastic

nlohmann::json StochasticResult::summary() const {
    return {{"slope", slope}, {"step_constant", step_constant}, {"projection_radius", projection_radius}};
}

StochasticResult stochastic_study(const ExperimentSpec& spec) {
    const auto snrs = snr_points(spec);
    const MixtureConfig config = spec.model_at(snrs.front());
    StochasticResult result;
    if (spec.projection_radius) {
        result.projection_radius = *spec.projection_radius;
    } else {
        if (config.components() < 2) {
            throw std::invalid_argument("a single-component model needs an explicit projection_radius");
        }
        result.projection_radius =
            0.5 * contraction_radius(separation_stats(config), config.components(), config.pi_min(), RadiusMode::solved);
    }
    result.step_constant = spec.step_constant.value_or(default_step_constant(config.weights(), spec.gamma_estimate));
    const double offset = spec.init_radius.value_or(0.5 * result.projection_radius);

    for (double v = 0.0;; v += 0.1) {
        const auto t = static_cast<std::size_t>(std::llround(std::pow(10.0, v)));
        if (t > spec.max_iters) break;
        if (result.t_grid.empty() || result.t_grid.back() != t) result.t_grid.push_back(t);
    }
    if (result.t_grid.empty()) throw std::invalid_argument("stochastic run needs max_iters >= 1");

    std::vector<std::vector<double>> sq(spec.trials);
    parallel_for(spec.trials, [&](std::size_t trial) {
        const std::uint64_t ts = trial_seed(spec.seed, trial);
        StochasticOptions opts;
        opts.projection_radius = result.projection_radius;
        opts.batch = spec.batch;
        opts.max_iters = spec.max_iters;
        opts.step_constant = result.step_constant;
        opts.gamma_estimate = spec.gamma_estimate;
        opts.seed = ts;
        const auto traj = stochastic_em_run(config, perturbed_init(config.means(), offset, ts), opts);
        for (const auto& rec : traj.records) sq[trial].push_back(rec.err_total * rec.err_total);
    });
    for (std::size_t t : result.t_grid) {
        double total = 0.0;
        for (const auto& s : sq) total += s[std::min(t, s.size() - 1)];
        result.mse.push_back(total / static_cast<double>(spec.trials));
    }
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < result.t_grid.size(); ++k) {
        if (result.t_grid[k] >= spec.fit_t_min && result.t_grid[k] <= spec.fit_t_max) {
            xs.push_back(static_cast<double>(result.t_grid[k]));
            ys.push_back(result.mse[k]);
        }
    }
    if (xs.size() < 3) throw std::invalid_argument("fit window [fit_t_min, fit_t_max] holds fewer than 3 grid points");
    result.slope = loglog_slope(xs, ys);
    return result;
}

// ---------------------------------------------------------------- artifacts

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::ostringstream o;
    for (unsigned int i = 0; i < length; ++i) o << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return o.str();
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

namespace {

class ArtifactWriter {
public:
    ArtifactWriter(std::string out_dir, std::string name) : dir_(std::move(out_dir)), name_(std::move(name)) {
        std::filesystem::create_directories(dir_);
    }

    void write(const std::string& suffix, const std::string& text) {
        const std::string file = name_ + suffix;
        write_text_file((std::filesystem::path(dir_) / file).string(), text);
        files_.push_back(file);
    }

    std::vector<std::string> files() const { return files_; }

private:
    std::string dir_;
    std::string name_;
    std::vector<std::string> files_;
};

std::string convergence_csv(const ConvergenceResult& r) {
    std::ostringstream o;
    o << std::setprecision(17) << "snr,t,mean_log_err,sd_log_err\n";
    for (const auto& c : r.curves) {
        for (std::size_t t = 0; t < c.mean_log_err.size(); ++t) {
            o << c.snr << ',' << t << ',' << c.mean_log_err[t] << ',' << c.sd_log_err[t] << '\n';
        }
    }
    return o.str();
}

LineChart convergence_chart(const ConvergenceResult& r, bool against_fixed_point) {
    LineChart chart;
    chart.title = "Gradient EM error vs iteration";
    chart.x_label = "iteration t";
    chart.y_label = against_fixed_point ? "mean log ||mu^t - mu_hat||" : "mean log ||mu^t - mu*||";
    for (const auto& c : r.curves) {
        Series s;
        s.name = "SNR " + num(c.snr);
        for (std::size_t t = 0; t < c.mean_log_err.size(); ++t) s.x.push_back(static_cast<double>(t));
        s.y = c.mean_log_err;
        s.spread = c.sd_log_err;
        chart.series.push_back(std::move(s));
    }
    return chart;
}

std::string region_csv(const RegionProbeResult& r) {
    std::ostringstream o;
    o << std::setprecision(17) << "eps_fraction,trial,final_error,status\n";
    for (const auto& run : r.runs) {
        o << run.eps_fraction << ',' << run.trial << ',' << run.final_error << ',' << run.status << '\n';
    }
    return o.str();
}

LineChart region_chart(const RegionProbeResult& r) {
    LineChart chart;
    std::map<double, std::vector<const ProbeRun*>> by_eps;
    for (const auto& run : r.runs) by_eps[run.eps_fraction].push_back(&run);
    if (by_eps.size() == 1) {
        chart.title = "Error paths from eps/R_min = " + num(by_eps.begin()->first);
        chart.x_label = "iteration t";
        chart.y_label = "||mu^t - mu*|| / R_min";
        chart.log_y = true;
        for (const auto* run : by_eps.begin()->second) {
            Series s;
            s.name = "trial " + std::to_string(run->trial);
            for (std::size_t t = 0; t < run->path.size(); ++t) s.x.push_back(static_cast<double>(t));
            s.y = run->path;
            chart.series.push_back(std::move(s));
        }
        return chart;
    }
    chart.title = "Final error vs initial offset from the midpoint";
    chart.x_label = "eps / R_min";
    chart.y_label = "final ||mu - mu*|| / R_min";
    Series med{"median", {}, {}, {}};
    Series worst{"max", {}, {}, {}};
    for (const auto& [eps, runs] : by_eps) {
        std::vector<double> finals;
        for (const auto* run : runs) finals.push_back(run->final_error);
        med.x.push_back(eps);
        med.y.push_back(median_of(finals));
        worst.x.push_back(eps);
        worst.y.push_back(*std::max_element(finals.begin(), finals.end()));
    }
    chart.series = {med, worst};
    return chart;
}

std::string gs_csv(const GsStudyResult& r) {
    std::ostringstream o;
    o << std::setprecision(17) << "r_min,radius_a,gamma_hat,std_err,gamma_bound,pass\n";
    for (const auto& row : r.rows) {
        o << row.r_min << ',' << row.report.radius_a << ',' << row.report.gamma_hat << ','
          << row.report.gamma_hat_std_err << ',' << row.report.gamma_bound << ',' << (row.report.pass ? 1 : 0) << '\n';
    }
    return o.str();
}

LineChart gs_chart(const GsStudyResult& r) {
    LineChart chart;
    chart.title = "Gradient-stability constant: estimate vs bound";
    chart.x_label = "R_min";
    chart.y_label = "gamma";
    chart.log_y = true;
    Series est{"gamma_hat", {}, {}, {}};
    Series bound{"gamma bound", {}, {}, {}};
    for (const auto& row : r.rows) {
        est.x.push_back(row.r_min);
        est.y.push_back(row.report.gamma_hat);
        est.spread.push_back(row.report.gamma_hat_std_err);
        bound.x.push_back(row.r_min);
        bound.y.push_back(row.report.gamma_bound);
    }
    chart.series = {est, bound};
    return chart;
}

LineChart scaling_chart(const ScalingTable& table, const std::string& quantity) {
    LineChart chart;
    chart.title = quantity + " vs sample size";
    chart.x_label = "n";
    chart.y_label = "median estimate";
    chart.log_x = true;
    chart.log_y = true;
    std::map<std::size_t, Series> by_d;
    for (const auto& row : table.rows) {
        auto& s = by_d[row.d];
        s.name = "d=" + std::to_string(row.d) + " slope " + num(std::round(row.slope_fit * 1000.0) / 1000.0);
        s.x.push_back(static_cast<double>(row.n));
        s.y.push_back(row.median);
    }
    for (auto& [d, s] : by_d) chart.series.push_back(std::move(s));
    return chart;
}

std::string stochastic_csv(const StochasticResult& r) {
    std::ostringstream o;
    o << std::setprecision(17) << "t,mse\n";
    for (std::size_t k = 0; k < r.t_grid.size(); ++k) o << r.t_grid[k] << ',' << r.mse[k] << '\n';
    return o.str();
}

LineChart stochastic_chart(const StochasticResult& r) {
    LineChart chart;
    chart.title = "Stochastic gradient EM, slope " + num(std::round(r.slope * 1000.0) / 1000.0);
    chart.x_label = "iteration t";
    chart.y_label = "mean ||mu^t - mu*||^2";
    chart.log_x = true;
    chart.log_y = true;
    Series s{"mse", {}, r.mse, {}};
    for (std::size_t t : r.t_grid) s.x.push_back(static_cast<double>(t));
    chart.series.push_back(std::move(s));
    return chart;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentSpec& spec, const std::string& out_dir) {
    ExperimentOutcome out;
    out.name = spec.name;
    out.kind = spec.kind;
    ArtifactWriter writer(out_dir, spec.name);
    nlohmann::json sidecar{{"spec", spec.to_json()}};

    switch (spec.kind) {
        case ExperimentKind::convergence: {
            const auto r = convergence_study(spec);
            out.summary = r.summary();
            writer.write(".csv", convergence_csv(r));
            writer.write(".svg", convergence_chart(r, spec.against_best_fixed_point).render());
            break;
        }
        case ExperimentKind::region_probe: {
            const auto r = region_probe(spec);
            out.summary = r.summary();
            writer.write(".csv", region_csv(r));
            writer.write(".svg", region_chart(r).render());
            break;
        }
        case ExperimentKind::bounds: {
            const auto r = bounds_study(spec);
            out.summary = r.summary();
            out.report = r.table();
            writer.write(".txt", out.report);
            break;
        }
        case ExperimentKind::verify_gs: {
            const auto r = verify_gs_study(spec);
            out.summary = r.summary();
            writer.write(".csv", gs_csv(r));
            writer.write(".svg", gs_chart(r).render());
            break;
        }
        case ExperimentKind::deviation_scaling:
        case ExperimentKind::rademacher_scaling: {
            const auto table = scaling_experiment(spec);
            nlohmann::json slopes = nlohmann::json::object();
            for (const auto& row : table.rows) slopes[std::to_string(row.d)] = row.slope_fit;
            out.summary = {{"region_radius", table.region_radius}, {"slopes_by_d", slopes}};
            writer.write(".csv", table.csv());
            writer.write(".svg", scaling_chart(table, to_string(spec.kind)).render());
            break;
        }
        case ExperimentKind::stochastic: {
            const auto r = stochastic_study(spec);
            out.summary = r.summary();
            writer.write(".csv", stochastic_csv(r));
            writer.write(".svg", stochastic_chart(r).render());
            break;
        }
    }
    sidecar["summary"] = out.summary;
    writer.write(".json", sidecar.dump(2) + "\n");
    out.artifacts = writer.files();
    out.ok = true;
    return out;
}

nlohmann::json run_suite(const std::vector<ExperimentSpec>& specs, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    nlohmann::json entries = nlohmann::json::array();
    std::map<std::string, std::size_t> seen;
    for (auto spec : specs) {
        if (const auto n = seen[spec.name]++; n > 0) spec.name += "-" + std::to_string(n + 1);
        nlohmann::json entry{{"name", spec.name}, {"kind", to_string(spec.kind)}};
        nlohmann::json artifacts = nlohmann::json::array();
        try {
            const auto outcome = run_experiment(spec, out_dir);
            for (const auto& file : outcome.artifacts) {
                artifacts.push_back(
                    {{"path", file}, {"sha256", sha256_file((std::filesystem::path(out_dir) / file).string())}});
            }
            entry["status"] = "ok";
            entry["error"] = nullptr;
        } catch (const std::exception& e) {
            entry["status"] = "failed";
            entry["error"] = e.what();
        }
        entry["artifacts"] = artifacts;
        entries.push_back(std::move(entry));
    }
    nlohmann::json manifest{{"experiments", entries}};
    write_text_file((std::filesystem::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    return manifest;
}

}  // namespace gemmix
