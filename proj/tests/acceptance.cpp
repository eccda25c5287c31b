// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: acceptance [criterion ...]   (default: all of 1..10)
// Exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gemmix/bounds.hpp"
#include "gemmix/em.hpp"
#include "gemmix/experiment_spec.hpp"
#include "gemmix/experiments.hpp"
#include "gemmix/gaussian_utils.hpp"
#include "gemmix/mixture.hpp"
#include "gemmix/rng.hpp"

using namespace gemmix;

namespace {

// Pinned tolerances and budgets.
constexpr double kFormulaRelTol = 1e-12;
constexpr double kOracleSigmas = 4.0;
constexpr double kMomentSigmas = 3.0;
constexpr double kSlopeLow = -0.65;
constexpr double kSlopeHigh = -0.35;
constexpr double kStochasticSlopeLow = -1.3;
constexpr double kStochasticSlopeHigh = -0.7;
constexpr double kHalvingLow = 2.0 * 0.75;
constexpr double kHalvingHigh = 2.0 * 1.25;
constexpr double kMinDecay = 10.0;
constexpr double kConvergedFraction = 0.05;
constexpr double kStalledFraction = 0.2;
constexpr std::size_t kProbeQuorum = 9;

constexpr double kLimitOracle = 180.0;
constexpr double kLimitFormulas = 1.0;
constexpr double kLimitConvergence = 300.0;
constexpr double kLimitProbe = 120.0;
constexpr double kLimitDeviation = 600.0;
constexpr double kLimitUtilities = 60.0;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

bool rel_close(double got, double want) {
    return std::abs(got - want) <= kFormulaRelTol * std::max(std::abs(want), 1e-300);
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double stacked_gap(const Means& a, const Means& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.flat().size(); ++k) {
        const double diff = a.flat()[k] - b.flat()[k];
        s += diff * diff;
    }
    return std::sqrt(s);
}

std::vector<double> random_unit(std::mt19937_64& rng, std::size_t d) {
    std::normal_distribution<double> normal;
    std::vector<double> v(d);
    do {
        for (double& x : v) x = normal(rng);
    } while (norm2(v) == 0.0);
    const double len = norm2(v);
    for (double& x : v) x /= len;
    return v;
}

// Random weights in [0.5, 1.5] normalized, and Gaussian means rescaled so the
// closest pair sits at target_r_min; the result is centered.
MixtureConfig random_centered_config(std::mt19937_64& rng, std::size_t m, std::size_t d, double target_r_min) {
    std::uniform_real_distribution<double> wdist(0.5, 1.5);
    std::normal_distribution<double> normal;
    std::vector<double> w(m);
    double total = 0.0;
    for (double& x : w) total += (x = wdist(rng));
    for (double& x : w) x /= total;
    // Renormalize the last weight so the sum is exactly one up to rounding.
    double head = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) head += w[i];
    w[m - 1] = 1.0 - head;

    Means mu(m, d);
    double closest = 0.0;
    do {
        for (double& x : mu.flat()) x = normal(rng);
        closest = INFINITY;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < d; ++k) s += (mu(i, k) - mu(j, k)) * (mu(i, k) - mu(j, k));
                closest = std::min(closest, std::sqrt(s));
            }
        }
    } while (!(closest > 1e-3));
    for (double& x : mu.flat()) x *= target_r_min / closest;
    return center_means(MixtureConfig(w, mu));
}

// ------------------------------------------------------------------ criteria

void oracle_gradient(Outcome& out) {
    std::mt19937_64 rng(20240101);
    std::uniform_int_distribution<std::size_t> mdist(2, 5), ddist(1, 10);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::size_t checked = 0, failures = 0, slack_bound = 0;
    for (std::size_t c = 0; c < 100; ++c) {
        const std::size_t m = mdist(rng);
        const std::size_t d = ddist(rng);
        const double d0 = static_cast<double>(std::min(m, d));
        const MixtureConfig config = random_centered_config(rng, m, d, 10.0 * std::sqrt(d0) * (1.0 + 0.5 * unif(rng)));
        const auto stats = separation_stats(config);

        Means mu = config.means();
        double a = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double r = unif(rng);
            const auto u = random_unit(rng, d);
            for (std::size_t k = 0; k < d; ++k) mu(i, k) += r * u[k];
            a = std::max(a, r);
        }
        const double dist = stacked_gap(mu, config.means());
        const double slack = gamma_gs(stats, m, a) * dist;

        // Independent oracle: pi_i (mu_i* - mu_i).
        const auto est = population_gradient(config, mu, 1'000'000, 1000 + c);
        for (std::size_t i = 0; i < m; ++i) {
            std::vector<double> diff(d);
            for (std::size_t k = 0; k < d; ++k)
                diff[k] = est.grad(i, k) - config.weights()[i] * (config.means()(i, k) - mu(i, k));
            const double dev = norm2(diff);
            const double allowed = std::max(kOracleSigmas * est.std_err[i], slack);
            if (slack > kOracleSigmas * est.std_err[i]) ++slack_bound;
            ++checked;
            if (!(dev <= allowed)) ++failures;
        }
    }
    out.detail << "components=" << checked << " violations=" << failures << " gs_slack_dominant=" << slack_bound;
    out.require(failures == 0, "deviation above max(4 se, gamma |mu - mu*|)");
}

void formulas(Outcome& out) {
    // gamma_gs: M=3, kappa=1, d0=2, R_max=15, R_min=10, a=0.
    const SeparationStats s{10.0, 15.0, 1.0, 2, 0.0};
    const double gamma = gamma_gs(s, 3, 0.0);
    out.require(rel_close(gamma, 9.0 * 6.0 * 32.0 * 32.0 * std::exp(-25.0 * std::sqrt(2.0) / 8.0)), "gamma_gs");
    // Limit a -> R_min/2: the exponential factor tends to one.
    out.require(std::abs(gamma_gs(s, 3, 5.0 - 1e-9) / (9.0 * 6.0 * 32.0 * 32.0) - 1.0) < 1e-12, "gamma_gs limit");

    // zeta_rate.
    const auto balanced = zeta_rate(1.0 / 3, 1.0 / 3, 0.0);
    out.require(balanced.zeta == 0.0 && balanced.contractive, "zeta balanced");
    const auto skewed = zeta_rate(0.1, 0.6, 0.0);
    out.require(rel_close(skewed.zeta, 0.5 / 0.7) && skewed.contractive, "zeta imbalanced");
    const auto edge = zeta_rate(0.1, 0.6, 0.1);
    out.require(rel_close(edge.zeta, 1.0) && !edge.contractive, "zeta boundary");

    // Explicit contraction radius: d0=2, R_min=80.
    const SeparationStats far{80.0, 120.0, 1.0, 2, 0.0};
    const double a = contraction_radius(far, 3, 1.0 / 3, RadiusMode::explicit_gs);
    out.require(rel_close(a, 40.0 - std::sqrt(2.0) * 8.0 * std::sqrt(3.0)), "explicit radius");

    // eps_unif improved collapses to (1 + 3 R_max)^3 sqrt(log n / n) for M=1, kappa=1, c=1, d=1.
    for (std::size_t n : {100u, 5000u, 123457u}) {
        const double r_max = 2.5;
        const double want = std::pow(1.0 + 3.0 * r_max, 3) * std::sqrt(std::log(double(n)) / double(n));
        out.require(rel_close(eps_unif(r_max, 1.0, 1, 1, n, 1.0, EpsMode::improved), want), "eps_unif collapse");
    }
    const double e1 = eps_unif(2.0, 1.0, 1, 3, 8000, 1.0, EpsMode::improved);
    const double e4 = eps_unif(2.0, 1.0, 4, 3, 8000, 1.0, EpsMode::improved);
    out.require(rel_close(e4 / e1, 8.0), "eps_unif M^(3/2)");

    // restart_count: large a sqrt(d) with M=2, delta=0.05 gives 7; delta=1 gives 0.
    const auto limit = static_cast<std::size_t>(
        std::ceil(std::log(20.0) * std::exp(2.0) / std::sqrt(4.0 * std::numbers::pi)));
    out.require(limit == 7 && restart_count(2, 1e4, 1, 0.05) == limit, "restart_count limit");
    out.require(restart_count(2, 1e4, 1, 1.0) == 0, "restart_count delta=1");

    out.detail << "gamma=" << gamma << " zeta=" << skewed.zeta << " a=" << a;
}

ExperimentSpec convergence_spec(std::vector<double> snr_grid, std::vector<double> weights) {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::convergence;
    spec.generator.components = 3;
    spec.generator.dim = 2;
    spec.generator.ratio = 1.5;
    spec.generator.weights = std::move(weights);
    spec.snr_grid = std::move(snr_grid);
    spec.n = 12'000;
    spec.trials = 10;
    spec.max_iters = 100;
    spec.seed = 7;
    return spec;
}

double balanced_factor_at_5 = NAN;

void convergence_vs_snr(Outcome& out) {
    const auto r = convergence_study(convergence_spec({1, 2, 3, 4, 5}, {}));
    out.detail << "factors=";
    for (std::size_t k = 0; k < r.curves.size(); ++k) {
        out.detail << (k ? "," : "") << r.curves[k].fitted_factor;
        if (k > 0)
            out.require(r.curves[k].fitted_factor < r.curves[k - 1].fitted_factor, "slope not strictly decreasing");
    }
    const auto& last = r.curves.back();
    out.detail << " decay@5=" << last.decay_ratio;
    out.require(last.decay_ratio >= kMinDecay, "decay over 25 iterations below 10x");
    balanced_factor_at_5 = last.fitted_factor;
}

void imbalance(Outcome& out) {
    if (std::isnan(balanced_factor_at_5))
        balanced_factor_at_5 = convergence_study(convergence_spec({5}, {})).curves.back().fitted_factor;
    const auto r = convergence_study(convergence_spec({5}, {0.6, 0.3, 0.1}));
    const double skewed = r.curves.back().fitted_factor;
    out.detail << "balanced=" << balanced_factor_at_5 << " imbalanced=" << skewed;
    out.require(skewed > balanced_factor_at_5, "imbalanced factor not larger");
}

void region_probe_check(Outcome& out) {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::region_probe;
    spec.generator.r_min = 5.0;
    spec.generator.ratio = 1.5;
    spec.eps_grid = {0.0, 0.05, 0.1};
    spec.trials = 10;
    spec.n = 12'000;
    spec.max_iters = 500;
    spec.seed = 3;
    const auto r = region_probe(spec);
    for (double eps : spec.eps_grid) {
        std::size_t good = 0;
        double worst = eps == 0.0 ? INFINITY : 0.0;
        for (const auto& run : r.runs) {
            if (run.eps_fraction != eps) continue;
            if (eps == 0.0) {
                good += run.final_error > kStalledFraction;
                worst = std::min(worst, run.final_error);
            } else {
                good += run.final_error < kConvergedFraction;
                worst = std::max(worst, run.final_error);
            }
        }
        out.detail << " eps=" << eps << ":" << good << "/10(worst " << worst << ")";
        out.require(good >= kProbeQuorum, "quorum missed at eps=" + std::to_string(eps));
    }
}

void gs_certificate(Outcome& out) {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::verify_gs;
    spec.generator.components = 3;
    spec.generator.dim = 2;
    spec.generator.ratio = 1.5;
    const double root_d0 = std::sqrt(2.0);
    spec.snr_grid = {20 * root_d0, 25 * root_d0, 30 * root_d0, 35 * root_d0, 40 * root_d0};
    spec.mc_samples = 1'000'000;
    spec.seed = 13;
    const auto r = verify_gs_study(spec);
    std::vector<double> hats;
    for (const auto& row : r.rows) {
        out.detail << " " << row.r_min / root_d0 << ":" << row.report.gamma_hat << "<=" << row.report.gamma_bound;
        out.require(row.report.pass, "verify_gs FAIL at R_min=" + std::to_string(row.r_min));
        hats.push_back(row.report.gamma_hat);
    }
    // R_min in {20, 30, 40} sqrt(d0) sit at indices 0, 2, 4. A Monte-Carlo
    // estimate that underflows to exactly zero cannot drop further, so a step
    // must be strict only while the earlier value is positive.
    for (std::size_t k : {2u, 4u}) {
        const double prev = hats[k - 2], cur = hats[k];
        out.require(prev > 0.0 ? cur < prev : cur == 0.0, "gamma_hat not decreasing");
    }
}

void deviation_scaling(Outcome& out) {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::deviation_scaling;
    spec.generator.r_min = 4.0;
    spec.generator.ratio = 1.5;
    spec.ns = {2000, 8000, 32000};
    spec.ds = {2};
    spec.seeds = 20;
    spec.multistarts = 2;
    spec.ascent_iters = 10;
    spec.seed = 5;
    const auto table = scaling_experiment(spec);
    const double slope = table.slope(2);
    out.detail << "deviation_slope=" << slope;
    out.require(slope >= kSlopeLow && slope <= kSlopeHigh, "deviation slope outside window");

    // Terminal sample-EM error from a start near the truth.
    ExperimentSpec em_spec;
    em_spec.generator.r_min = 5.0;
    em_spec.generator.ratio = 1.5;
    const MixtureConfig config = em_spec.model_at();
    std::vector<double> medians;
    for (std::size_t n : spec.ns) {
        std::vector<double> errs;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            std::mt19937_64 rng(derive_seed(99, Stream::initialization, seed));
            Means init = config.means();
            for (std::size_t i = 0; i < config.components(); ++i) {
                const auto u = random_unit(rng, config.dim());
                for (std::size_t k = 0; k < config.dim(); ++k) init(i, k) += 0.5 * u[k];
            }
            const Points pts = sample_points(config, n, derive_seed(99, Stream::sampling, seed));
            const auto traj = run_sample_em(config, pts, init, {std::nullopt, 500, 1e-10});
            errs.push_back(traj.records.back().err_total);
        }
        std::nth_element(errs.begin(), errs.begin() + 10, errs.end());
        const double upper = errs[10];
        const double lower = *std::max_element(errs.begin(), errs.begin() + 10);
        medians.push_back(0.5 * (upper + lower));
    }
    out.detail << " em_ratios=";
    for (std::size_t k = 1; k < medians.size(); ++k) {
        const double ratio = medians[k - 1] / medians[k];
        out.detail << (k > 1 ? "," : "") << ratio;
        out.require(ratio >= kHalvingLow && ratio <= kHalvingHigh, "terminal error did not halve");
    }
}

void rademacher_scaling(Outcome& out) {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::rademacher_scaling;
    spec.generator.r_min = 4.0;
    spec.generator.ratio = 1.5;
    spec.ns = {2000, 8000, 32000};
    spec.ds = {2, 4, 8};
    spec.seeds = 20;
    spec.replications = 5;
    spec.multistarts = 2;
    spec.ascent_iters = 10;
    spec.seed = 5;
    const auto table = scaling_experiment(spec);
    out.detail << "slopes=";
    for (std::size_t k = 0; k < spec.ds.size(); ++k) {
        const double slope = table.slope(spec.ds[k]);
        out.detail << (k ? "," : "") << slope;
        out.require(slope >= kSlopeLow && slope <= kSlopeHigh, "slope outside window");
    }
    for (std::size_t n : spec.ns) {
        const auto med = table.medians_at(n);
        for (std::size_t k = 1; k < med.size(); ++k)
            out.require(med[k] >= med[k - 1], "median decreases in d at n=" + std::to_string(n));
    }
}

void stochastic(Outcome& out) {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::stochastic;
    spec.model = MixtureConfig({1.0}, Matrix::from_rows({{0.0, 0.0}}));
    spec.projection_radius = 2.0;
    spec.step_constant = 1.5;
    spec.trials = 20;
    spec.max_iters = 10'000;
    spec.fit_t_min = 100;
    spec.fit_t_max = 10'000;
    spec.seed = 11;
    const auto r = stochastic_study(spec);
    out.detail << "slope=" << r.slope;
    out.require(r.slope >= kStochasticSlopeLow && r.slope <= kStochasticSlopeHigh, "slope outside window");
}

void utilities(Outcome& out) {
    std::mt19937_64 rng(31337);
    std::normal_distribution<double> normal;

    std::size_t moment_bad = 0;
    for (int p : {1, 2, 3}) {
        for (std::size_t d : {1u, 2u, 5u, 10u}) {
            constexpr std::size_t draws = 200'000;
            double sum = 0.0, sum_sq = 0.0;
            for (std::size_t j = 0; j < draws; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    const double z = normal(rng);
                    s += z * z;
                }
                const double v = std::pow(std::sqrt(s), p);
                sum += v;
                sum_sq += v * v;
            }
            const double mean = sum / draws;
            const double se = std::sqrt((sum_sq / draws - mean * mean) / (draws - 1));
            if (!(std::abs(gaussian_norm_moment(p, d) - mean) <= kMomentSigmas * se)) ++moment_bad;
        }
    }
    out.detail << "moment_misses=" << moment_bad;
    out.require(moment_bad == 0, "moment outside 3 se");

    std::size_t tail_bad = 0;
    for (std::size_t d : {1u, 2u, 5u, 10u}) {
        constexpr std::size_t draws = 1'000'000;
        std::vector<double> norms(draws);
        for (double& r : norms) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double z = normal(rng);
                s += z * z;
            }
            r = std::sqrt(s);
        }
        for (double f : {1.0, 1.25, 1.5, 2.0}) {
            const double r = 2.0 * std::sqrt(double(d)) * f;
            const double freq =
                double(std::count_if(norms.begin(), norms.end(), [r](double x) { return x >= r; })) / draws;
            if (freq > gaussian_norm_tail(r, d)) ++tail_bad;
        }
    }
    out.detail << " tail_exceedances=" << tail_bad;
    out.require(tail_bad == 0, "empirical tail above bound");

    std::uniform_int_distribution<std::size_t> mdist(2, 6), ddist(1, 8);
    std::uniform_real_distribution<double> scale(0.1, 20.0);
    std::size_t ineq_bad = 0;
    for (int c = 0; c < 1000; ++c) {
        const std::size_t m = mdist(rng), d = ddist(rng);
        const auto config = random_centered_config(rng, m, d, scale(rng));
        double max_norm = 0.0, r_max = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const auto row = config.means().row(i);
            max_norm = std::max(max_norm, norm2({row.begin(), row.end()}));
            for (std::size_t j = i + 1; j < m; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < d; ++k) s += std::pow(row[k] - config.means()(j, k), 2);
                r_max = std::max(r_max, std::sqrt(s));
            }
        }
        const auto stats = separation_stats(config);
        const double slack = 1e-12 * r_max;
        const bool ok = max_norm <= r_max + slack && r_max <= 2.0 * max_norm + slack &&
                        std::abs(stats.r_max - r_max) <= slack && std::abs(stats.max_center_norm - max_norm) <= slack;
        ineq_bad += !ok;
    }
    out.detail << " rmax_violations=" << ineq_bad;
    out.require(ineq_bad == 0, "R_max double inequality");
}

struct Criterion {
    int id;
    const char* title;
    std::function<void(Outcome&)> run;
    double time_limit;  // seconds; 0 means none
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "oracle gradient", oracle_gradient, kLimitOracle},
        {2, "closed-form formulas", formulas, kLimitFormulas},
        {3, "convergence vs SNR", convergence_vs_snr, kLimitConvergence},
        {4, "imbalance slows convergence", imbalance, 0.0},
        {5, "region probe", region_probe_check, kLimitProbe},
        {6, "GS empirical certificate", gs_certificate, 0.0},
        {7, "sample-deviation scaling", deviation_scaling, kLimitDeviation},
        {8, "Rademacher scaling", rademacher_scaling, 0.0},
        {9, "stochastic EM rate", stochastic, 0.0},
        {10, "Gaussian utilities", utilities, kLimitUtilities},
    };
    std::set<int> selected;
    for (int k = 1; k < argc; ++k) selected.insert(std::atoi(argv[k]));

    int failed = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        Outcome out;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(out);
        } catch (const std::exception& e) {
            out.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.time_limit > 0.0) out.require(secs < c.time_limit, "runtime limit");
        failed += !out.pass;
        std::printf("CRITERION %2d %-28s %s (%.1fs) %s\n", c.id, c.title, out.pass ? "PASS" : "FAIL", secs,
                    out.detail.str().c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
