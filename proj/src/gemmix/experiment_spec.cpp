#include "gemmix/experiment_spec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <stdexcept>

namespace gemmix {

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::convergence: return "convergence";
        case ExperimentKind::region_probe: return "region-probe";
        case ExperimentKind::verify_gs: return "verify-gs";
        case ExperimentKind::deviation_scaling: return "deviation-scaling";
        case ExperimentKind::rademacher_scaling: return "rademacher-scaling";
        case ExperimentKind::stochastic: return "stochastic";
        case ExperimentKind::bounds: return "bounds";
    }
    return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
    for (auto k : {ExperimentKind::convergence, ExperimentKind::region_probe, ExperimentKind::verify_gs,
                   ExperimentKind::deviation_scaling, ExperimentKind::rademacher_scaling, ExperimentKind::stochastic,
                   ExperimentKind::bounds}) {
        if (to_string(k) == s) return k;
    }
    throw std::invalid_argument("unknown experiment kind '" + s + "'");
}

namespace {

std::vector<double> arc_angles_layout(std::size_t m, double theta, std::vector<double>& xs) {
    std::vector<double> ys(m);
    xs.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        xs[j] = std::cos(theta * static_cast<double>(j));
        ys[j] = std::sin(theta * static_cast<double>(j));
    }
    return ys;
}

std::pair<double, double> chord_extremes(std::size_t m, double theta) {
    std::vector<double> xs;
    const auto ys = arc_angles_layout(m, theta, xs);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double r = std::hypot(xs[i] - xs[j], ys[i] - ys[j]);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
    }
    return {lo, hi};
}

}  // namespace

MixtureConfig generate_config(const GeneratorSpec& spec) {
    const std::size_t m = spec.components;
    const std::size_t d = spec.dim;
    if (m < 2) throw std::invalid_argument("generator infeasible: need at least two components");
    if (d < 1) throw std::invalid_argument("generator infeasible: dimension must be positive");
    if (!(spec.r_min > 0.0)) throw std::invalid_argument("generator infeasible: r_min must be positive");
    if (spec.layout != "arc") throw std::invalid_argument("generator infeasible: unknown layout '" + spec.layout + "'");
    const double rho = spec.ratio;

    std::vector<std::vector<double>> rows(m, std::vector<double>(d, 0.0));
    if (m == 2) {
        if (std::abs(rho - 1.0) > 1e-6) throw std::invalid_argument("generator infeasible: two centers force ratio 1");
        rows[1][0] = spec.r_min;
    } else if (d == 1) {
        if (std::abs(rho - static_cast<double>(m - 1)) > 1e-6) {
            throw std::invalid_argument("generator infeasible: a line layout has ratio M-1");
        }
        for (std::size_t j = 0; j < m; ++j) rows[j][0] = spec.r_min * static_cast<double>(j);
    } else {
        // ratio(theta) falls from M-1 (theta -> 0) to the regular-polygon value.
        auto ratio_at = [m](double theta) {
            const auto [lo, hi] = chord_extremes(m, theta);
            return hi / lo;
        };
        double lo = 1e-9;
        double hi = 2.0 * std::numbers::pi / static_cast<double>(m);
        if (rho > ratio_at(lo) + 1e-9 || rho < ratio_at(hi) - 1e-9) {
            throw std::invalid_argument("generator infeasible: ratio outside the arc layout's range");
        }
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (ratio_at(mid) > rho) lo = mid; else hi = mid;
        }
        const double theta = 0.5 * (lo + hi);
        if (std::abs(ratio_at(theta) - rho) > 1e-9 * rho) {
            throw std::invalid_argument("generator infeasible: could not match the requested ratio");
        }
        const double scale = spec.r_min / chord_extremes(m, theta).first;
        std::vector<double> xs;
        const auto ys = arc_angles_layout(m, theta, xs);
        for (std::size_t j = 0; j < m; ++j) {
            rows[j][0] = scale * xs[j];
            rows[j][1] = scale * ys[j];
        }
    }

    std::vector<double> weights = spec.weights;
    if (weights.empty()) weights.assign(m, 1.0 / static_cast<double>(m));
    if (weights.size() != m) throw std::invalid_argument("generator weights must have one entry per component");
    double total = 0.0;
    for (double w : weights) total += w;
    if (std::abs(total - 1.0) > 1e-6) throw std::invalid_argument("generator weights must sum to 1");
    for (double& w : weights) w /= total;
    // Renormalization can leave a last-ulp residue; fold it into the largest weight.
    double again = 0.0;
    for (double w : weights) again += w;
    *std::max_element(weights.begin(), weights.end()) += 1.0 - again;

    auto config = center_means(MixtureConfig(std::move(weights), Matrix::from_rows(rows)));
    const auto stats = separation_stats(config);
    if (std::abs(stats.r_min - spec.r_min) > 1e-6 || std::abs(stats.r_max / stats.r_min - rho) > 1e-6) {
        throw std::invalid_argument("generator infeasible: layout missed the requested separation");
    }
    return config;
}

namespace {

const std::set<std::string> kSpecKeys = {
    "kind", "name", "model", "generator", "trials", "n", "snr_grid", "seed", "out_dir", "max_iters", "tol",
    "init_radius", "against_best_fixed_point", "eps_grid", "mc_samples", "ns", "ds", "seeds", "replications", "region_radius",
    "multistarts", "ascent_iters", "population_samples", "batch", "step_constant", "projection_radius",
    "gamma_estimate", "fit_t_min", "fit_t_max", "radius_mode", "eps_mode", "c_a", "c_eps", "delta",
    "target_tol_fraction"};

const std::set<std::string> kGeneratorKeys = {"M", "d", "layout", "r_min", "ratio", "weights"};

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("bad value for '") + key + "': " + e.what());
    }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, std::optional<T>& out) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    T v{};
    read(j, key, v);
    out = v;
}

}  // namespace

ExperimentSpec ExperimentSpec::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("experiment spec must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!kSpecKeys.contains(key)) throw std::invalid_argument("unknown experiment spec key '" + key + "'");
    }
    ExperimentSpec s;
    if (!j.contains("kind")) throw std::invalid_argument("experiment spec requires 'kind'");
    s.kind = experiment_kind_from_string(j.at("kind").get<std::string>());
    s.name = to_string(s.kind);
    read(j, "name", s.name);
    if (j.contains("model")) s.model = MixtureConfig::from_json(j.at("model"));
    if (j.contains("generator")) {
        const auto& g = j.at("generator");
        if (!g.is_object()) throw std::invalid_argument("generator must be an object");
        for (const auto& [key, _] : g.items()) {
            if (!kGeneratorKeys.contains(key)) throw std::invalid_argument("unknown generator key '" + key + "'");
        }
        read(g, "M", s.generator.components);
        read(g, "d", s.generator.dim);
        read(g, "layout", s.generator.layout);
        read(g, "r_min", s.generator.r_min);
        read(g, "ratio", s.generator.ratio);
        read(g, "weights", s.generator.weights);
    }
    read(j, "trials", s.trials);
    read(j, "n", s.n);
    read(j, "snr_grid", s.snr_grid);
    read(j, "seed", s.seed);
    read(j, "out_dir", s.out_dir);
    read(j, "max_iters", s.max_iters);
    read(j, "tol", s.tol);
    read(j, "init_radius", s.init_radius);
    read(j, "against_best_fixed_point", s.against_best_fixed_point);
    read(j, "eps_grid", s.eps_grid);
    read(j, "mc_samples", s.mc_samples);
    read(j, "ns", s.ns);
    read(j, "ds", s.ds);
    read(j, "seeds", s.seeds);
    read(j, "replications", s.replications);
    read(j, "region_radius", s.region_radius);
    read(j, "multistarts", s.multistarts);
    read(j, "ascent_iters", s.ascent_iters);
    read(j, "population_samples", s.population_samples);
    read(j, "batch", s.batch);
    read(j, "step_constant", s.step_constant);
    read(j, "projection_radius", s.projection_radius);
    read(j, "gamma_estimate", s.gamma_estimate);
    read(j, "fit_t_min", s.fit_t_min);
    read(j, "fit_t_max", s.fit_t_max);
    read(j, "radius_mode", s.radius_mode);
    read(j, "eps_mode", s.eps_mode);
    read(j, "c_a", s.c_a);
    read(j, "c_eps", s.c_eps);
    read(j, "delta", s.delta);
    read(j, "target_tol_fraction", s.target_tol_fraction);
    if (s.trials == 0) throw std::invalid_argument("trials must be positive");
    if (s.n == 0) throw std::invalid_argument("n must be positive");
    if (s.seeds == 0 || s.replications == 0) throw std::invalid_argument("seeds and replications must be positive");
    if (s.eps_mode != "improved" && s.eps_mode != "original") throw std::invalid_argument("eps_mode must be improved or original");
    return s;
}

nlohmann::json ExperimentSpec::to_json() const {
    nlohmann::json j{{"kind", to_string(kind)},
                     {"name", name},
                     {"generator",
                      {{"M", generator.components},
                       {"d", generator.dim},
                       {"layout", generator.layout},
                       {"r_min", generator.r_min},
                       {"ratio", generator.ratio},
                       {"weights", generator.weights}}},
                     {"trials", trials},
                     {"n", n},
                     {"snr_grid", snr_grid},
                     {"seed", seed},
                     {"max_iters", max_iters},
                     {"tol", tol},
                     {"against_best_fixed_point", against_best_fixed_point},
                     {"eps_grid", eps_grid},
                     {"mc_samples", mc_samples},
                     {"ns", ns},
                     {"ds", ds},
                     {"seeds", seeds},
                     {"replications", replications},
                     {"multistarts", multistarts},
                     {"ascent_iters", ascent_iters},
                     {"population_samples", population_samples},
                     {"batch", batch},
                     {"gamma_estimate", gamma_estimate},
                     {"fit_t_min", fit_t_min},
                     {"fit_t_max", fit_t_max},
                     {"radius_mode", radius_mode},
                     {"eps_mode", eps_mode},
                     {"c_a", c_a},
                     {"c_eps", c_eps},
                     {"delta", delta},
                     {"target_tol_fraction", target_tol_fraction}};
    if (model) j["model"] = model->to_json();
    auto opt = [&j](const char* key, const std::optional<double>& v) {
        j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    opt("init_radius", init_radius);
    opt("region_radius", region_radius);
    opt("step_constant", step_constant);
    opt("projection_radius", projection_radius);
    return j;
}

MixtureConfig ExperimentSpec::model_at(std::optional<double> snr) const {
    if (model) return *model;
    GeneratorSpec g = generator;
    if (snr) g.r_min = *snr;
    return generate_config(g);
}

std::vector<ExperimentSpec> parse_spec_document(const nlohmann::json& doc) {
    std::vector<ExperimentSpec> out;
    if (doc.is_object() && doc.contains("experiments")) {
        for (const auto& [key, _] : doc.items()) {
            if (key != "experiments") throw std::invalid_argument("unknown suite key '" + key + "'");
        }
        if (!doc.at("experiments").is_array()) throw std::invalid_argument("'experiments' must be an array");
        for (const auto& e : doc.at("experiments")) out.push_back(ExperimentSpec::from_json(e));
        return out;
    }
    out.push_back(ExperimentSpec::from_json(doc));
    return out;
}

std::vector<ExperimentSpec> load_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open spec file " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("spec file is not valid JSON: ") + e.what());
    }
    return parse_spec_document(doc);
}

}  // namespace gemmix
