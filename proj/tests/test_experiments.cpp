#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gemmix/experiment_spec.hpp"
#include "gemmix/experiments.hpp"
#include "gemmix/svg.hpp"

using namespace gemmix;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("gemmix_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ExperimentSpec parse(const std::string& text) { return ExperimentSpec::from_json(nlohmann::json::parse(text)); }

}  // namespace

TEST_CASE("generator hits the requested separation") {
    // The arc layout spans ratios from the regular polygon up to M - 1.
    const std::vector<std::pair<std::size_t, double>> cases{{2, 1.0}, {3, 1.0}, {3, 1.5}, {3, 2.0},
                                                            {4, 1.5}, {4, 3.0}, {6, 2.5}};
    for (const auto& [m, ratio] : cases) {
        GeneratorSpec g;
        g.components = m;
        g.dim = 3;
        g.r_min = 7.0;
        g.ratio = ratio;
        const auto c = generate_config(g);
        const auto s = separation_stats(c);
        CHECK(s.r_min == doctest::Approx(7.0).epsilon(1e-9));
        CHECK(s.r_max / s.r_min == doctest::Approx(ratio).epsilon(1e-6));
        for (double v : c.weighted_mean()) CHECK(std::abs(v) < 1e-9);
    }
    GeneratorSpec bad;
    bad.ratio = 2.5;
    CHECK_THROWS_AS(generate_config(bad), std::invalid_argument);
    bad = GeneratorSpec{};
    bad.layout = "spiral";
    CHECK_THROWS_AS(generate_config(bad), std::invalid_argument);
    bad = GeneratorSpec{};
    bad.weights = {0.5, 0.5};
    CHECK_THROWS_AS(generate_config(bad), std::invalid_argument);
}

TEST_CASE("spec parsing is strict") {
    const auto s = parse(R"({"kind": "convergence", "generator": {"M": 3, "d": 2, "r_min": 5, "ratio": 1.5},
                             "snr_grid": [1, 2], "trials": 3, "seed": 9})");
    CHECK(s.kind == ExperimentKind::convergence);
    CHECK(s.name == "convergence");
    CHECK(s.trials == 3);
    CHECK(s.snr_grid == std::vector<double>{1.0, 2.0});
    CHECK(s.n == 12000);
    CHECK(ExperimentSpec::from_json(s.to_json()).to_json() == s.to_json());

    CHECK_THROWS_AS(parse(R"({"kind": "convergence", "trails": 3})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"kind": "nonsense"})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"trials": 3})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"kind": "convergence", "trials": "many"})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"kind": "convergence", "generator": {"K": 3}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"kind": "convergence", "trials": 0})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_spec_document(nlohmann::json::parse(R"({"experiments": [], "extra": 1})")),
                    std::invalid_argument);

    const auto suite = parse_spec_document(
        nlohmann::json::parse(R"({"experiments": [{"kind": "bounds"}, {"kind": "stochastic", "name": "sgd"}]})"));
    REQUIRE(suite.size() == 2);
    CHECK(suite[1].name == "sgd");
    CHECK(to_string(ExperimentKind::region_probe) == "region-probe");
    CHECK(experiment_kind_from_string("verify-gs") == ExperimentKind::verify_gs);
}

TEST_CASE("fitted contraction factor") {
    std::vector<double> errors;
    for (int t = 0; t < 30; ++t) errors.push_back(std::pow(0.5, t));
    CHECK(fitted_contraction_factor(errors) == doctest::Approx(0.5).epsilon(1e-9));

    // Geometric decay into a floor: only the pre-plateau part is fitted.
    std::vector<double> floored;
    for (int t = 0; t < 60; ++t) floored.push_back(std::max(std::pow(0.8, t), 1e-3));
    CHECK(fitted_contraction_factor(floored) == doctest::Approx(0.8).epsilon(1e-9));
}

TEST_CASE("convergence study") {
    auto spec = parse(R"({"kind": "convergence", "generator": {"M": 3, "d": 2, "r_min": 5, "ratio": 1.5},
                          "snr_grid": [2, 5], "trials": 2, "n": 3000, "max_iters": 60, "seed": 4})");
    const auto r = convergence_study(spec);
    REQUIRE(r.curves.size() == 2);
    CHECK(r.curves[0].snr == 2.0);
    CHECK(r.curves[1].certified == false);
    CHECK(r.curves[1].fitted_factor < r.curves[0].fitted_factor);
    CHECK(r.curves[1].decay_ratio > 10.0);
    CHECK(r.curves[0].mean_log_err.size() == r.curves[0].sd_log_err.size());
    CHECK(r.summary().is_object());

    spec.generator.ratio = 100.0;
    CHECK_THROWS_AS(convergence_study(spec), std::invalid_argument);
}

TEST_CASE("region probe") {
    const auto spec = parse(R"({"kind": "region-probe", "generator": {"M": 3, "d": 2, "r_min": 5, "ratio": 1.5},
                                "eps_grid": [0, 0.1], "trials": 3, "n": 4000, "max_iters": 300, "seed": 2})");
    const auto r = region_probe(spec);
    REQUIRE(r.runs.size() == 6);
    for (const auto& run : r.runs) {
        if (run.eps_fraction == 0.0) {
            CHECK(run.final_error > 0.2);
        } else {
            CHECK(run.final_error < 0.05);
        }
    }
    auto two = spec;
    two.generator.components = 2;
    two.generator.ratio = 1.0;
    CHECK_THROWS_AS(region_probe(two), std::invalid_argument);
}

TEST_CASE("bounds study") {
    SUBCASE("certified model: predicted iterations bound the measured ones") {
        const auto spec = parse(R"({"kind": "bounds", "generator": {"M": 3, "d": 2, "r_min": 40, "ratio": 1.5},
                                    "mc_samples": 100000, "seed": 3})");
        const auto r = bounds_study(spec);
        CHECK(r.report.certified);
        REQUIRE(r.predicted_iterations.has_value());
        REQUIRE(r.measured_iterations.has_value());
        CHECK(*r.measured_iterations <= *r.predicted_iterations);
        CHECK(r.table().find("zeta") != std::string::npos);
    }
    SUBCASE("tiny separation is reported, not thrown") {
        const auto spec = parse(R"({"kind": "bounds", "generator": {"M": 3, "d": 2, "r_min": 4, "ratio": 1.5}})");
        const auto r = bounds_study(spec);
        CHECK_FALSE(r.report.certified);
        CHECK(r.report.message == "separation too small for certificate");
        CHECK(r.table().find("separation too small for certificate") != std::string::npos);
    }
}

TEST_CASE("stochastic study needs a radius for a single component") {
    auto spec = parse(R"({"kind": "stochastic", "model": {"weights": [1.0], "means": [[0.0, 0.0]], "dim": 2},
                          "trials": 2, "max_iters": 300, "fit_t_min": 10, "fit_t_max": 300, "seed": 1})");
    CHECK_THROWS_AS(stochastic_study(spec), std::invalid_argument);
    spec.projection_radius = 2.0;
    spec.step_constant = 1.5;
    const auto r = stochastic_study(spec);
    CHECK(r.t_grid.front() == 1);
    CHECK(r.t_grid.back() <= 300);
    CHECK(r.mse.size() == r.t_grid.size());
    CHECK(r.slope < 0.0);
}

TEST_CASE("artifacts are deterministic and checksummed") {
    const auto dir = scratch("suite");
    const auto specs = parse_spec_document(nlohmann::json::parse(R"({"experiments": [
        {"kind": "convergence", "name": "conv", "generator": {"M": 3, "d": 2, "r_min": 5, "ratio": 1.5},
         "trials": 1, "n": 2000, "max_iters": 30, "seed": 8},
        {"kind": "convergence", "name": "conv", "generator": {"M": 3, "d": 2, "r_min": 5, "ratio": 1.5},
         "trials": 1, "n": 2000, "max_iters": 30, "seed": 8},
        {"kind": "bounds", "name": "impossible", "generator": {"M": 3, "d": 2, "r_min": 5, "ratio": 40}}
    ]})"));
    const auto manifest = run_suite(specs, dir.string());
    const auto& entries = manifest.at("experiments");
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].at("status") == "ok");
    CHECK(entries[1].at("name") == "conv-2");
    CHECK(entries[2].at("status") == "failed");
    CHECK(entries[2].at("error").get<std::string>().find("generator infeasible") != std::string::npos);
    CHECK(fs::exists(dir / "manifest.json"));

    // Same spec and seed twice: byte-identical CSV.
    CHECK(slurp(dir / "conv.csv") == slurp(dir / "conv-2.csv"));
    CHECK(slurp(dir / "conv.csv").rfind("snr,t,mean_log_err,sd_log_err\n", 0) == 0);
    for (const auto& a : entries[0].at("artifacts")) {
        const auto path = dir / a.at("path").get<std::string>();
        CHECK(a.at("sha256") == sha256_file(path.string()));
    }
    const auto svg = slurp(dir / "conv.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("sha256 known answers") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("line chart") {
    LineChart chart;
    chart.title = "t & <x>";
    chart.log_y = true;
    chart.series.push_back({"a", {1, 2, 3}, {1.0, 0.1, -1.0}, {}});
    const auto svg = chart.render();
    CHECK(svg.find("t &amp; &lt;x&gt;") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
}
