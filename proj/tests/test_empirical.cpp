#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "gemmix/empirical.hpp"
#include "gemmix/experiment_spec.hpp"
#include "gemmix/mixture.hpp"

using namespace gemmix;

namespace {

MixtureConfig arc(double r_min, std::size_t dim = 2) {
    GeneratorSpec g;
    g.components = 3;
    g.dim = dim;
    g.r_min = r_min;
    g.ratio = 1.5;
    return generate_config(g);
}

const std::vector<double> e1{1.0, 0.0};

}  // namespace

TEST_CASE("multistart points") {
    const auto c = arc(4.0);
    const auto starts = multistart_points(c.means(), 1.0, 9, 3);
    REQUIRE(starts.size() == 9);
    CHECK(starts[0] == c.means());
    for (std::size_t s = 1; s < 9; ++s) {
        for (std::size_t i = 0; i < 3; ++i) {
            const double r = distance(starts[s].row(i), c.means().row(i));
            CHECK(r <= 1.0 + 1e-12);
            if (s <= 4) CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    CHECK(multistart_points(c.means(), 1.0, 0, 3).empty());
}

TEST_CASE("empirical Rademacher estimate") {
    SUBCASE("one point and a degenerate region") {
        const MixtureConfig one({1.0}, Matrix::from_rows({{0.5, -1.0}}));
        const Points x = Matrix::from_rows({{2.0, 3.0}});
        const auto est = empirical_rademacher(x, one, 0.0, 0, e1, {4, 20}, 8, 1);
        REQUIRE(est.replicate_values.size() == 8);
        for (double v : est.replicate_values) CHECK(std::abs(v) == doctest::Approx(1.5).epsilon(1e-12));
        CHECK(est.std_err >= 0.0);
        CHECK(est.replications == 8);
    }

    const auto c = arc(4.0);
    const Points pts = sample_points(c, 1000, 11);

    SUBCASE("nested regions never lower the estimate") {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const double small = empirical_rademacher(pts, c, 0.5, 0, e1, {4, 40}, 3, seed).value;
            const double large = empirical_rademacher(pts, c, 1.0, 0, e1, {4, 40}, 3, seed).value;
            CHECK(large >= small - 1e-12);
        }
    }

    SUBCASE("metadata") {
        const auto est = empirical_rademacher(pts, c, 1.0, 1, e1, {3, 10}, 2, 5);
        CHECK(est.meta.multistarts == 3);
        CHECK(est.meta.iterations == 10);
        CHECK(est.meta.component == 1);
        CHECK(est.meta.region_radius == 1.0);
        CHECK(est.meta.direction == e1);
        CHECK(est.meta.evaluations > 0);
        const auto j = est.to_json();
        CHECK(j.contains("value"));
    }

    SUBCASE("negating the direction leaves the distribution unchanged") {
        const std::vector<double> minus{-1.0, 0.0};
        const auto plus_est = empirical_rademacher(pts, c, 1.0, 0, e1, {2, 20}, 20, 101);
        const auto minus_est = empirical_rademacher(pts, c, 1.0, 0, minus, {2, 20}, 20, 202);
        // Welch statistic; |t| below the two-sided 1% normal quantile.
        const double t = (plus_est.value - minus_est.value) /
                         std::sqrt(plus_est.std_err * plus_est.std_err + minus_est.std_err * minus_est.std_err);
        CHECK(std::abs(t) < 2.576);
    }

    SUBCASE("argument checks") {
        const std::vector<double> not_unit{1.0, 1.0};
        CHECK_THROWS_AS(empirical_rademacher(pts, c, 1.0, 0, not_unit, {2, 5}, 1, 1), std::invalid_argument);
        CHECK_THROWS_AS(empirical_rademacher(pts, c, 1.0, 3, e1, {2, 5}, 1, 1), std::invalid_argument);
        CHECK_THROWS_AS(empirical_rademacher(pts, c, 1.0, 0, e1, {2, 5}, 0, 1), std::invalid_argument);
    }
}

TEST_CASE("sup gradient deviation") {
    const auto c = arc(4.0);
    const Points population = sample_points(c, 20'000, 7);

    SUBCASE("identical measures give zero") {
        const auto est = sup_gradient_deviation(population, population, c, 1.0, 0, {{2, 10}, false}, 1);
        CHECK(est.value == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }

    SUBCASE("direct sup stays below the covering surrogate") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const Points pts = sample_points(c, 500, 1000 + seed);
            const auto est = sup_gradient_deviation(pts, population, c, 1.0, 0, {{2, 10}, true}, seed);
            CHECK(est.value >= 0.0);
            REQUIRE(est.covering_surrogate.has_value());
            CHECK(est.value <= *est.covering_surrogate + 1e-12);
            CHECK(est.meta.covering_size == half_net(2).size());
        }
    }

    SUBCASE("doubling the multistart count barely moves the estimate") {
        const Points pts = sample_points(c, 2000, 5);
        const double base = sup_gradient_deviation(pts, population, c, 1.0, 0, {{4, 40}, false}, 9).value;
        const double doubled = sup_gradient_deviation(pts, population, c, 1.0, 0, {{8, 40}, false}, 9).value;
        CHECK(std::abs(doubled - base) < 0.05 * base);
    }

    SUBCASE("noise floor is the population standard error at the truth") {
        const Points pts = sample_points(c, 300, 5);
        const auto est = sup_gradient_deviation(pts, population, c, 1.0, 2, {{1, 5}, false}, 9);
        CHECK(est.noise_floor > 0.0);
        CHECK(est.noise_floor < 0.01);
    }
}

TEST_CASE("half nets cover the sphere") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    for (std::size_t d = 1; d <= 4; ++d) {
        const auto net = half_net(d);
        CHECK(static_cast<double>(net.size()) <= std::exp(2.0 * static_cast<double>(d)));
        for (int trial = 0; trial < 2000; ++trial) {
            std::vector<double> v(d);
            for (double& x : v) x = normal(rng);
            const double len = norm(v);
            for (double& x : v) x /= len;
            double best = 2.0;
            for (const auto& u : net) best = std::min(best, distance(u, v));
            CHECK(best <= 0.5);
        }
    }
    CHECK_THROWS_AS(half_net(5), std::invalid_argument);
}

TEST_CASE("log-log slope") {
    const std::vector<double> x{1.0, 4.0, 16.0, 64.0};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 / std::sqrt(v));
    CHECK(loglog_slope(x, y) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK_THROWS_AS(loglog_slope({1.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("scaling study harness") {
    const ConfigFamily family = [](std::size_t d) { return arc(4.0, d); };
    ScalingOptions opts;
    opts.ns = {100, 400, 1600};
    opts.ds = {2};
    opts.seeds = 3;

    SUBCASE("a constant quantity has zero slope") {
        const auto table = scaling_study(ScalingQuantity::constant, family, opts, 1);
        CHECK(std::abs(table.slope(2)) <= 0.05);
        CHECK(table.rows.size() == 3);
        CHECK(table.csv().rfind("quantity,n,d,median,iqr,slope_fit\n", 0) == 0);
    }

    SUBCASE("Rademacher rows are filled per n and d") {
        opts.ds = {2, 3};
        opts.ascent = {2, 10};
        opts.replications = 2;
        const auto table = scaling_study(ScalingQuantity::rademacher, family, opts, 2);
        CHECK(table.rows.size() == 6);
        CHECK(table.medians_at(400).size() == 2);
        for (const auto& r : table.rows) CHECK(r.median > 0.0);
        CHECK(table.slope(2) < 0.0);
    }

    SUBCASE("grid validation") {
        opts.ns = {100};
        CHECK_THROWS_AS(scaling_study(ScalingQuantity::constant, family, opts, 1), std::invalid_argument);
    }
    CHECK(scaling_quantity_from_string("deviation") == ScalingQuantity::deviation);
    CHECK_THROWS_AS(scaling_quantity_from_string("bogus"), std::invalid_argument);
}
