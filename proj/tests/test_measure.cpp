#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "doctest.h"
#include "pmonge/errors.hpp"
#include "pmonge/kantorovich.hpp"
#include "pmonge/measure.hpp"

using namespace pmonge;

namespace {
GridDensity left_half() { return GridDensity({0.5, 0.5, 0.0, 0.0}); }
}  // namespace

TEST_CASE("cdf") {
    CHECK(GridDensity::uniform(8).cdf(0.25) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(left_half().cdf(0.25) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(left_half().cdf(0.75) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(GridDensity::uniform(3).cdf(0.0) == 0.0);
    CHECK(GridDensity::uniform(3).cdf(1.0) == 1.0);
}

TEST_CASE("quantile") {
    CHECK(GridDensity::uniform(10).quantile(0.3) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(left_half().quantile(0.6) == doctest::Approx(0.3).epsilon(1e-14));
    DiscreteMeasure d({{0.2, 0.5}, {0.8, 0.5}});
    CHECK(d.quantile(0.7) == 0.8);
    CHECK(d.quantile(0.3) == 0.2);
}

TEST_CASE("grid density validation") {
    CHECK_THROWS_AS(GridDensity({0.5, 0.6}), InvalidInput);
    CHECK_THROWS_AS(GridDensity({1.5, -0.5}), InvalidInput);
    CHECK_THROWS_AS(GridDensity({NAN, 1.0}), InvalidInput);
    CHECK(GridDensity::normalized({1.0, 3.0}).weight(1) == doctest::Approx(0.75));
}

TEST_CASE("pushforward") {
    auto u = GridDensity::uniform(16);
    auto id = pushforward(u, [](double x) { return x; }, 16);
    auto flip = pushforward(u, [](double x) { return 1.0 - x; }, 16);
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(id.weight(i) == doctest::Approx(1.0 / 16));
        CHECK(flip.weight(i) == doctest::Approx(1.0 / 16));
    }
    // Oracle: 1e6 uniform draws through x/2 into 4 bins.
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> hist(4, 0.0);
    for (int s = 0; s < 1000000; ++s) hist[std::min(3, int(U(rng) / 2 * 4))] += 1e-6;
    CHECK(hist[0] == doctest::Approx(0.5).epsilon(0.01));
    CHECK(hist[2] == 0.0);
    auto half = pushforward(GridDensity::uniform(4), [](double x) { return x / 2; }, 4);
    CHECK(half.weight(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(half.weight(1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(half.weight(2) == 0.0);
    CHECK(half.weight(3) == 0.0);
}

TEST_CASE("total variation") {
    auto g = GridDensity({0.6, 0.4});
    CHECK(tv_distance(g, g) == 0.0);
    CHECK(tv_distance(GridDensity({1.0, 0.0}), GridDensity({0.0, 1.0})) == doctest::Approx(2.0));
    CHECK(tv_distance(g, GridDensity({0.4, 0.6})) == doctest::Approx(0.4));
}

TEST_CASE("Kantorovich-Rubinshtein distance") {
    DiscreteMeasure a({{0.0, 1.0}}), b({{1.0, 1.0}}), c({{0.25, 1.0}});
    CHECK(dkr_distance(a, a) == 0.0);
    CHECK(dkr_distance(a, b) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dkr_distance(a, c) == doctest::Approx(0.25).epsilon(1e-12));
    // Separated by more than 2 the bound |f| <= 1 binds.
    std::vector<double> support{0.0, 3.0}, p{1.0, 0.0}, q{0.0, 1.0};
    CHECK(dkr_distance(support, p, q) == doctest::Approx(2.0));
}

TEST_CASE("W1 distance") {
    auto u = GridDensity::uniform(2);
    CHECK(w1_distance(u, u) == 0.0);
    // Quantiles u and u/2 differ by u/2, which integrates to 1/4.
    CHECK(w1_distance(GridDensity::uniform(4), left_half()) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(w1_distance(GridDensity({1.0, 0.0}), GridDensity({0.0, 1.0})) == doctest::Approx(0.5).epsilon(1e-12));
    // Cross-check against transport on 256 atoms at cell centers.
    const std::size_t n = 256;
    std::vector<double> mu(n, 1.0 / n), nu(n, 0.0), cost(n * n);
    for (std::size_t i = 0; i < n / 2; ++i) nu[i] = 2.0 / n;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = std::abs(double(i) - double(j)) / n;
    auto lp = solve_exact(CostMatrix(n, n, cost), mu, nu);
    CHECK(lp.value == doctest::Approx(0.25).epsilon(0.01));
}

TEST_CASE("grid density csv round trip") {
    GridDensity g({0.125, 0.375, 0.5});
    const std::string path = "measure_roundtrip.csv";
    std::ofstream(path) << grid_density_csv(g);
    CHECK(read_grid_density_csv(path) == g);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_grid_density_csv("does_not_exist.csv"), IoError);
}
