#include <cmath>
#include <random>

#include "doctest.h"
#include "pmonge/errors.hpp"
#include "pmonge/skorohod.hpp"

using namespace pmonge;

TEST_CASE("quantile map basics") {
    QuantileSkorohodMap uniform(8, 0, std::vector<double>(8, 0.125), 1.0);
    for (double u : {0.0, 0.1, 0.37, 0.5, 0.99, 1.0}) CHECK(xi(uniform, u) == doctest::Approx(u).epsilon(1e-14));

    QuantileSkorohodMap point(DiscreteMeasure({{0.7, 0.5}}), 0.5);
    for (double u : {0.0, 0.2, 0.5}) CHECK(point(u) == 0.7);

    CHECK_THROWS_AS(uniform(1.5), DomainError);
    CHECK_THROWS_AS(QuantileSkorohodMap(4, 0, std::vector<double>(4, 0.0), 1.0)(0.5), EmptyTarget);
}

TEST_CASE("quantile maps of shrinking uniform targets converge") {
    // Targets uniform on [0, 1/2 + 1/k] converge to uniform on [0, 1/2].
    const std::size_t bins = 128;
    auto target = [&](double len) {
        std::vector<double> m(bins, 0.0);
        const std::size_t full = std::size_t(std::llround(len * bins));
        for (std::size_t b = 0; b < full; ++b) m[b] = 1.0 / double(full);
        return QuantileSkorohodMap(bins, 0, m, 1.0);
    };
    auto limit = target(0.5);
    for (int k : {2, 4, 8, 16, 32, 64}) {
        auto mk = target(0.5 + 1.0 / k);
        double dev = 0.0;
        for (int q = 0; q <= 990; ++q) dev = std::max(dev, std::abs(mk(q / 1000.0) - limit(q / 1000.0)));
        CHECK(dev <= 1.0 / k + 1e-12);
    }
}

TEST_CASE("cell offsets") {
    auto p = cells(0.3, Param::scalar(0));
    CHECK(cell_cdf_offset(0.1, 1, cells(0.5, Param::scalar(0))) == doctest::Approx(0.1));
    CHECK(cell_cdf_offset(0.4, 2, p) == doctest::Approx(0.1));
    CHECK(cell_cdf_offset(1.0, 4, p) == doctest::Approx(0.1));
    CHECK_THROWS_AS(cell_cdf_offset(0.4, 1, p), WrongCell);
    CHECK_THROWS_AS(cell_cdf_offset(0.4, 3, p), WrongCell);
}

TEST_CASE("weighted cell offsets") {
    auto p = cells(0.3, Param::scalar(0));
    GridDensity lebesgue = GridDensity::uniform(10);
    for (double s : {0.31, 0.45, 0.59}) CHECK(weighted_cell_cdf_offset(s, 2, p, lebesgue) == doctest::Approx(cell_cdf_offset(s, 2, p)));
    GridDensity half({0.5, 0.5, 0.0, 0.0});
    CHECK(weighted_cell_cdf_offset(0.2, 1, p, half) == doctest::Approx(0.4));
}

TEST_CASE("cell offsets are continuous in delta_tilde") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int s = 0; s < 300; ++s) {
        const double d1 = 0.1 + 0.9 * U(rng), d2 = std::clamp(d1 + 0.02 * (U(rng) - 0.5), 0.1, 1.0);
        auto a = cells(d1, Param::scalar(0)), b = cells(d2, Param::scalar(0));
        const double x = U(rng);
        const std::size_t j = a.locate(x);
        if (b.locate(x) != j) continue;
        auto ca = a.cell(j), cb = b.cell(j);
        const double overlap = std::max(0.0, std::min(ca.hi, cb.hi) - std::max(ca.lo, cb.lo));
        const double sym = ca.length() + cb.length() - 2 * overlap;
        CHECK(std::abs(cell_cdf_offset(x, j, a) - cell_cdf_offset(x, j, b)) <= sym + 1e-12);

        // TV transfer with two densities.
        std::vector<double> w1(8), w2(8);
        for (std::size_t i = 0; i < 8; ++i) {
            w1[i] = U(rng);
            w2[i] = w1[i] + 0.05 * U(rng);
        }
        auto g1 = GridDensity::normalized(w1), g2 = GridDensity::normalized(w2);
        const double lhs = std::abs(weighted_cell_cdf_offset(x, j, a, g1) - weighted_cell_cdf_offset(x, j, b, g2));
        const double sym_mass = g1.mass_between(std::min(ca.lo, cb.lo), std::max(ca.lo, cb.lo)) +
                                g1.mass_between(std::min(ca.hi, cb.hi), std::max(ca.hi, cb.hi));
        CHECK(lhs <= tv_distance(g1, g2) + sym_mass + 1e-12);
    }
}

TEST_CASE("quantile table dump") {
    QuantileSkorohodMap m(2, 0, {0.5, 0.5}, 1.0);
    CHECK(quantile_table_csv(m, 3) == "u,y\n0,0\n0.5,0.5\n1,1\n");
}
