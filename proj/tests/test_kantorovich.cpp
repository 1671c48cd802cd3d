#include <cmath>
#include <random>

#include "doctest.h"
#include "pmonge/errors.hpp"
#include "pmonge/kantorovich.hpp"

using namespace pmonge;

namespace {
const std::vector<double> two_mu{0.5, 0.5}, two_nu{0.3, 0.7};
CostMatrix swap_cost() { return CostMatrix(2, 2, {0.0, 1.0, 1.0, 0.0}); }

// Vertices of the 2x2 transportation polytope: one free entry p00.
double brute_2x2(const CostMatrix& c, const std::vector<double>& mu, const std::vector<double>& nu) {
    const double lo = std::max(0.0, mu[0] - nu[1]), hi = std::min(mu[0], nu[0]);
    double best = INFINITY;
    for (double p : {lo, hi}) {
        const double v = c(0, 0) * p + c(0, 1) * (mu[0] - p) + c(1, 0) * (nu[0] - p) +
                         c(1, 1) * (mu[1] - nu[0] + p);
        best = std::min(best, v);
    }
    return best;
}
}  // namespace

TEST_CASE("exact solver on small cases") {
    auto single = solve_exact(CostMatrix(2, 2, {0.0, 0.5, 0.5, 0.0}), std::vector<double>{1.0, 0.0},
                              std::vector<double>{0.0, 1.0});
    CHECK(single.value == doctest::Approx(0.5));
    CHECK(single.plan(0, 1) == doctest::Approx(1.0));

    auto diag = solve_exact(swap_cost(), std::vector<double>{0.4, 0.6}, std::vector<double>{0.4, 0.6});
    CHECK(diag.value == 0.0);
    CHECK(diag.plan(0, 0) == doctest::Approx(0.4));
    CHECK(diag.plan(1, 1) == doctest::Approx(0.6));

    auto r = solve_exact(swap_cost(), two_mu, two_nu);
    CHECK(brute_2x2(swap_cost(), two_mu, two_nu) == doctest::Approx(0.2));
    CHECK(r.value == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(r.plan(0, 0) == doctest::Approx(0.3));
    CHECK(r.plan(0, 1) == doctest::Approx(0.2));
    CHECK(r.plan(1, 0) == doctest::Approx(0.0));
    // Row sums must equal mu, so the second row keeps 0.5.
    CHECK(r.plan(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("exact solver agrees with brute force on random 2x2") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int c = 0; c < 50; ++c) {
        CostMatrix C(2, 2, {U(rng), U(rng), U(rng), U(rng)});
        const double a = U(rng), b = U(rng);
        std::vector<double> mu{a, 1 - a}, nu{b, 1 - b};
        CHECK(solve_exact(C, mu, nu).value == doctest::Approx(brute_2x2(C, mu, nu)).epsilon(1e-12));
    }
}

TEST_CASE("exact solver errors") {
    CHECK_THROWS_AS(solve_exact(swap_cost(), std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.6}),
                    ImbalanceError);
    CHECK_THROWS_AS(CostMatrix(2, 2, {0.0, -1.0, 0.0, 0.0}), InvalidInput);
    std::vector<double> mu(8, 0.125);
    std::vector<double> v(64);
    for (std::size_t k = 0; k < 64; ++k) v[k] = double((k * 37) % 11);
    CHECK_THROWS_AS(solve_exact(CostMatrix(8, 8, v), mu, mu, 1), CycleGuardError);
}

TEST_CASE("entropic solver") {
    auto one = solve_entropic(CostMatrix(1, 1, {0.7}), std::vector<double>{1.0}, std::vector<double>{1.0}, 0.3, 1e-12);
    CHECK(one.plan(0, 0) == doctest::Approx(1.0));

    auto sym = solve_entropic(CostMatrix(2, 2, {0.1, 0.9, 0.9, 0.1}), std::vector<double>{0.5, 0.5},
                              std::vector<double>{0.5, 0.5}, 0.05, 1e-12);
    CHECK(sym.plan(0, 0) == doctest::Approx(sym.plan(1, 1)).epsilon(1e-12));
    CHECK(sym.plan(0, 1) == doctest::Approx(sym.plan(1, 0)).epsilon(1e-12));

    auto r = solve_entropic(swap_cost(), two_mu, two_nu, 0.01, 1e-12);
    auto ex = solve_exact(swap_cost(), two_mu, two_nu);
    for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(r.plan.mass[k] - ex.plan.mass[k]) <= 0.02);
    CHECK(r.plan.marginal_error() <= 1e-14);
    CHECK_THROWS_AS(solve_entropic(swap_cost(), two_mu, two_nu, 1e-4, 1e-15, 3), NonConvergence);
}

TEST_CASE("warm start reproduces the cold solution") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> v(100);
    for (auto& c : v) c = U(rng);
    CostMatrix C(10, 10, v);
    std::vector<double> mu(10, 0.1), nu(10, 0.1);
    auto cold = solve_entropic(C, mu, nu, 0.01, 1e-10);
    auto warm = solve_entropic(C, mu, nu, 0.01, 1e-10, 200000, &cold.potentials);
    CHECK(warm.iterations <= 2);
    CHECK(warm.plan.cost(C) == doctest::Approx(cold.plan.cost(C)).epsilon(1e-8));
}

TEST_CASE("eta selection") {
    CHECK(select_eta(CostMatrix(1, 1, {0.0}), 0.1) == doctest::Approx(0.1 / (2 * std::log(2.0))));
    CostMatrix big(64, 64, std::vector<double>(64 * 64, 0.5));
    CHECK(select_eta(big, 0.1) == doctest::Approx(0.006011052923914622).epsilon(1e-12));
    CHECK(select_eta(big, 0.2) == doctest::Approx(2 * select_eta(big, 0.1)).epsilon(1e-15));
}

TEST_CASE("selected eta stays within eps_K on random instances") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int c = 0; c < 5; ++c) {
        std::vector<double> v(32 * 32), mu(32), nu(32);
        for (auto& x : v) x = U(rng);
        double sm = 0, sn = 0;
        for (auto& x : mu) sm += (x = U(rng));
        for (auto& x : nu) sn += (x = U(rng));
        for (auto& x : mu) x /= sm;
        for (auto& x : nu) x /= sn;
        CostMatrix C(32, 32, v);
        auto e = solve_entropic(C, mu, nu, select_eta(C, 0.1), default_entropic_tol(C, 0.1));
        const double gap = e.plan.cost(C) - solve_exact(C, mu, nu).value;
        CHECK(gap >= -1e-12);
        CHECK(gap <= 0.1);
    }
}

TEST_CASE("plan path") {
    auto abs = make_cost("abs", {});
    MeasurePath u = [](const Param&) { return GridDensity::uniform(16); };
    auto space = ParameterSpace::grid(0.0, 1.0, 3);
    auto constant = continuous_plan_path(abs, u, u, space.points(), 0.05);
    REQUIRE(constant.plans.size() == 3);
    CHECK(constant.plans[1].mass == constant.plans[0].mass);
    CHECK(constant.plans[2].mass == constant.plans[0].mass);

    auto one = ParameterSpace::grid(0.5, 0.5, 1);
    auto single = continuous_plan_path(abs, u, u, one.points(), 0.05);
    CHECK(single.plans.size() == 1);
    CHECK(single.values[0] - single.exact_values[0] <= 0.05);

    // Plan increments shrink as the t-grid refines.
    auto power = make_cost("power", {{"p0", 1.0}, {"p1", 1.0}});
    MeasurePath tri = [](const Param&) {
        std::vector<double> w(16);
        for (std::size_t i = 0; i < 16; ++i) w[i] = (i + 0.5);
        return GridDensity::normalized(w);
    };
    auto max_increment = [&](std::size_t points) {
        auto sp = ParameterSpace::grid(0.0, 1.0, points);
        auto path = continuous_plan_path(power, u, tri, sp.points(), 0.02);
        double m = 0.0;
        for (std::size_t k = 1; k < path.plans.size(); ++k) m = std::max(m, plan_dkr(path.plans[k - 1], path.plans[k]));
        return m;
    };
    const double coarse = max_increment(3), fine = max_increment(9);
    CHECK(coarse < 0.5);
    CHECK(fine < coarse);
}

TEST_CASE("plan dumps") {
    auto r = solve_exact(swap_cost(), two_mu, std::vector<double>{0.25, 0.75});
    CHECK(plan_csv(r.plan) == "i,j,mass\n0,0,0.25\n0,1,0.25\n1,1,0.5\n");
    CHECK(plan_dkr(r.plan, r.plan) == 0.0);
}
