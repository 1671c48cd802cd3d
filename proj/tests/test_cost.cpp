#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "pmonge/cost.hpp"
#include "pmonge/errors.hpp"

using namespace pmonge;

namespace {
const Param t0 = Param::scalar(0.0);
const Param t1 = Param::scalar(1.0);
ParametricCost power() { return make_cost("power", {{"p0", 1.0}, {"p1", 1.0}}); }
MeasurePath uniform_path() {
    return [](const Param&) { return GridDensity::uniform(256); };
}
}  // namespace

TEST_CASE("power family evaluation") {
    auto c = power();
    CHECK(c.eval(0.5, 0.5, Param::scalar(0.37)) == 0.0);
    CHECK(c.eval(0.0, 1.0, t1) == doctest::Approx(1.0));
    CHECK(c.eval(0.0, 0.5, t1) == doctest::Approx(0.25));
    CHECK(c.bounded_by() == 1.0);
}

TEST_CASE("checked evaluation rejects bad values") {
    ParametricCost neg("neg", [](double, double, const Param&) { return -1.0; });
    ParametricCost nan("nan", [](double, double, const Param&) { return NAN; });
    CHECK_THROWS_AS((void)neg.eval(0.1, 0.2, t0), EvaluationError);
    CHECK_THROWS_AS((void)nan.eval(0.1, 0.2, t0), EvaluationError);
    CHECK_THROWS_AS(make_cost("nope", {}), ConfigError);
}

TEST_CASE("bound check catches a false declaration") {
    ParametricCost liar("liar", [](double x, double, const Param&) { return 3.0 * x; }, {}, 1.0);
    auto space = ParameterSpace::grid(0.0, 1.0, 5);
    CHECK_THROWS(liar.check(space, 1));
    CHECK_NOTHROW(power().check(space, 1));
}

TEST_CASE("oscillation") {
    std::vector<Param> ts{t0, t1};
    auto constant = make_cost("constant", {{"value", 1.0}});
    CHECK(oscillation(constant, 0.3, {}, {}, ts) == 0.0);
    auto abs = make_cost("abs", {});
    CHECK(oscillation(abs, 0.1, {}, {}, ts) == doctest::Approx(0.1).epsilon(1e-9));
    auto sq = make_cost("power", {{"p0", 2.0}, {"p1", 0.0}});
    // Brute force on a 1000-point grid per axis.
    double brute = 0.0;
    for (int i = 0; i <= 1000; ++i)
        for (int k = 0; k <= 100; ++k) {
            const double x1 = i / 1000.0, x2 = x1 + k / 1000.0;
            if (x2 > 1.0) break;
            for (double y : {0.0, 1.0}) brute = std::max(brute, std::abs((x1 - y) * (x1 - y) - (x2 - y) * (x2 - y)));
        }
    CHECK(brute == doctest::Approx(0.19).epsilon(1e-9));
    CHECK(std::abs(oscillation(sq, 0.1, {}, {}, ts) - 0.19) <= 0.01);
}

TEST_CASE("oscillation is monotone in the radius") {
    std::vector<Param> ts{t0, Param::scalar(0.5), t1};
    auto c = make_cost("oscillatory", {{"amplitude", 0.5}});
    double prev = 0.0;
    for (double r : {0.01, 0.02, 0.05, 0.1, 0.2, 0.4}) {
        const double o = oscillation(c, r, {}, {}, ts);
        CHECK(o >= prev);
        prev = o;
    }
}

TEST_CASE("kappa search") {
    std::vector<Param> ts{t0, t1};
    CHECK(kappa_for(make_cost("constant", {}), ts, {}, 0.1) == 1.0);
    const double k = kappa_for(make_cost("abs", {}), ts, {}, 0.1);
    CHECK(k > 0.045);
    CHECK(k <= 0.09);
    // Lipschitz constant of the power family in x is at most 2 on [0,1].
    const double kp = kappa_for(power(), ts, {}, 0.1);
    CHECK(kp >= 0.9 * 0.1 / (2 * 2.0));
    KappaOptions o;
    o.floor = 0.5;
    CHECK_THROWS_AS(kappa_for(make_cost("abs", {}), ts, {}, 0.1, o), ModulusFailure);
}

TEST_CASE("truncation level") {
    std::vector<Param> ts{t0, t1};
    std::vector<double> grid;
    for (int v = 1; v <= 64; ++v) grid.push_back(v);
    auto bounded = DominatingPair{[](double, const Param&) { return 3.0; }, [](double, const Param&) { return 3.0; }};
    CHECK(truncation_level(bounded, uniform_path(), uniform_path(), ts, 0.4, grid) == 7.0);
    DominatingPair singular{[](double x, const Param&) { return 0.5 / std::sqrt(x); },
                            [](double, const Param&) { return 0.0; }};
    const double N = truncation_level(singular, uniform_path(), uniform_path(), ts, 0.4, grid);
    CHECK(N >= 10.0);
    CHECK(N <= 12.0);
    CHECK(truncation_level(DominatingPair::constant(1.0), uniform_path(), uniform_path(), ts, 0.4, grid) == 2.0);
    std::vector<double> tiny{1.0, 2.0};
    CHECK_THROWS_AS(truncation_level(singular, uniform_path(), uniform_path(), ts, 0.4, tiny), TailDivergence);
}

TEST_CASE("tail curve") {
    std::vector<Param> ts{t0, Param::scalar(0.5), t1};
    DominatingPair singular{[](double x, const Param&) { return 0.5 / std::sqrt(x); },
                            [](double, const Param&) { return 0.0; }};
    std::vector<double> radii{1.0, 2.0, 4.0, 8.0};
    auto tc = tail_curve(singular, uniform_path(), uniform_path(), ts, radii);
    for (std::size_t k = 0; k < radii.size(); ++k) CHECK(tc.tails[k] == doctest::Approx(0.5 / radii[k]).epsilon(1e-6));
    CHECK(tc.monotone());
    auto bounded = DominatingPair::constant(2.0);
    auto zero = tail_curve(bounded, uniform_path(), uniform_path(), ts, std::vector<double>{1.5, 3.0});
    CHECK(zero.tails[0] == 0.0);
    CHECK(zero.tails[1] == 0.0);
    // A t-independent pair has the same sup as a single t.
    auto one = tail_curve(singular, uniform_path(), uniform_path(), std::vector<Param>{t0}, radii);
    CHECK(one.tails == tc.tails);
}

TEST_CASE("truncated cost") {
    auto c = make_cost("unbounded_y", {{"coef", 0.25}});
    CHECK_FALSE(c.bounded_by().has_value());
    auto tc = truncate(c, 2.0);
    CHECK(tc.bounded_by() == 2.0);
    CHECK(tc.eval(0.5, 1e-8, t0) == 2.0);
    CHECK(tc.eval(0.5, 0.5, t0) == doctest::Approx(c.eval(0.5, 0.5, t0)));
    auto d = builtin_dominating_pair("unbounded_y", {{"coef", 0.25}});
    REQUIRE(d.has_value());
    CHECK_NOTHROW(d->check(c, ParameterSpace::grid(0, 1, 3), 3));
}

TEST_CASE("Lipschitz and sup bounds") {
    std::vector<Param> ts{t0, t1};
    CHECK(lipschitz_bound(make_cost("abs", {}), ts, 64) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(sup_bound(make_cost("abs", {}), ts) == 1.0);
    CHECK(sup_bound(make_cost("unbounded_x", {}), ts) > 1.0);
}

TEST_CASE("tabulated cost interpolates") {
    const std::string path = "cost_table_test.csv";
    {
        std::ofstream out(path);
        out << "x,y,t,h\n";
        for (double t : {0.0, 1.0})
            for (double x : {0.0, 1.0})
                for (double y : {0.0, 1.0}) out << x << ',' << y << ',' << t << ',' << (x + 2 * y + 4 * t) << '\n';
    }
    auto c = read_tabulated_cost(path);
    std::remove(path.c_str());
    CHECK(c.eval(0.5, 0.25, Param::scalar(0.5)) == doctest::Approx(0.5 + 0.5 + 2.0));
    CHECK(c.bounded_by() == 7.0);
}
