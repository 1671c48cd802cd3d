#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "pmonge/csv.hpp"
#include "pmonge/errors.hpp"
#include "pmonge/harness.hpp"

using namespace pmonge;
namespace fs = std::filesystem;

#ifndef PMONGE_SCENARIO_DIR
#define PMONGE_SCENARIO_DIR "scenarios"
#endif

namespace {

struct CliRun {
    int code;
    std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "pmonge");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = run_cli(int(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("pmonge_test_" + name);
    fs::remove_all(p);
    return p;
}

fs::path write_config(const std::string& name, const std::string& text) {
    fs::path p = fs::temp_directory_path() / ("pmonge_cfg_" + name + ".json");
    std::ofstream(p) << text;
    return p;
}

std::string scenario(const std::string& name) { return std::string(PMONGE_SCENARIO_DIR) + "/" + name + ".json"; }

const char* small_power = R"({
  "name": "small_power", "pipeline": "fixed", "n": 32,
  "t_grid": {"lo": 0, "hi": 1, "points": 5},
  "cost": {"family": "power", "params": {"p0": 1, "p1": 1}},
  "mu": {"type": "uniform"}, "nu": {"type": "triangular", "mode": 0.3},
  "eps": 0.1, "seed": 3, "probe": {"levels": 3, "samples": 64}
})";

}  // namespace

TEST_CASE("scenario parsing rejects bad input") {
    CHECK_THROWS_AS(parse_scenario("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_scenario(R"({"cost": {"family": "abs"}, "mu": {"type": "uniform"}, "nu": {"type": "uniform"}, "eps": 0})"), ConfigError);
    CHECK_THROWS_AS(parse_scenario(R"({"cost": {"family": "abs"}, "mu": {"type": "uniform"}, "nu": {"type": "uniform"}, "n": 4})"), ConfigError);
    CHECK_THROWS_AS(parse_scenario(R"({"cost": {"family": "abs"}, "mu": {"type": "csv", "path": "missing.csv"}, "nu": {"type": "uniform"}})"), ConfigError);
    CHECK_THROWS_AS(parse_scenario(R"({"pipeline": "diagonal", "cost": {"family": "abs"}, "mu": {"type": "uniform"}, "nu": {"type": "uniform"}})"), ConfigError);
    auto s = parse_scenario(small_power);
    CHECK(s.n == 32);
    CHECK(s.t_points == 5);
    CHECK(s.cost_params.at("p0") == 1.0);
}

TEST_CASE("empty t-grid is rejected before any output") {
    auto cfg = write_config("empty", R"({"name": "empty", "t_grid": [], "cost": {"family": "abs"},
        "mu": {"type": "uniform"}, "nu": {"type": "uniform"}})");
    auto out = scratch("empty");
    auto r = cli({"run", cfg.string(), "--out", out.string()});
    CHECK(r.code == 2);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("usage errors") {
    CHECK(cli({}).code == 2);
    CHECK(cli({"run"}).code == 2);
    CHECK(cli({"run", "/nonexistent/config.json"}).code == 2);
}

TEST_CASE("identity scenario passes with gaps at the discretization floor") {
    auto out = scratch("identity");
    auto r = cli({"run", scenario("identity"), "--out", out.string()});
    CHECK(r.code == 0);
    for (const char* f : {"summary.csv", "continuity.csv", "map_trace.csv", "config_echo", "budget.csv", "family.csv", "targets.csv"})
        CHECK(fs::exists(out / f));
    CHECK(slurp(out / "config_echo") == slurp(scenario("identity")));
    auto table = csv::read((out / "summary.csv").string());
    const double tol = 2.0 / 256;  // Lipschitz bound of |x - y| over n
    for (const auto& row : table.rows) {
        const double gap = std::stod(row[table.column("gap")]);
        const double recomputed = std::stod(row[table.column("monge_cost")]) - std::stod(row[table.column("exact_value")]);
        CHECK(gap <= tol);
        CHECK(std::abs(gap - recomputed) <= 1e-12);
    }
    auto cont = csv::read((out / "continuity.csv").string());
    for (const auto& row : cont.rows) CHECK(std::stod(row[cont.column("exceed_fraction")]) == 0.0);

    auto a = cli({"audit", out.string()});
    CHECK(a.code == 0);
    CHECK(a.out.rfind("t,exact_value,monge_cost,gap", 0) == 0);
    auto p = cli({"probe", out.string(), "--t", "0.5"});
    CHECK(p.code == 0);
}

TEST_CASE("runs are byte-identical for a fixed seed") {
    auto cfg = write_config("small_power", small_power);
    auto a = scratch("det_a"), b = scratch("det_b");
    CHECK(cli({"run", cfg.string(), "--out", a.string()}).code == 0);
    CHECK(cli({"run", cfg.string(), "--out", b.string(), "--workers", "2"}).code == 0);
    for (const char* f : {"summary.csv", "continuity.csv", "map_trace.csv", "budget.csv", "family.csv", "targets.csv", "cover.csv"})
        CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
}

TEST_CASE("deliberate failure exits 1 and names the binding slice") {
    auto out = scratch("failure");
    auto r = cli({"run", scenario("failure"), "--out", out.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("oscillation") != std::string::npos);
    auto budget = csv::read((out / "budget.csv").string());
    bool named = false;
    for (const auto& row : budget.rows)
        if (row[budget.column("binding")] == "1") named = row[budget.column("slice")] == "oscillation";
    CHECK(named);
}

TEST_CASE("oracle subcommand") {
    auto dir = scratch("oracle");
    fs::create_directories(dir);
    std::ofstream(dir / "cost.csv") << "i,j,cost\n0,0,0\n0,1,1\n1,0,1\n1,1,0\n";
    std::ofstream(dir / "mu.csv") << "cell_index,weight\n0,0.5\n1,0.5\n";
    std::ofstream(dir / "nu.csv") << "cell_index,weight\n0,0.25\n1,0.75\n";
    auto r = cli({"oracle", (dir / "cost.csv").string(), (dir / "mu.csv").string(), (dir / "nu.csv").string()});
    CHECK(r.code == 0);
    CHECK(r.out == "value,0.25\ni,j,mass\n0,0,0.25\n0,1,0.25\n1,1,0.5\n");
    std::ofstream(dir / "bad.csv") << "i,j,cost\n0,0,0\n";
    CHECK(cli({"oracle", (dir / "bad.csv").string(), (dir / "mu.csv").string(), (dir / "nu.csv").string()}).code == 2);
}

TEST_CASE("continuity probe edge cases") {
    auto s = parse_scenario(small_power);
    auto m = build_model(s);
    auto fam = assemble_scenario(s, m);
    std::vector<double> taus{2.0};
    auto rows = continuity_probe(fam, fam.space.points()[2], 3, 64, taus, 1);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) CHECK(r.exceed_fraction == 0.0);
    CHECK(continuity_passes(rows, fam.space.points()[2].value(), 2.0));
    std::vector<ContinuityRow> bad{{0.5, 0.6, 1, 0.01, 0.0}, {0.5, 0.55, 2, 0.01, 0.2}};
    CHECK_FALSE(continuity_passes(bad, 0.5, 0.01));
}

TEST_CASE("single-cell convex scenario is exact up to discretization") {
    auto s = load_scenario(scenario("convex_single_cell"));
    s.n = 64;
    auto res = run_scenario(s);
    for (const auto& sl : res.family.slices) CHECK(sl.targets.size() == 1);
    for (const auto& row : res.report.rows) CHECK(row.gap <= res.report.tol_disc);
}

TEST_CASE("concave shifted cost stays within eps") {
    auto s = load_scenario(scenario("concave_shift"));
    s.n = 64;
    s.t_points = 5;
    auto res = run_scenario(s);
    for (const auto& row : res.report.rows) CHECK(row.gap <= s.eps + res.report.tol_disc);
    CHECK(res.report.passed());
}

TEST_CASE("power-cost fixed scenario") {
    auto out = scratch("power_fixed");
    auto r = cli({"run", scenario("power_fixed"), "--out", out.string()});
    CHECK(r.code == 0);
    auto table = csv::read((out / "summary.csv").string());
    CHECK(table.rows.size() == 17);
    for (const auto& row : table.rows) CHECK(std::stod(row[table.column("gap")]) <= 0.05 + 4.0 / 256);
}
