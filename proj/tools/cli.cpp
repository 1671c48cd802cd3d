#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "pmonge/csv.hpp"
#include "pmonge/errors.hpp"
#include "pmonge/harness.hpp"

namespace pmonge {

namespace fs = std::filesystem;

namespace {

enum Exit { ok = 0, audit_failed = 1, config_failed = 2, assembly_failed = 3 };

// Relative paths in an echoed config are tried against the run directory
// first, then the working directory.
Scenario scenario_from_dir(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "config_echo", std::ios::binary);
    if (!in) throw ConfigError("no config_echo in " + dir);
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse_scenario(text.str(), dir);
    } catch (const ConfigError&) {
        return parse_scenario(text.str(), ".");
    }
}

void print_failures(const AuditReport& r, std::ostream& err) {
    for (const auto& f : r.failures()) err << "audit: " << f << '\n';
}

int cmd_run(const std::string& config, std::optional<std::string> out_dir, std::optional<std::size_t> workers,
            std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err) {
    Scenario s;
    try {
        s = load_scenario(config);
        if (workers) {
            if (*workers == 0) throw ConfigError("--workers must be positive");
            s.workers = *workers;
        }
        if (seed) s.seed = *seed;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_failed;
    }
    const std::string dir = out_dir ? *out_dir : (fs::path("out") / s.name).string();
    try {
        RunResult r = run_scenario(s);
        emit_report(r.report, r.family, s, dir);
        out << "scenario " << s.name << " (" << to_string(s.pipeline) << "): " << r.report.rows.size()
            << " t-points, binding slice " << r.report.binding_slice << ", " << csv::num(r.report.wall_clock)
            << " s\n";
        double worst = 0.0;
        for (const auto& row : r.report.rows) worst = std::max(worst, row.gap);
        out << "max gap " << csv::num(worst) << ", allowed " << csv::num(s.eps + r.report.tol_disc) << '\n';
        if (!r.report.passed()) {
            print_failures(r.report, err);
            return audit_failed;
        }
        out << "PASS\n";
        return ok;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_failed;
    } catch (const BudgetExhausted& e) {
        err << "budget exhausted in slice '" << e.slice() << "': " << e.what() << '\n';
        EpsilonBudget b = EpsilonBudget::for_pipeline(s.pipeline, s.eps);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (!ec) csv::write_file((fs::path(dir) / "budget.csv").string(), budget_csv(b, e.slice()));
        return audit_failed;
    } catch (const std::exception& e) {
        err << "assembly error: " << e.what() << '\n';
        return assembly_failed;
    }
}

int cmd_audit(const std::string& dir, std::ostream& out, std::ostream& err) {
    Scenario s;
    ScenarioModel m;
    try {
        s = scenario_from_dir(dir);
        m = build_model(s);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_failed;
    }
    try {
        MongeMapFamily fam;
        fam.pipeline = s.pipeline;
        fam.space = m.space;
        fam.mu_path = m.mu;
        fam.nu_path = m.nu;
        fam.slices = load_slices((fs::path(dir) / "family.csv").string(), (fs::path(dir) / "targets.csv").string(),
                                 s.pipeline, m.space, m.mu, m.nu);
        const double tol = discretization_tolerance(m.cost, m.space, s.n);
        auto rows = optimality_audit(fam, m.cost, s.eps, tol, s.quadrature_k, s.workers);
        out << summary_csv(rows);
        AuditReport r;
        r.rows = rows;
        if (!r.passed()) {
            print_failures(r, err);
            return audit_failed;
        }
        return ok;
    } catch (const std::exception& e) {
        err << "audit error: " << e.what() << '\n';
        return assembly_failed;
    }
}

int cmd_probe(const std::string& dir, double t, std::ostream& out, std::ostream& err) {
    Scenario s;
    try {
        s = scenario_from_dir(dir);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_failed;
    }
    try {
        ScenarioModel m = build_model(s);
        MongeMapFamily fam = assemble_scenario(s, m);
        bool off = false;
        Param p = Param::scalar(t);
        std::size_t k = fam.slice_index(p, &off);
        if (!off) p = fam.space.points()[k];
        auto rows = continuity_probe(fam, p, s.probe_levels, s.probe_samples, s.taus, s.seed);
        out << continuity_csv(rows);
        return continuity_passes(rows, p.value(), s.taus.front()) ? ok : audit_failed;
    } catch (const BudgetExhausted& e) {
        err << "budget exhausted in slice '" << e.slice() << "': " << e.what() << '\n';
        return audit_failed;
    } catch (const std::exception& e) {
        err << "probe error: " << e.what() << '\n';
        return assembly_failed;
    }
}

std::vector<double> read_weights(const std::string& path) {
    auto t = csv::read(path);
    const std::size_t ci = t.column("cell_index"), cw = t.column("weight");
    std::vector<double> w;
    for (const auto& row : t.rows) {
        long i = csv::to_long(row[ci], path);
        if (i < 0) throw InvalidInput(path + ": negative cell index");
        if (std::size_t(i) >= w.size()) w.resize(std::size_t(i) + 1, 0.0);
        w[std::size_t(i)] += csv::to_double(row[cw], path);
    }
    return w;
}

int cmd_oracle(const std::string& cost_path, const std::string& mu_path, const std::string& nu_path,
               std::ostream& out, std::ostream& err) {
    try {
        auto mu = read_weights(mu_path), nu = read_weights(nu_path);
        auto t = csv::read(cost_path);
        const std::size_t ci = t.column("i"), cj = t.column("j"), cc = t.column("cost");
        std::vector<double> v(mu.size() * nu.size(), 0.0);
        std::vector<char> seen(v.size(), 0);
        for (const auto& row : t.rows) {
            long i = csv::to_long(row[ci], cost_path), j = csv::to_long(row[cj], cost_path);
            if (i < 0 || j < 0 || std::size_t(i) >= mu.size() || std::size_t(j) >= nu.size())
                throw InvalidInput(cost_path + ": index out of range");
            v[std::size_t(i) * nu.size() + std::size_t(j)] = csv::to_double(row[cc], cost_path);
            seen[std::size_t(i) * nu.size() + std::size_t(j)] = 1;
        }
        for (char c : seen)
            if (!c) throw InvalidInput(cost_path + ": cost matrix is incomplete");
        auto res = solve_exact(CostMatrix(mu.size(), nu.size(), std::move(v)), mu, nu);
        out << "value," << csv::num(res.value) << '\n' << plan_csv(res.plan);
        return ok;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_failed;
    } catch (const std::exception& e) {
        err << "oracle error: " << e.what() << '\n';
        return config_failed;
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Parametric epsilon-optimal Monge map families"};
    app.require_subcommand(1);

    std::string config, dir, cost_csv, mu_csv, nu_csv;
    std::optional<std::string> out_dir;
    std::optional<std::size_t> workers;
    std::optional<std::uint64_t> seed;
    double probe_t = 0.0;

    auto* run = app.add_subcommand("run", "assemble, audit and report a scenario");
    run->add_option("config", config, "scenario JSON")->required();
    run->add_option("--out", out_dir, "report directory (default out/<name>)");
    run->add_option("--workers", workers, "worker threads (default $PMONGE_WORKERS or 1)");
    run->add_option("--seed", seed, "probe sampling seed");

    auto* audit = app.add_subcommand("audit", "re-audit a dumped family");
    audit->add_option("family-dir", dir, "directory written by run")->required();

    auto* probe = app.add_subcommand("probe", "continuity probe at one t");
    probe->add_option("family-dir", dir, "directory written by run")->required();
    probe->add_option("--t", probe_t, "parameter value")->required();

    auto* oracle = app.add_subcommand("oracle", "exact transport value and plan");
    oracle->add_option("cost", cost_csv, "CSV i,j,cost")->required();
    oracle->add_option("mu", mu_csv, "CSV cell_index,weight")->required();
    oracle->add_option("nu", nu_csv, "CSV cell_index,weight")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, e2;
        int code = app.exit(e, o, e2);
        out << o.str();
        err << e2.str();
        return code == 0 ? ok : config_failed;
    }
    if (*run) return cmd_run(config, out_dir, workers, seed, out, err);
    if (*audit) return cmd_audit(dir, out, err);
    if (*probe) return cmd_probe(dir, probe_t, out, err);
    return cmd_oracle(cost_csv, mu_csv, nu_csv, out, err);
}

}  // namespace pmonge
