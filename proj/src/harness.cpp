#include "pmonge/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "pmonge/csv.hpp"
#include "pmonge/errors.hpp"
#include "parallel.hpp"

namespace pmonge {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string resolve(const std::string& base, const std::string& path) {
    fs::path p(path);
    if (p.is_relative()) p = fs::path(base) / p;
    return p.string();
}

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw ConfigError("referenced file does not exist: " + path);
}

// Marginal specs must reference existing files; checked recursively.
void check_spec_files(const json& spec, const std::string& base) {
    if (!spec.is_object()) throw ConfigError("marginal spec must be an object");
    const std::string type = spec.value("type", "");
    if (type == "csv") require_file(resolve(base, spec.at("path").get<std::string>()));
    if (type == "mixture") {
        check_spec_files(spec.at("from"), base);
        check_spec_files(spec.at("to"), base);
    }
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& base_dir) {
    Scenario s;
    s.config_text = text;
    s.base_dir = base_dir;
    try {
        const json j = json::parse(text);
        s.name = j.value("name", "scenario");
        s.pipeline = parse_pipeline(j.value("pipeline", "fixed"));
        s.n = j.value("n", std::size_t(256));
        if (j.contains("t_grid")) {
            const auto& g = j.at("t_grid");
            if (g.is_array()) {
                s.t_values = g.get<std::vector<double>>();
                if (s.t_values.empty()) throw ConfigError("t_grid must be nonempty");
            } else {
                s.t_lo = g.value("lo", 0.0);
                s.t_hi = g.value("hi", 1.0);
                s.t_points = g.value("points", std::size_t(17));
            }
        }
        const auto& c = j.at("cost");
        if (c.contains("table")) {
            s.cost_table = resolve(base_dir, c.at("table").get<std::string>());
            require_file(s.cost_table);
        } else {
            s.cost_family = c.at("family").get<std::string>();
            if (c.contains("params")) s.cost_params = c.at("params").get<std::map<std::string, double>>();
        }
        check_spec_files(j.at("mu"), base_dir);
        check_spec_files(j.at("nu"), base_dir);
        s.mu_spec = j.at("mu").dump();
        s.nu_spec = j.at("nu").dump();
        s.eps = j.value("eps", 0.05);
        s.quadrature_k = j.value("quadrature_k", std::size_t(8));
        s.seed = j.value("seed", std::uint64_t(0));
        if (j.contains("support")) {
            auto v = j.at("support").get<std::vector<double>>();
            if (v.size() != 2) throw ConfigError("support must be [lo, hi]");
            s.support = Interval{v[0], v[1]};
        }
        if (j.contains("cover")) {
            s.centers = j.at("cover").value("centers", s.centers);
            s.region_margin = j.at("cover").value("margin", s.region_margin);
        }
        if (j.contains("probe")) {
            const auto& p = j.at("probe");
            if (p.contains("t")) s.probe_t = p.at("t").get<std::vector<double>>();
            s.probe_levels = p.value("levels", s.probe_levels);
            s.probe_samples = p.value("samples", s.probe_samples);
            if (p.contains("taus")) s.taus = p.at("taus").get<std::vector<double>>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed scenario: ") + e.what());
    }
    if (!(s.eps > 0.0) || !std::isfinite(s.eps)) throw ConfigError("eps must be positive");
    if (s.n < 8) throw ConfigError("grid size n must be at least 8");
    if (s.t_values.empty() && s.t_points == 0) throw ConfigError("t_grid must be nonempty");
    if (s.quadrature_k == 0) throw ConfigError("quadrature_k must be positive");
    if (s.centers == 0) throw ConfigError("cover.centers must be positive");
    if (s.taus.empty()) throw ConfigError("probe.taus must be nonempty");
    if (s.support && s.pipeline == Pipeline::full) throw ConfigError("support applies to fixed and target-path only");
    s.workers = default_workers();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open scenario " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str(), fs::path(path).parent_path().string().empty()
                                          ? std::string(".")
                                          : fs::path(path).parent_path().string());
}

namespace {

using Cdf = std::function<double(double, const Param&)>;

Cdf make_cdf(const json& spec, const std::string& base, std::size_t n) {
    const std::string type = spec.value("type", "");
    if (type == "uniform") return [](double x, const Param&) { return x; };
    if (type == "triangular") {
        const double c = spec.value("mode", 0.5);
        if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("triangular mode must lie in [0,1]");
        return [c](double x, const Param&) {
            if (x <= c) return c > 0.0 ? x * x / c : 0.0;
            return 1.0 - (1.0 - x) * (1.0 - x) / (1.0 - c);
        };
    }
    if (type == "linear") {
        const double s = spec.value("slope", 0.0);
        if (std::abs(s) > 2.0) throw ConfigError("linear slope must lie in [-2, 2]");
        return [s](double x, const Param&) { return x + 0.5 * s * (x * x - x); };
    }
    if (type == "step") {
        // Density 1 - a t below 1/2 and 1 + a t above.
        const double a = spec.value("amplitude", 0.5);
        return [a](double x, const Param& t) {
            const double k = a * t.value();
            if (std::abs(k) > 1.0) throw DomainError("step amplitude times t must stay within [-1, 1]");
            return x <= 0.5 ? (1.0 - k) * x : 0.5 * (1.0 - k) + (1.0 + k) * (x - 0.5);
        };
    }
    if (type == "mixture") {
        auto from = make_cdf(spec.at("from"), base, n), to = make_cdf(spec.at("to"), base, n);
        return [from, to](double x, const Param& t) {
            const double w = std::clamp(t.value(), 0.0, 1.0);
            return (1.0 - w) * from(x, t) + w * to(x, t);
        };
    }
    if (type == "csv") {
        auto g = read_grid_density_csv(resolve(base, spec.at("path").get<std::string>()));
        if (g.size() != n) throw ConfigError("CSV marginal has " + std::to_string(g.size()) + " cells, expected n");
        return [g](double x, const Param&) { return g.cdf(x); };
    }
    throw ConfigError("unknown marginal type '" + type + "'");
}

MeasurePath make_path(const std::string& spec_text, const std::string& base, std::size_t n) {
    Cdf F;
    try {
        F = make_cdf(json::parse(spec_text), base, n);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed marginal spec: ") + e.what());
    }
    return [F, n](const Param& t) {
        std::vector<double> w(n);
        double prev = F(0.0, t);
        for (std::size_t i = 0; i < n; ++i) {
            double next = F(double(i + 1) / double(n), t);
            w[i] = std::max(0.0, next - prev);
            prev = next;
        }
        return GridDensity::normalized(std::move(w));
    };
}

}  // namespace

ScenarioModel build_model(const Scenario& s) {
    ScenarioModel m;
    m.space = s.t_values.empty() ? ParameterSpace::grid(s.t_lo, s.t_hi, s.t_points) : ParameterSpace::values(s.t_values);
    if (!s.cost_table.empty()) {
        m.cost = read_tabulated_cost(s.cost_table);
    } else {
        m.cost = make_cost(s.cost_family, s.cost_params);
        m.dominating = builtin_dominating_pair(s.cost_family, s.cost_params);
    }
    m.mu = make_path(s.mu_spec, s.base_dir, s.n);
    m.nu = make_path(s.nu_spec, s.base_dir, s.n);
    return m;
}

MongeMapFamily assemble_scenario(const Scenario& s, const ScenarioModel& m) {
    AssemblyOptions o;
    o.workers = s.workers;
    o.target_centers = s.centers;
    o.region_margin = s.region_margin;
    o.support = s.support;
    o.dominating = m.dominating;
    const auto& ts = m.space.points();
    auto constant = [&](const MeasurePath& p) {
        GridDensity first = p(ts.front());
        for (const auto& t : ts)
            if (!(p(t) == first)) return false;
        return true;
    };
    switch (s.pipeline) {
        case Pipeline::fixed:
            if (!constant(m.mu) || !constant(m.nu)) throw ConfigError("the fixed pipeline needs t-independent marginals");
            return assemble_fixed(m.mu(ts.front()), m.nu(ts.front()), m.cost, m.space, s.eps, o);
        case Pipeline::target_path:
            if (!constant(m.mu)) throw ConfigError("the target-path pipeline needs a t-independent source");
            return assemble_target_path(m.mu(ts.front()), m.nu, m.cost, m.space, s.eps, o);
        case Pipeline::full: return assemble_full(m.mu, m.nu, m.cost, m.space, s.eps, o);
    }
    throw ConfigError("unknown pipeline");
}

double discretization_tolerance(const ParametricCost& h, const ParameterSpace& space, std::size_t n) {
    return lipschitz_bound(h, space.points(), 2 * n) / double(n);
}

std::vector<AuditRow> optimality_audit(const MongeMapFamily& family, const ParametricCost& h, double eps,
                                       double tol_disc, std::size_t k, std::size_t workers) {
    const bool reuse = !family.truncation_level && family.exact_values.size() == family.slices.size() &&
                       h.family_id() == family.cost.family_id();
    std::vector<AuditRow> rows(family.slices.size());
    detail::parallel_for(rows.size(), workers, [&](std::size_t idx) {
        const auto& sl = family.slices[idx];
        AuditRow r;
        r.t = sl.t.value();
        if (reuse) {
            r.exact_value = family.exact_values[idx];
        } else {
            auto C = cost_matrix(h, sl.mu.size(), sl.nu.size(), sl.t);
            r.exact_value = solve_exact(C, sl.mu.weights(), sl.nu.weights()).value;
        }
        r.monge_cost = monge_cost(sl, family.pipeline, h, k);
        r.gap = r.monge_cost - r.exact_value;
        if (idx < family.plan_values.size() && idx < family.exact_values.size())
            r.plan_gap = family.plan_values[idx] - family.exact_values[idx];
        const std::size_t bins = sl.nu.size();
        auto pushed = slice_pushforward(sl, family.pipeline, bins, k);
        r.pushforward_dkr = dkr_distance(pushed, sl.nu);
        r.gap_ok = r.gap <= eps + tol_disc;
        r.lower_ok = r.monge_cost >= r.exact_value - tol_disc;
        r.pushforward_ok = r.pushforward_dkr <= 2.0 / double(bins) + 1.0 / double(k * bins);
        rows[idx] = r;
    });
    return rows;
}

std::vector<ContinuityRow> continuity_probe(const MongeMapFamily& family, const Param& t, std::size_t levels,
                                            std::size_t samples, std::span<const double> taus, std::uint64_t seed) {
    if (samples == 0) throw InvalidInput("continuity probe needs samples");
    const double h = family.space.spacing();
    if (!(h > 0.0) || !std::isfinite(h)) return {};
    const FamilySlice base = family.slice_at(t);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> xs(samples), ys(samples);
    for (std::size_t q = 0; q < samples; ++q) {
        xs[q] = base.mu.quantile((double(q) + unit(rng)) / double(samples));
        ys[q] = evaluate(base, family.pipeline, xs[q]);
    }
    // Step toward the inside of the parameter range.
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& p : family.space.points()) hi = std::max(hi, p.value());
    std::vector<ContinuityRow> rows;
    for (std::size_t k = 1; k <= levels; ++k) {
        const double step = std::ldexp(h, -int(k));
        Param tk = t;
        tk.coords[0] = t.value() + step <= hi + 1e-12 ? t.value() + step : t.value() - step;
        tk.index = -1;
        const FamilySlice sk = family.slice_at(tk);
        std::vector<double> diff(samples);
        for (std::size_t q = 0; q < samples; ++q) diff[q] = std::abs(evaluate(sk, family.pipeline, xs[q]) - ys[q]);
        for (double tau : taus) {
            std::size_t count = 0;
            for (double d : diff) count += d > tau ? 1 : 0;
            rows.push_back({t.value(), tk.value(), k, tau, double(count) / double(samples)});
        }
    }
    return rows;
}

bool continuity_passes(const std::vector<ContinuityRow>& rows, double t, double tau, double limit,
                       std::size_t inversions) {
    std::vector<double> fr;
    for (const auto& r : rows)
        if (r.t == t && r.tau == tau) fr.push_back(r.exceed_fraction);
    if (fr.empty()) return true;
    std::size_t inv = 0;
    for (std::size_t k = 1; k < fr.size(); ++k) inv += fr[k] > fr[k - 1] ? 1 : 0;
    return fr.back() <= limit && inv <= inversions;
}

bool AuditReport::passed() const { return failures().empty(); }

std::vector<std::string> AuditReport::failures() const {
    std::vector<std::string> out;
    for (const auto& r : rows) {
        if (!r.gap_ok) out.push_back("gap " + csv::num(r.gap) + " above eps + tol at t = " + csv::num(r.t));
        if (!r.lower_ok) out.push_back("monge cost below the exact value at t = " + csv::num(r.t));
        if (!r.pushforward_ok)
            out.push_back("pushforward distance " + csv::num(r.pushforward_dkr) + " at t = " + csv::num(r.t));
    }
    if (!continuity_ok) out.push_back("continuity probe exceed fraction did not settle below 1%");
    return out;
}

std::size_t default_workers() {
    if (const char* v = std::getenv("PMONGE_WORKERS")) {
        char* end = nullptr;
        long w = std::strtol(v, &end, 10);
        if (end != v && *end == '\0' && w > 0) return std::size_t(w);
    }
    return 1;
}

RunResult run_scenario(const Scenario& s) {
    const auto start = std::chrono::steady_clock::now();
    ScenarioModel m = build_model(s);
    RunResult res{{}, assemble_scenario(s, m)};
    auto& rep = res.report;
    const auto& fam = res.family;
    rep.scenario = s.name;
    rep.eps = s.eps;
    rep.budget = fam.budget;
    rep.binding_slice = fam.budget.binding();
    rep.truncation_level = fam.truncation_level;
    rep.tol_disc = discretization_tolerance(m.cost, m.space, s.n);
    rep.pushforward_tol = 2.0 / double(s.n) + 1.0 / double(s.quadrature_k * s.n);
    rep.rows = optimality_audit(fam, m.cost, s.eps, rep.tol_disc, s.quadrature_k, s.workers);

    std::vector<Param> probes;
    const auto& pts = m.space.points();
    if (s.probe_t.empty()) {
        if (pts.size() > 2) probes.push_back(pts[pts.size() / 2]);
    } else {
        for (double v : s.probe_t) {
            bool off = false;
            Param p = Param::scalar(v);
            std::size_t k = fam.slice_index(p, &off);
            probes.push_back(off ? p : pts[k]);
        }
    }
    for (const auto& t : probes) {
        auto rows = continuity_probe(fam, t, s.probe_levels, s.probe_samples, s.taus, s.seed);
        rep.continuity_ok = rep.continuity_ok && continuity_passes(rows, t.value(), s.taus.front());
        rep.continuity.insert(rep.continuity.end(), rows.begin(), rows.end());
    }
    rep.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

std::string summary_csv(const std::vector<AuditRow>& rows) {
    std::ostringstream out;
    out << "t,exact_value,monge_cost,gap,pushforward_dkr,plan_gap,gap_ok,lower_ok,pushforward_ok\n";
    for (const auto& r : rows)
        out << csv::num(r.t) << ',' << csv::num(r.exact_value) << ',' << csv::num(r.monge_cost) << ','
            << csv::num(r.gap) << ',' << csv::num(r.pushforward_dkr) << ',' << csv::num(r.plan_gap) << ','
            << int(r.gap_ok) << ',' << int(r.lower_ok) << ',' << int(r.pushforward_ok) << '\n';
    return out.str();
}

std::string continuity_csv(const std::vector<ContinuityRow>& rows) {
    std::ostringstream out;
    out << "t,t_n,level,tau,exceed_fraction\n";
    for (const auto& r : rows)
        out << csv::num(r.t) << ',' << csv::num(r.t_n) << ',' << r.level << ',' << csv::num(r.tau) << ','
            << csv::num(r.exceed_fraction) << '\n';
    return out.str();
}

std::string budget_csv(const EpsilonBudget& b, const std::string& binding) {
    std::ostringstream out;
    out << "slice,allocation,usage,binding\n";
    for (const auto& s : b.slices)
        out << s.name << ',' << csv::num(s.allocation) << ',' << csv::num(s.usage) << ',' << int(s.name == binding)
            << '\n';
    return out.str();
}

std::string map_trace_csv(const MongeMapFamily& family, std::size_t points) {
    std::ostringstream out;
    out << "t,x,y\n";
    if (points < 2) points = 2;
    for (const auto& sl : family.slices)
        for (std::size_t q = 0; q < points; ++q) {
            double x = double(q) / double(points - 1);
            out << csv::num(sl.t.value()) << ',' << csv::num(x) << ',' << csv::num(evaluate(sl, family.pipeline, x))
                << '\n';
        }
    return out.str();
}

void emit_report(const AuditReport& report, const MongeMapFamily& family, const Scenario& s,
                 const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    auto path = [&](const char* f) { return (fs::path(out_dir) / f).string(); };
    csv::write_file(path("config_echo"), s.config_text);
    csv::write_file(path("summary.csv"), summary_csv(report.rows));
    csv::write_file(path("continuity.csv"), continuity_csv(report.continuity));
    csv::write_file(path("budget.csv"), budget_csv(report.budget, report.binding_slice));
    csv::write_file(path("map_trace.csv"), map_trace_csv(family));
    csv::write_file(path("family.csv"), family_csv(family));
    csv::write_file(path("targets.csv"), targets_csv(family));
    if (family.cover) csv::write_file(path("cover.csv"), cover_csv(*family.cover));
}

}  // namespace pmonge
