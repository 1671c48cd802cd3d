#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmonge/monge.hpp"

namespace pmonge {

/// Parsed scenario configuration (JSON). Marginal specs stay as JSON text and
/// are turned into measure paths by build_model.
struct Scenario {
    std::string name;
    Pipeline pipeline = Pipeline::fixed;
    std::size_t n = 256;
    double t_lo = 0.0;
    double t_hi = 1.0;
    std::size_t t_points = 17;
    std::vector<double> t_values;  // overrides lo/hi/points when nonempty
    std::string cost_family;
    std::map<std::string, double> cost_params;
    std::string cost_table;  // tabulated cost CSV, resolved path
    std::string mu_spec;
    std::string nu_spec;
    double eps = 0.05;
    std::size_t quadrature_k = 8;
    std::uint64_t seed = 0;
    std::optional<Interval> support;
    std::size_t centers = 5;
    double region_margin = 0.02;
    std::vector<double> probe_t;  // default: the interior grid point nearest the middle
    std::size_t probe_levels = 6;
    std::size_t probe_samples = 256;
    std::vector<double> taus{0.01, 0.001};
    std::size_t workers = 1;
    std::string config_text;  // verbatim input
    std::string base_dir;
};

/// Throws ConfigError on malformed or invalid configuration.
Scenario parse_scenario(const std::string& text, const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);

struct ScenarioModel {
    ParameterSpace space = ParameterSpace::grid(0.0, 0.0, 1);
    ParametricCost cost{"unset", [](double, double, const Param&) { return 0.0; }};
    MeasurePath mu;
    MeasurePath nu;
    std::optional<DominatingPair> dominating;
};

ScenarioModel build_model(const Scenario& s);
MongeMapFamily assemble_scenario(const Scenario& s, const ScenarioModel& m);

struct AuditRow {
    double t = 0.0;
    double exact_value = 0.0;
    double monge_cost = 0.0;
    double gap = 0.0;
    double pushforward_dkr = 0.0;
    double plan_gap = 0.0;
    bool gap_ok = false;
    bool lower_ok = false;
    bool pushforward_ok = false;
};

struct ContinuityRow {
    double t = 0.0;
    double t_n = 0.0;
    std::size_t level = 0;
    double tau = 0.0;
    double exceed_fraction = 0.0;
};

struct AuditReport {
    std::string scenario;
    std::vector<AuditRow> rows;
    std::vector<ContinuityRow> continuity;
    EpsilonBudget budget;
    std::string binding_slice;
    double eps = 0.0;
    double tol_disc = 0.0;
    double pushforward_tol = 0.0;
    std::optional<double> truncation_level;
    bool continuity_ok = true;
    double wall_clock = 0.0;

    [[nodiscard]] bool passed() const;
    /// Human-readable reasons for failure, empty on success.
    [[nodiscard]] std::vector<std::string> failures() const;
};

/// Per-t gaps against the exact transport value under `h` (the original cost
/// when the family was built for a truncation) plus the pushforward check.
/// A row passes when gap <= eps + tol_disc, monge cost >= exact - tol_disc and
/// the pushforward distance is at most 2/n + 1/(k n).
std::vector<AuditRow> optimality_audit(const MongeMapFamily& family, const ParametricCost& h, double eps,
                                       double tol_disc, std::size_t quadrature_k, std::size_t workers = 1);

/// Exceed fractions mu_t{|T_{t_k}(x) - T_t(x)| > tau} for t_k = t + 2^-k h,
/// k = 1..levels, over mu_t-stratified samples.
std::vector<ContinuityRow> continuity_probe(const MongeMapFamily& family, const Param& t, std::size_t levels,
                                            std::size_t samples, std::span<const double> taus, std::uint64_t seed);

/// True when the exceed fraction at `tau` ends at or below `limit` and
/// increases at most `inversions` times across levels.
bool continuity_passes(const std::vector<ContinuityRow>& rows, double t, double tau, double limit = 0.01,
                       std::size_t inversions = 1);

/// C_L / n with C_L the sampled Lipschitz bound of h on a 2n lattice.
double discretization_tolerance(const ParametricCost& h, const ParameterSpace& space, std::size_t n);

struct RunResult {
    AuditReport report;
    MongeMapFamily family;
};

/// Assemble, audit and probe; throws on configuration or assembly errors.
RunResult run_scenario(const Scenario& s);

/// Writes summary.csv, continuity.csv, map_trace.csv, budget.csv, config_echo,
/// family.csv, targets.csv and cover.csv. Throws IoError with the path.
void emit_report(const AuditReport& report, const MongeMapFamily& family, const Scenario& s,
                 const std::string& out_dir);

std::string summary_csv(const std::vector<AuditRow>& rows);
std::string continuity_csv(const std::vector<ContinuityRow>& rows);
std::string budget_csv(const EpsilonBudget& budget, const std::string& binding);
std::string map_trace_csv(const MongeMapFamily& family, std::size_t points = 65);

/// Worker count from PMONGE_WORKERS, else 1.
std::size_t default_workers();

}  // namespace pmonge
