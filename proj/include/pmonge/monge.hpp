#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmonge/cost.hpp"
#include "pmonge/cover.hpp"
#include "pmonge/kantorovich.hpp"
#include "pmonge/measure.hpp"
#include "pmonge/param.hpp"
#include "pmonge/skorohod.hpp"

namespace pmonge {

enum class Pipeline { fixed, target_path, full };

std::string to_string(Pipeline p);
/// Accepts "fixed", "target-path", "full"; throws ConfigError otherwise.
Pipeline parse_pipeline(const std::string& s);

struct BudgetSlice {
    std::string name;
    double allocation = 0.0;
    double usage = 0.0;
};

/// Split of eps into eps1 = eps / 5, eps / 6 or eps / 7 and named slices of eps1.
struct EpsilonBudget {
    double eps = 0.0;
    double eps1 = 0.0;
    Pipeline split_rule = Pipeline::fixed;
    double eps_K = 0.0;
    std::vector<BudgetSlice> slices;

    static EpsilonBudget for_pipeline(Pipeline p, double eps);

    /// Sets the usage of a named slice; throws InvalidInput for unknown names.
    void record(const std::string& name, double usage);
    [[nodiscard]] const BudgetSlice& slice(const std::string& name) const;
    /// Slice with the largest usage / allocation; "discretization" when no
    /// slice has positive usage.
    [[nodiscard]] std::string binding() const;
};

/// Source measure with its CDF and quantile and a density floor on the
/// declared support.
struct SourceParametrization {
    GridDensity mu;
    Interval support{};
    double d_min = 0.0;

    /// Throws InvalidInput when the density vanishes somewhere on the support.
    static SourceParametrization make(GridDensity mu, Interval support = {});

    [[nodiscard]] double cdf(double x) const { return mu.cdf(x); }
    [[nodiscard]] double quantile(double s) const { return mu.quantile(s); }
};

/// Column masses of the plan rows falling in each cell. Row i covers
/// [row_breaks[i], row_breaks[i + 1]] in the cell coordinate and is split
/// proportionally by overlap length. A cell may be a union of intervals.
/// The returned maps have domain length equal to the summed interval lengths,
/// or to their own mass when `domain_is_mass`.
std::vector<QuantileSkorohodMap> project_cell_targets(const Plan& plan, std::span<const double> row_breaks,
                                                      const std::vector<std::vector<Interval>>& cells,
                                                      bool domain_is_mass = false);

/// Map data at one parameter value.
struct FamilySlice {
    Param t;
    double delta = 0.0;
    double delta_tilde = 0.0;
    std::size_t alpha = 0;
    Interval x_region{};
    Interval y_region{};
    /// Cell j covers [cell_lo[j], cell_hi[j]) in the cell coordinate
    /// (source CDF for fixed and target-path, x itself for full).
    std::vector<double> cell_lo;
    std::vector<double> cell_hi;
    std::vector<QuantileSkorohodMap> targets;
    /// Cell coordinates outside `core` go through the remainder map.
    Interval core{};
    std::optional<QuantileSkorohodMap> remainder;
    GridDensity mu = GridDensity::uniform(1);
    GridDensity nu = GridDensity::uniform(1);
    /// Largest sampled oscillation of the cost within one cell.
    double cell_oscillation = 0.0;
};

struct AssemblyOptions {
    std::size_t workers = 1;
    bool warm_start = true;
    std::size_t target_centers = 5;
    double region_margin = 0.02;
    KappaOptions kappa{};
    /// Declared source support; fixed and target-path only.
    std::optional<Interval> support;
    /// Required when the cost has no bound.
    std::optional<DominatingPair> dominating;
    /// Candidate truncation levels, increasing.
    std::vector<double> truncation_levels;
};

struct MongeMapFamily {
    Pipeline pipeline = Pipeline::fixed;
    EpsilonBudget budget;
    ParameterSpace space = ParameterSpace::grid(0.0, 0.0, 1);
    std::optional<ParameterCover> cover;
    std::vector<FamilySlice> slices;
    /// Cost the maps were built for (min(h, N) after truncation).
    ParametricCost cost{"unset", [](double, double, const Param&) { return 0.0; }};
    std::optional<double> truncation_level;
    double mass_scale = 1.0;
    double d_min = 0.0;
    Interval support{};
    MeasurePath mu_path;
    MeasurePath nu_path;
    std::vector<double> plan_values;
    std::vector<double> exact_values;
    std::vector<EntropicPotentials> potentials;

    /// Slice nearest to t; sets *off_grid when t is not a grid point.
    [[nodiscard]] std::size_t slice_index(const Param& t, bool* off_grid = nullptr) const;
    /// Fresh slice at any covered t, solving its plan warm-started from the
    /// nearest grid potentials. Needs the marginal paths.
    [[nodiscard]] FamilySlice slice_at(const Param& t) const;
};

MongeMapFamily assemble_fixed(const GridDensity& mu, const GridDensity& nu, const ParametricCost& cost,
                              const ParameterSpace& space, double eps, const AssemblyOptions& opts = {});
MongeMapFamily assemble_target_path(const GridDensity& mu, const MeasurePath& nu_path, const ParametricCost& cost,
                                    const ParameterSpace& space, double eps, const AssemblyOptions& opts = {});
MongeMapFamily assemble_full(const MeasurePath& mu_path, const MeasurePath& nu_path, const ParametricCost& cost,
                             const ParameterSpace& space, double eps, const AssemblyOptions& opts = {});

struct Evaluation {
    double y = 0.0;
    bool off_grid = false;
};

double evaluate(const FamilySlice& slice, Pipeline pipeline, double x);
/// Nearest-grid evaluation; the flag reports whether t was off the grid.
Evaluation evaluate(const MongeMapFamily& family, const Param& t, double x);

/// Nodes (x, source mass) for integrating against the slice's source: the
/// source grid is split at every map cell edge and each piece gets k
/// midpoints of equal mass.
std::vector<std::pair<double, double>> quadrature_nodes(const FamilySlice& slice, Pipeline pipeline,
                                                        std::size_t k = 8);
/// Histogram of T(x) under the slice's source, on `bins` uniform cells.
GridDensity slice_pushforward(const FamilySlice& slice, Pipeline pipeline, std::size_t bins, std::size_t k = 8);

/// integral of h(x, T(x)) against the slice's source over quadrature_nodes.
double monge_cost(const FamilySlice& slice, Pipeline pipeline, const ParametricCost& h, std::size_t k = 8);
double monge_cost(const MongeMapFamily& family, const Param& t, std::size_t k = 8);

/// CSV `t,j,cell_lo,cell_hi,mass`. Row j = 0 is the remainder cell, the
/// complement of [cell_lo, cell_hi).
std::string family_csv(const MongeMapFamily& family);
/// CSV `t,j,bin,mass` for positive target bin masses.
std::string targets_csv(const MongeMapFamily& family);
/// Rebuilds slices from the two dumps; the sources come from mu_path.
std::vector<FamilySlice> load_slices(const std::string& family_path, const std::string& targets_path,
                                     Pipeline pipeline, const ParameterSpace& space, const MeasurePath& mu_path,
                                     const MeasurePath& nu_path);

}  // namespace pmonge
