#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmonge/measure.hpp"
#include "pmonge/param.hpp"

namespace pmonge {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    [[nodiscard]] double length() const noexcept { return hi - lo; }
    [[nodiscard]] bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

using CostFn = std::function<double(double x, double y, const Param& t)>;
using MeasurePath = std::function<GridDensity(const Param& t)>;

/// Cost family h(x, y, t) >= 0 on [0,1]^2 x T.
class ParametricCost {
public:
    ParametricCost(std::string family_id, CostFn fn, std::map<std::string, double> params = {},
                   std::optional<double> bounded_by = std::nullopt);

    /// Unchecked evaluation for inner loops.
    double operator()(double x, double y, const Param& t) const { return fn_(x, y, t); }
    /// Throws EvaluationError on NaN, negative or infinite output.
    [[nodiscard]] double eval(double x, double y, const Param& t) const;

    [[nodiscard]] const std::string& family_id() const noexcept { return family_id_; }
    [[nodiscard]] const std::map<std::string, double>& params() const noexcept { return params_; }
    [[nodiscard]] std::optional<double> bounded_by() const noexcept { return bounded_by_; }

    /// Probabilistic check of `bounded_by` and of finiteness on `samples`
    /// random (x, y, t) with t drawn from the space's points.
    void check(const ParameterSpace& space, std::uint64_t seed, std::size_t samples = 10000) const;

private:
    std::string family_id_;
    CostFn fn_;
    std::map<std::string, double> params_;
    std::optional<double> bounded_by_;
};

/// Dominating functions h(x,y,t) <= a(x,t) + b(y,t). Infinite values are
/// allowed at isolated points (integrable singularities).
struct DominatingPair {
    std::function<double(double x, const Param& t)> a;
    std::function<double(double y, const Param& t)> b;

    /// a = b = bound / 2; dominates any cost bounded by `bound`.
    static DominatingPair constant(double bound);

    /// Probabilistic check of the domination on `samples` random triples.
    void check(const ParametricCost& cost, const ParameterSpace& space, std::uint64_t seed,
               std::size_t samples = 10000) const;
};

struct TailCurve {
    std::vector<double> radii;
    std::vector<double> tails;

    /// True if tails are nonincreasing within `tol`.
    [[nodiscard]] bool monotone(double tol = 1e-9) const;
};

/// Lattice resolution for sampled oscillation estimates.
struct OscillationGrid {
    std::size_t nx = 1001;
    std::size_t ny = 65;
};

/// Checked evaluation; same contract as ParametricCost::eval.
double eval(const ParametricCost& c, double x, double y, const Param& t);

/// Sampled estimate (from below) of
///   sup |h(x1,y,t) - h(x2,y,t)| over |x1 - x2| <= x_radius, x_i in x_region,
///   y in y_region, t in t_samples.
/// Samples lie on global lattices over [0,1] restricted to the regions, so the
/// estimate is monotone in the radius, the regions and the t-sample set.
double oscillation(const ParametricCost& c, double x_radius, Interval x_region, Interval y_region,
                   std::span<const Param> t_samples, OscillationGrid grid = {});

struct KappaOptions {
    Interval x_region{};
    double initial = 1.0;
    double safety = 0.9;
    double floor = 1e-6;
    std::size_t ny = 33;
    /// Upper bound on x samples per (y, t) at each trial radius.
    std::size_t max_x_points = 4097;
};

/// Largest kappa in {initial, initial/2, ...} whose sampled oscillation is
/// below safety * eps1. The sampling step is kappa / 8. Throws ModulusFailure
/// below the floor.
double kappa_for(const ParametricCost& c, std::span<const Param> t_samples, Interval y_region,
                 double eps1, const KappaOptions& opts = {});
/// Same, sampling t over the ball B(t_center, t_radius) of `space`.
double kappa_for(const ParametricCost& c, const ParameterSpace& space, const Param& t_center,
                 double t_radius, Interval y_region, double eps1, const KappaOptions& opts = {});

/// Oscillation at scale `radius` with the sampling kappa_for uses.
double local_oscillation(const ParametricCost& c, double radius, Interval x_region,
                         Interval y_region, std::span<const Param> t_samples, std::size_t ny,
                         std::size_t max_x_points = 4097);

/// Per-radius sup over t_samples of the tail integrals
///   integral_{a_t >= R} a_t d mu_t + integral_{b_t >= R} b_t d nu_t.
TailCurve tail_curve(const DominatingPair& d, const MeasurePath& mu_path,
                     const MeasurePath& nu_path, std::span<const Param> t_samples,
                     std::span<const double> radii);

/// Smallest N in n_grid with sup_t tail(N/2) < eps/4. Throws TailDivergence
/// if no grid value qualifies.
double truncation_level(const DominatingPair& d, const MeasurePath& mu_path,
                        const MeasurePath& nu_path, std::span<const Param> t_samples, double eps,
                        std::span<const double> n_grid);

/// min(h, level) as a bounded cost.
ParametricCost truncate(const ParametricCost& c, double level);

/// Sampled Lipschitz bound Lip_x + Lip_y from finite differences on the
/// interior lattice {(k + 1/2) / resolution}.
double lipschitz_bound(const ParametricCost& c, std::span<const Param> t_samples,
                       std::size_t resolution);

/// bounded_by when declared, else the sampled maximum on the interior lattice.
double sup_bound(const ParametricCost& c, std::span<const Param> t_samples,
                 std::size_t resolution = 256);

/// Built-in families. Known ids: constant, abs, power, shifted, oscillatory,
/// sqrt_shifted, unbounded_x, unbounded_y. Throws ConfigError on unknown ids.
ParametricCost make_cost(const std::string& family_id, const std::map<std::string, double>& params);
/// Dominating pair shipped with an unbounded family, if any.
std::optional<DominatingPair> builtin_dominating_pair(const std::string& family_id,
                                                      const std::map<std::string, double>& params);

/// Cost tabulated on a rectilinear (x, y, t) grid, CSV columns x,y,t,h,
/// evaluated by trilinear interpolation (t clamped to the tabulated range).
ParametricCost read_tabulated_cost(const std::string& path);

}  // namespace pmonge
