#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pmonge/cost.hpp"
#include "pmonge/param.hpp"

namespace pmonge {

/// Finite cover of the parameter space by balls B(center, radius), each with a
/// certified oscillation radius kappa and the regions it was certified on.
struct ParameterCover {
    ParameterSpace space;
    std::vector<Param> centers;
    std::vector<double> radii;
    std::vector<double> kappas;
    std::vector<Interval> y_regions;
    std::vector<Interval> x_regions;

    [[nodiscard]] std::size_t size() const noexcept { return centers.size(); }
};

struct CoverMarginals {
    MeasurePath nu_path;
    /// Only needed when x regions are requested.
    MeasurePath mu_path;
};

struct CoverOptions {
    std::size_t target_centers = 5;
    /// Region tails must carry less than eps1 / mass_scale.
    double mass_scale = 1.0;
    double margin = 0.02;
    /// Use Y = [0,1] instead of quantile regions.
    bool full_y = true;
    /// Quantile x regions from mu_t; otherwise X = [0,1].
    bool x_regions = false;
    /// Extra lattice points per axis when sampling t in a ball.
    std::size_t ball_samples = 9;
    KappaOptions kappa{};
};

/// Hat-function cover on a coarsening of the parameter grid. Throws
/// CoverFailure if no stride yields balls whose region checks pass.
ParameterCover build_cover(const ParametricCost& cost, const ParameterSpace& space, double eps1,
                           const CoverMarginals& marginals, const CoverOptions& opts = {});

/// Quantile region [Q(tail) - margin, Q(1 - tail) + margin] clipped to [0,1].
Interval quantile_region(const GridDensity& m, double tail, double margin);

/// Normalized hat weight of center alpha at t.
double psi(const ParameterCover& cover, std::size_t alpha, const Param& t);
/// sum_alpha kappa_alpha psi_alpha(t).
double delta(const ParameterCover& cover, const Param& t);
/// Active center with the largest kappa; ties go to the smallest index.
std::size_t select_alpha(const ParameterCover& cover, const Param& t);

/// Interval partition of [0,1] into cells of length delta_tilde; the last
/// cell is clipped at 1 and includes it.
struct CellPartition {
    Param t;
    double delta_tilde = 1.0;
    std::size_t count = 1;

    /// Cell j for j = 1..count.
    [[nodiscard]] Interval cell(std::size_t j) const;
    /// Index of the cell containing s in [0,1].
    [[nodiscard]] std::size_t locate(double s) const;
};

CellPartition cells(double delta_tilde, const Param& t);

/// CSV `alpha,t_center,radius,kappa,y_lo,y_hi`.
std::string cover_csv(const ParameterCover& cover);

}  // namespace pmonge
