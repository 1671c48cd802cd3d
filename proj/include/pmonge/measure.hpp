#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pmonge {

/// Probability measure on [0,1] with a piecewise-constant density over n
/// uniform cells; cell i covers [i/n, (i+1)/n). Non-atomic by construction.
class GridDensity {
public:
    /// Throws InvalidInput unless weights are finite, nonnegative and sum to 1
    /// within 1e-12.
    explicit GridDensity(std::vector<double> weights);

    /// Rescales nonnegative weights to unit mass.
    static GridDensity normalized(std::vector<double> weights);
    static GridDensity uniform(std::size_t n);
    /// Cell weights from a cell-integral function: weight i = integral(i/n, (i+1)/n).
    static GridDensity from_cell_integrals(std::size_t n,
                                           const std::function<double(double, double)>& integral);

    [[nodiscard]] std::size_t size() const noexcept { return weights_.size(); }
    [[nodiscard]] std::span<const double> weights() const noexcept { return weights_; }
    [[nodiscard]] double weight(std::size_t i) const { return weights_[i]; }
    [[nodiscard]] double density(std::size_t i) const { return weights_[i] * double(size()); }
    [[nodiscard]] double center(std::size_t i) const { return (double(i) + 0.5) / double(size()); }
    /// Cumulative masses at cell edges; n + 1 entries, first 0, last 1.
    [[nodiscard]] std::span<const double> cumulative() const noexcept { return cum_; }

    /// F(x) = mass of [0, x]. Exact: the CDF is piecewise linear.
    [[nodiscard]] double cdf(double x) const;
    /// Q(u) = inf{y : F(y) >= u}.
    [[nodiscard]] double quantile(double u) const;
    /// Mass of [a, b] for 0 <= a <= b <= 1.
    [[nodiscard]] double mass_between(double a, double b) const;
    /// Smallest density over cells in [lo, hi] (cells touching the interval).
    [[nodiscard]] double min_density(double lo = 0.0, double hi = 1.0) const;

    friend bool operator==(const GridDensity& a, const GridDensity& b) {
        return a.weights_ == b.weights_;
    }

private:
    std::vector<double> weights_;
    std::vector<double> cum_;
};

/// Finite atomic measure; total mass may be below 1.
class DiscreteMeasure {
public:
    DiscreteMeasure() = default;
    /// Atoms are (position, mass); positions are sorted, equal positions merged.
    explicit DiscreteMeasure(std::vector<std::pair<double, double>> atoms);

    [[nodiscard]] const std::vector<std::pair<double, double>>& atoms() const noexcept {
        return atoms_;
    }
    [[nodiscard]] double total_mass() const noexcept { return total_; }
    [[nodiscard]] bool empty() const noexcept { return atoms_.empty(); }
    /// Mass of [0, x].
    [[nodiscard]] double cdf(double x) const;
    /// Q(u) = inf{y : F(y) >= u} for u in [0, total_mass].
    [[nodiscard]] double quantile(double u) const;

private:
    std::vector<std::pair<double, double>> atoms_;
    std::vector<double> cum_;
    double total_ = 0.0;
};

/// Histogram of T(x) under m. Each cell is sampled at `k` midpoints of equal
/// sub-cells; the map must take values in [0,1].
GridDensity pushforward(const GridDensity& m, const std::function<double(double)>& map,
                        std::size_t bins, std::size_t k = 8);

/// Total variation with the full-variation convention: ||a - b|| = integral |da - db|.
/// Grids of different sizes are compared on the union of their breakpoints.
double tv_distance(const GridDensity& a, const GridDensity& b);

/// Kantorovich-Rubinshtein distance sup{ sum f_i (p_i - q_i) : |f_i| <= 1, f 1-Lipschitz }
/// for measures on a common sorted support. Solved exactly by dynamic
/// programming over piecewise-linear concave value functions.
double dkr_distance(std::span<const double> support, std::span<const double> p,
                    std::span<const double> q);
/// Grid pair on its cell centers; both grids must have the same size.
double dkr_distance(const GridDensity& a, const GridDensity& b);
/// Discrete pair on the union of their atom positions.
double dkr_distance(const DiscreteMeasure& a, const DiscreteMeasure& b);

/// W1 = integral over [0,1] of |F_a - F_b|, exact for piecewise-linear CDFs.
double w1_distance(const GridDensity& a, const GridDensity& b);

GridDensity read_grid_density_csv(const std::string& path);
std::string grid_density_csv(const GridDensity& m);

}  // namespace pmonge
