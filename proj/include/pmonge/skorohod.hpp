#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pmonge/cover.hpp"
#include "pmonge/measure.hpp"

namespace pmonge {

/// Monotone map from [0, w] onto the support of a target of mass w whose
/// pushforward of Lebesgue measure is the target. The target is either a
/// histogram on uniform bins of [0,1] (piecewise-linear CDF) or a set of atoms.
class QuantileSkorohodMap {
public:
    /// Histogram target: `masses[k]` is the mass of bin first_bin + k out of `bins`.
    QuantileSkorohodMap(std::size_t bins, std::size_t first_bin, std::vector<double> masses,
                        double domain_length);
    /// Atomic target.
    QuantileSkorohodMap(const DiscreteMeasure& target, double domain_length);

    /// Throws EmptyTarget when the target or the domain has zero mass and
    /// DomainError when u lies outside [0, w].
    double operator()(double u) const;

    [[nodiscard]] double mass() const noexcept { return mass_; }
    [[nodiscard]] double domain_length() const noexcept { return w_; }
    [[nodiscard]] bool atomic() const noexcept { return atomic_; }
    [[nodiscard]] std::size_t bins() const noexcept { return bins_; }
    [[nodiscard]] std::size_t first_bin() const noexcept { return first_; }
    /// Bin masses of a histogram target, starting at first_bin().
    [[nodiscard]] std::vector<double> bin_masses() const;

private:
    bool atomic_ = false;
    std::size_t bins_ = 0;
    std::size_t first_ = 0;
    std::vector<double> cum_;  // histogram: bin edges; atoms: running mass
    std::vector<double> pos_;  // atom positions
    double mass_ = 0.0;
    double w_ = 0.0;
};

double xi(const QuantileSkorohodMap& map, double u);

/// s - (j - 1) * delta_tilde; throws WrongCell if s is not in cell j.
double cell_cdf_offset(double s, std::size_t j, const CellPartition& partition);
/// gamma-mass of [cell_lo, s]; throws WrongCell if s is not in cell j.
double weighted_cell_cdf_offset(double s, std::size_t j, const CellPartition& partition,
                                const GridDensity& gamma);

/// CSV `u,y` sampled at `points` evenly spaced u in [0, w].
std::string quantile_table_csv(const QuantileSkorohodMap& map, std::size_t points);

}  // namespace pmonge
