#include "pmonge/skorohod.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pmonge/csv.hpp"
#include "pmonge/errors.hpp"

namespace pmonge {

QuantileSkorohodMap::QuantileSkorohodMap(std::size_t bins, std::size_t first_bin, std::vector<double> masses,
                                         double domain_length)
    : bins_(bins), first_(first_bin), w_(domain_length) {
    if (bins == 0 || first_bin + masses.size() > bins) throw InvalidInput("histogram bins out of range");
    if (!(domain_length >= 0.0)) throw InvalidInput("domain length must be nonnegative");
    cum_.resize(masses.size() + 1, 0.0);
    for (std::size_t k = 0; k < masses.size(); ++k) {
        if (!(masses[k] >= 0.0) || !std::isfinite(masses[k])) throw InvalidInput("bin masses must be finite and >= 0");
        cum_[k + 1] = cum_[k] + masses[k];
    }
    mass_ = cum_.back();
}

QuantileSkorohodMap::QuantileSkorohodMap(const DiscreteMeasure& target, double domain_length)
    : atomic_(true), w_(domain_length) {
    if (!(domain_length >= 0.0)) throw InvalidInput("domain length must be nonnegative");
    cum_.push_back(0.0);
    for (const auto& [y, m] : target.atoms()) {
        pos_.push_back(y);
        cum_.push_back(cum_.back() + m);
    }
    mass_ = cum_.back();
}

std::vector<double> QuantileSkorohodMap::bin_masses() const {
    std::vector<double> out;
    if (atomic_) return out;
    for (std::size_t k = 1; k < cum_.size(); ++k) out.push_back(cum_[k] - cum_[k - 1]);
    return out;
}

double QuantileSkorohodMap::operator()(double u) const {
    if (!(mass_ > 0.0) || !(w_ > 0.0)) throw EmptyTarget("Skorohod map of an empty cell");
    if (!(u >= -1e-12 && u <= w_ * (1.0 + 1e-12) + 1e-12))
        throw DomainError("Skorohod argument " + csv::num(u) + " outside [0, " + csv::num(w_) + "]");
    const double v = std::clamp(u / w_, 0.0, 1.0) * mass_;
    // First index k >= 1 with cum_[k] >= v; the bin or atom is k - 1.
    auto it = std::lower_bound(cum_.begin() + 1, cum_.end(), v);
    if (v <= 0.0) it = std::upper_bound(cum_.begin() + 1, cum_.end(), 0.0);
    if (it == cum_.end()) --it;
    const std::size_t k = std::size_t(it - cum_.begin()) - 1;
    if (atomic_) return pos_[k];
    const double bin_mass = cum_[k + 1] - cum_[k];
    const double frac = bin_mass > 0.0 ? std::clamp((v - cum_[k]) / bin_mass, 0.0, 1.0) : 0.0;
    return (double(first_ + k) + frac) / double(bins_);
}

double xi(const QuantileSkorohodMap& map, double u) { return map(u); }

namespace {

Interval checked_cell(double s, std::size_t j, const CellPartition& p) {
    Interval c = p.cell(j);
    const bool last = j == p.count;
    if (s < c.lo - 1e-12 || (last ? s > c.hi + 1e-12 : s >= c.hi))
        throw WrongCell("s = " + csv::num(s) + " is not in cell " + std::to_string(j));
    return c;
}

}  // namespace

double cell_cdf_offset(double s, std::size_t j, const CellPartition& partition) {
    Interval c = checked_cell(s, j, partition);
    return std::max(0.0, s - c.lo);
}

double weighted_cell_cdf_offset(double s, std::size_t j, const CellPartition& partition, const GridDensity& gamma) {
    Interval c = checked_cell(s, j, partition);
    return gamma.mass_between(c.lo, std::clamp(s, c.lo, 1.0));
}

std::string quantile_table_csv(const QuantileSkorohodMap& map, std::size_t points) {
    std::ostringstream out;
    out << "u,y\n";
    if (points < 2) points = 2;
    for (std::size_t k = 0; k < points; ++k) {
        double u = map.domain_length() * double(k) / double(points - 1);
        out << csv::num(u) << ',' << csv::num(map(u)) << '\n';
    }
    return out.str();
}

}  // namespace pmonge
