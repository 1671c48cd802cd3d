#include "pmonge/param.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pmonge/errors.hpp"

namespace pmonge {

ParameterSpace ParameterSpace::grid(double lo, double hi, std::size_t points, std::size_t dim) {
    if (points == 0) throw InvalidInput("parameter grid must be nonempty");
    if (dim != 1 && dim != 2) throw InvalidInput("parameter grids support dimension 1 or 2");
    if (!(hi >= lo)) throw InvalidInput("parameter grid needs lo <= hi");
    ParameterSpace s;
    s.dim_ = dim;
    auto coord = [&](std::size_t k) {
        return points == 1 ? lo : lo + (hi - lo) * double(k) / double(points - 1);
    };
    if (dim == 1) {
        for (std::size_t k = 0; k < points; ++k) s.points_.push_back(Param::scalar(coord(k)));
    } else {
        for (std::size_t a = 0; a < points; ++a)
            for (std::size_t b = 0; b < points; ++b) s.points_.push_back(Param::pair(coord(a), coord(b)));
    }
    s.lo_ = {lo, lo};
    s.hi_ = {hi, hi};
    s.spacing_ = points > 1 ? (hi - lo) / double(points - 1) : 0.0;
    return s;
}

ParameterSpace ParameterSpace::values(std::vector<double> values) {
    if (values.empty()) throw InvalidInput("parameter grid must be nonempty");
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidInput("parameter values must be finite");
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    ParameterSpace s;
    for (double v : values) s.points_.push_back(Param::scalar(v));
    s.lo_ = {values.front(), 0.0};
    s.hi_ = {values.back(), 0.0};
    s.spacing_ = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < values.size(); ++k) s.spacing_ = std::min(s.spacing_, values[k] - values[k - 1]);
    if (values.size() == 1) s.spacing_ = 0.0;
    return s;
}

ParameterSpace ParameterSpace::finite(std::vector<double> labels,
                                      std::vector<std::vector<double>> matrix) {
    if (labels.empty()) throw InvalidInput("parameter space must be nonempty");
    if (matrix.size() != labels.size()) throw InvalidInput("distance matrix size mismatch");
    for (const auto& row : matrix)
        if (row.size() != labels.size()) throw InvalidInput("distance matrix must be square");
    ParameterSpace s;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        Param p = Param::scalar(labels[k]);
        p.index = int(k);
        s.points_.push_back(p);
    }
    s.matrix_ = std::move(matrix);
    s.check_metric();
    s.spacing_ = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < s.size(); ++a)
        for (std::size_t b = 0; b < s.size(); ++b)
            if (a != b) s.spacing_ = std::min(s.spacing_, s.matrix_[a][b]);
    if (s.size() == 1) s.spacing_ = 0.0;
    return s;
}

double ParameterSpace::distance(const Param& a, const Param& b) const {
    if (!euclidean()) {
        if (a.index < 0 || b.index < 0 || std::size_t(a.index) >= size() || std::size_t(b.index) >= size())
            throw DomainError("finite parameter space only measures distances between its points");
        return matrix_[std::size_t(a.index)][std::size_t(b.index)];
    }
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

bool ParameterSpace::contains(const Param& p) const {
    if (!euclidean()) return p.index >= 0 && std::size_t(p.index) < size();
    if (p.dim != dim_) return false;
    for (std::size_t i = 0; i < dim_; ++i)
        if (p[i] < lo_[i] - 1e-12 || p[i] > hi_[i] + 1e-12) return false;
    return true;
}

std::vector<Param> ParameterSpace::sample_ball(const Param& center, double radius,
                                               std::size_t extra) const {
    std::vector<Param> out;
    for (const auto& p : points_)
        if (distance(p, center) <= radius) out.push_back(p);
    if (!euclidean() || extra == 0) return out;
    auto lattice = [&](std::size_t axis, std::size_t k) {
        double a = std::max(lo_[axis], center[axis] - radius);
        double b = std::min(hi_[axis], center[axis] + radius);
        return extra == 1 ? 0.5 * (a + b) : a + (b - a) * double(k) / double(extra - 1);
    };
    if (dim_ == 1) {
        for (std::size_t k = 0; k < extra; ++k) {
            Param p = Param::scalar(lattice(0, k));
            if (distance(p, center) <= radius) out.push_back(p);
        }
    } else {
        for (std::size_t k = 0; k < extra; ++k)
            for (std::size_t l = 0; l < extra; ++l) {
                Param p = Param::pair(lattice(0, k), lattice(1, l));
                if (distance(p, center) <= radius) out.push_back(p);
            }
    }
    return out;
}

void ParameterSpace::check_metric(double tol) const {
    if (euclidean()) return;
    const std::size_t n = size();
    for (std::size_t a = 0; a < n; ++a) {
        if (std::abs(matrix_[a][a]) > tol) throw InvalidInput("metric: d(a,a) != 0");
        for (std::size_t b = 0; b < n; ++b) {
            double d = matrix_[a][b];
            if (!std::isfinite(d) || d < 0.0) throw InvalidInput("metric: invalid distance");
            if (std::abs(d - matrix_[b][a]) > tol) throw InvalidInput("metric: asymmetric distance");
            if (a != b && d <= 0.0) throw InvalidInput("metric: distinct points at distance 0");
            for (std::size_t c = 0; c < n; ++c)
                if (d > matrix_[a][c] + matrix_[c][b] + tol)
                    throw InvalidInput("metric: triangle inequality violated");
        }
    }
}

}  // namespace pmonge
