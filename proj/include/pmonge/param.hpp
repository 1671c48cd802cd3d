#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace pmonge {

/// A point of the parameter space T. Grid spaces use up to two coordinates;
/// points of an explicit finite metric space also carry their index.
struct Param {
    std::array<double, 2> coords{};
    std::size_t dim = 1;
    int index = -1;

    static Param scalar(double t) { return Param{{t, 0.0}, 1, -1}; }
    static Param pair(double t0, double t1) { return Param{{t0, t1}, 2, -1}; }

    [[nodiscard]] double value() const noexcept { return coords[0]; }
    double operator[](std::size_t i) const { return coords[i]; }

    friend bool operator==(const Param& a, const Param& b) {
        return a.dim == b.dim && a.coords == b.coords && a.index == b.index;
    }
};

/// Finite metric space T: a Euclidean grid over [lo,hi]^m (m <= 2) or an
/// arbitrary finite space with an explicit distance matrix. Euclidean spaces
/// also answer queries at off-grid points inside their bounding box.
class ParameterSpace {
public:
    static ParameterSpace grid(double lo, double hi, std::size_t points, std::size_t dim = 1);
    /// Euclidean 1D space on arbitrary sorted values.
    static ParameterSpace values(std::vector<double> values);
    /// Explicit metric; `labels` are the coordinates handed to cost evaluators.
    /// Throws InvalidInput if the matrix violates the metric axioms.
    static ParameterSpace finite(std::vector<double> labels, std::vector<std::vector<double>> matrix);

    [[nodiscard]] const std::vector<Param>& points() const noexcept { return points_; }
    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] bool euclidean() const noexcept { return matrix_.empty(); }
    /// Smallest distance between distinct grid points.
    [[nodiscard]] double spacing() const noexcept { return spacing_; }

    [[nodiscard]] double distance(const Param& a, const Param& b) const;
    /// Grid points within `radius` of `center`; Euclidean spaces add a lattice
    /// of `extra` points per axis spread over the ball.
    [[nodiscard]] std::vector<Param> sample_ball(const Param& center, double radius,
                                                 std::size_t extra = 0) const;
    /// Euclidean spaces: true if p lies in the bounding box. Finite: p is a grid point.
    [[nodiscard]] bool contains(const Param& p) const;

    /// Throws InvalidInput on the first sampled triple violating the axioms.
    void check_metric(double tol = 1e-12) const;

private:
    std::vector<Param> points_;
    std::vector<std::vector<double>> matrix_;
    std::size_t dim_ = 1;
    std::array<double, 2> lo_{}, hi_{};
    double spacing_ = 0.0;
};

}  // namespace pmonge
