#include "pmonge/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pmonge/csv.hpp"
#include "pmonge/errors.hpp"

namespace pmonge {

namespace {

constexpr double kMassTol = 1e-12;

void check_weights(const std::vector<double>& w) {
    if (w.empty()) throw InvalidInput("grid density needs at least one cell");
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!std::isfinite(w[i]) || w[i] < 0.0)
            throw InvalidInput("cell " + std::to_string(i) + " has invalid weight " +
                               csv::num(w[i]));
    }
}

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

GridDensity::GridDensity(std::vector<double> weights) : weights_(std::move(weights)) {
    check_weights(weights_);
    cum_.assign(weights_.size() + 1, 0.0);
    for (std::size_t i = 0; i < weights_.size(); ++i) cum_[i + 1] = cum_[i] + weights_[i];
    if (std::abs(cum_.back() - 1.0) > kMassTol)
        throw InvalidInput("grid density mass is " + csv::num(cum_.back()) + ", expected 1");
    for (auto& c : cum_) c = std::min(c, 1.0);
    cum_.back() = 1.0;
}

GridDensity GridDensity::normalized(std::vector<double> weights) {
    check_weights(weights);
    double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw InvalidInput("cannot normalize a zero measure");
    for (auto& w : weights) w /= total;
    // Division leaves the sum within a few ulps of 1.
    return GridDensity(std::move(weights));
}

GridDensity GridDensity::uniform(std::size_t n) {
    if (n == 0) throw InvalidInput("grid density needs at least one cell");
    return GridDensity(std::vector<double>(n, 1.0 / double(n)));
}

GridDensity GridDensity::from_cell_integrals(std::size_t n,
                                             const std::function<double(double, double)>& integral) {
    if (n == 0) throw InvalidInput("grid density needs at least one cell");
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = integral(double(i) / double(n), double(i + 1) / double(n));
    return normalized(std::move(w));
}

double GridDensity::cdf(double x) const {
    if (!in_unit(x)) throw DomainError("cdf argument " + csv::num(x) + " outside [0,1]");
    const double n = double(size());
    std::size_t i = std::min(std::size_t(x * n), size() - 1);
    double frac = x * n - double(i);
    return cum_[i] + (cum_[i + 1] - cum_[i]) * frac;
}

double GridDensity::quantile(double u) const {
    if (!(u >= -kMassTol && u <= 1.0 + kMassTol))
        throw DomainError("quantile level " + csv::num(u) + " outside [0,1]");
    if (u <= 0.0) return 0.0;
    u = std::min(u, 1.0);
    auto it = std::lower_bound(cum_.begin() + 1, cum_.end(), u);
    std::size_t k = std::size_t(it - cum_.begin());
    std::size_t i = k - 1;
    double w = cum_[k] - cum_[i];
    double frac = w > 0.0 ? (u - cum_[i]) / w : 1.0;
    frac = std::clamp(frac, 0.0, 1.0);
    return (double(i) + frac) / double(size());
}

double GridDensity::mass_between(double a, double b) const {
    if (a > b) throw DomainError("mass_between: reversed interval");
    return cdf(b) - cdf(a);
}

double GridDensity::min_density(double lo, double hi) const {
    if (!(in_unit(lo) && in_unit(hi) && lo <= hi)) throw DomainError("min_density: bad interval");
    const double n = double(size());
    std::size_t first = std::min(std::size_t(lo * n), size() - 1);
    std::size_t last = std::min(std::size_t(std::ceil(hi * n)), size());
    if (last <= first) last = first + 1;
    double m = density(first);
    for (std::size_t i = first; i < last; ++i) m = std::min(m, density(i));
    return m;
}

DiscreteMeasure::DiscreteMeasure(std::vector<std::pair<double, double>> atoms) {
    for (const auto& [x, m] : atoms) {
        if (!std::isfinite(x)) throw InvalidInput("atom position must be finite");
        if (!std::isfinite(m) || m < 0.0) throw InvalidInput("atom mass must be finite and >= 0");
    }
    std::stable_sort(atoms.begin(), atoms.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& a : atoms) {
        if (!atoms_.empty() && atoms_.back().first == a.first)
            atoms_.back().second += a.second;
        else
            atoms_.push_back(a);
    }
    cum_.reserve(atoms_.size());
    for (const auto& a : atoms_) {
        total_ += a.second;
        cum_.push_back(total_);
    }
}

double DiscreteMeasure::cdf(double x) const {
    auto it = std::upper_bound(atoms_.begin(), atoms_.end(), x,
                               [](double v, const auto& a) { return v < a.first; });
    if (it == atoms_.begin()) return 0.0;
    return cum_[std::size_t(it - atoms_.begin()) - 1];
}

double DiscreteMeasure::quantile(double u) const {
    if (atoms_.empty()) throw DomainError("quantile of an empty measure");
    if (!(u >= -kMassTol && u <= total_ + kMassTol))
        throw DomainError("quantile level " + csv::num(u) + " outside [0, " + csv::num(total_) + "]");
    auto it = std::lower_bound(cum_.begin(), cum_.end(), u);
    if (it == cum_.end()) --it;
    return atoms_[std::size_t(it - cum_.begin())].first;
}

GridDensity pushforward(const GridDensity& m, const std::function<double(double)>& map,
                        std::size_t bins, std::size_t k) {
    if (bins == 0 || k == 0) throw InvalidInput("pushforward needs bins >= 1 and k >= 1");
    std::vector<double> out(bins, 0.0);
    const double n = double(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double w = m.weight(i) / double(k);
        if (w == 0.0) continue;
        for (std::size_t q = 0; q < k; ++q) {
            double x = (double(i) + (double(q) + 0.5) / double(k)) / n;
            double y = map(x);
            if (!(y >= -kMassTol && y <= 1.0 + kMassTol))
                throw DomainError("pushforward map value " + csv::num(y) + " outside [0,1]");
            y = std::clamp(y, 0.0, 1.0);
            out[std::min(std::size_t(y * double(bins)), bins - 1)] += w;
        }
    }
    return GridDensity::normalized(std::move(out));
}

double tv_distance(const GridDensity& a, const GridDensity& b) {
    const std::size_t na = a.size(), nb = b.size();
    if (na == nb) {
        double s = 0.0;
        for (std::size_t i = 0; i < na; ++i) s += std::abs(a.weight(i) - b.weight(i));
        return s;
    }
    // Merge breakpoints i/na and j/nb with exact integer comparisons.
    double s = 0.0, prev = 0.0;
    std::size_t i = 0, j = 0;
    while (i < na && j < nb) {
        std::size_t ei = (i + 1) * nb, ej = (j + 1) * na;
        std::size_t e = std::min(ei, ej);
        double next = double(e) / double(na * nb);
        s += std::abs(a.density(i) - b.density(j)) * (next - prev);
        prev = next;
        if (ei == e) ++i;
        if (ej == e) ++j;
    }
    return s;
}

namespace {

// Piecewise-linear concave function on [-1, 1] given by breakpoints.
struct ConcavePL {
    std::vector<double> xs, vs;

    // g(f) = max_{|f' - f| <= radius} (*this)(f').
    void window_max(double radius) {
        if (radius <= 0.0) return;
        double vmax = *std::max_element(vs.begin(), vs.end());
        std::size_t p1 = 0;
        while (vs[p1] != vmax) ++p1;
        std::size_t p2 = vs.size() - 1;
        while (vs[p2] != vmax) --p2;
        std::vector<double> nx, nv;
        nx.reserve(xs.size() + 1);
        nv.reserve(xs.size() + 1);
        for (std::size_t k = 0; k <= p1; ++k) {
            nx.push_back(xs[k] - radius);
            nv.push_back(vs[k]);
        }
        for (std::size_t k = p2; k < xs.size(); ++k) {
            nx.push_back(xs[k] + radius);
            nv.push_back(vs[k]);
        }
        xs = std::move(nx);
        vs = std::move(nv);
        clip();
    }

    void clip() {
        auto at = [&](double f) {
            // xs spans f; interpolate on the first segment containing it.
            for (std::size_t k = 1; k < xs.size(); ++k) {
                if (xs[k] >= f) {
                    double len = xs[k] - xs[k - 1];
                    if (len <= 0.0) return vs[k];
                    return vs[k - 1] + (vs[k] - vs[k - 1]) * (f - xs[k - 1]) / len;
                }
            }
            return vs.back();
        };
        double left = at(-1.0), right = at(1.0);
        std::vector<double> nx{-1.0}, nv{left};
        for (std::size_t k = 0; k < xs.size(); ++k) {
            if (xs[k] > -1.0 && xs[k] < 1.0) {
                nx.push_back(xs[k]);
                nv.push_back(vs[k]);
            }
        }
        nx.push_back(1.0);
        nv.push_back(right);
        xs = std::move(nx);
        vs = std::move(nv);
    }

    void add_linear(double slope) {
        for (std::size_t k = 0; k < xs.size(); ++k) vs[k] += slope * xs[k];
    }
};

}  // namespace

double dkr_distance(std::span<const double> support, std::span<const double> p,
                    std::span<const double> q) {
    if (support.size() != p.size() || support.size() != q.size())
        throw InvalidInput("dkr_distance: support and mass vectors differ in length");
    if (support.empty()) return 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (!std::isfinite(support[i]) || !std::isfinite(p[i]) || !std::isfinite(q[i]))
            throw InvalidInput("dkr_distance: non-finite input");
        if (i > 0 && support[i] < support[i - 1])
            throw InvalidInput("dkr_distance: support must be sorted");
    }
    ConcavePL v{{-1.0, 1.0}, {0.0, 0.0}};
    v.add_linear(p[0] - q[0]);
    for (std::size_t i = 1; i < support.size(); ++i) {
        v.window_max(support[i] - support[i - 1]);
        v.add_linear(p[i] - q[i]);
    }
    double best = *std::max_element(v.vs.begin(), v.vs.end());
    if (!(best >= -1e-12)) throw SolverBugError("dkr_distance: value below the f = 0 bound");
    return std::max(best, 0.0);
}

double dkr_distance(const GridDensity& a, const GridDensity& b) {
    if (a.size() == b.size()) {
        std::vector<double> support(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) support[i] = a.center(i);
        return dkr_distance(support, a.weights(), b.weights());
    }
    std::vector<std::pair<double, double>> pa, pb;
    for (std::size_t i = 0; i < a.size(); ++i) pa.emplace_back(a.center(i), a.weight(i));
    for (std::size_t i = 0; i < b.size(); ++i) pb.emplace_back(b.center(i), b.weight(i));
    return dkr_distance(DiscreteMeasure(std::move(pa)), DiscreteMeasure(std::move(pb)));
}

double dkr_distance(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    std::vector<double> support;
    for (const auto& [x, m] : a.atoms()) support.push_back(x);
    for (const auto& [x, m] : b.atoms()) support.push_back(x);
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
    std::vector<double> p(support.size(), 0.0), q(support.size(), 0.0);
    auto scatter = [&](const DiscreteMeasure& m, std::vector<double>& out) {
        for (const auto& [x, w] : m.atoms()) {
            auto it = std::lower_bound(support.begin(), support.end(), x);
            out[std::size_t(it - support.begin())] += w;
        }
    };
    scatter(a, p);
    scatter(b, q);
    return dkr_distance(support, p, q);
}

double w1_distance(const GridDensity& a, const GridDensity& b) {
    const std::size_t na = a.size(), nb = b.size();
    std::vector<double> knots;
    knots.reserve(na + nb + 2);
    for (std::size_t i = 0; i <= na; ++i) knots.push_back(double(i) / double(na));
    for (std::size_t j = 0; j <= nb; ++j) knots.push_back(double(j) / double(nb));
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    double total = 0.0;
    double d0 = 0.0;
    for (std::size_t k = 1; k < knots.size(); ++k) {
        double len = knots[k] - knots[k - 1];
        double d1 = a.cdf(knots[k]) - b.cdf(knots[k]);
        if ((d0 >= 0.0 && d1 >= 0.0) || (d0 <= 0.0 && d1 <= 0.0)) {
            total += 0.5 * (std::abs(d0) + std::abs(d1)) * len;
        } else {
            double s = std::abs(d0) + std::abs(d1);
            total += 0.5 * len * (d0 * d0 + d1 * d1) / s;
        }
        d0 = d1;
    }
    return total;
}

GridDensity read_grid_density_csv(const std::string& path) {
    auto table = csv::read(path);
    const auto ci = table.column("cell_index");
    const auto cw = table.column("weight");
    std::vector<double> w(table.rows.size(), -1.0);
    for (const auto& row : table.rows) {
        long idx = csv::to_long(row[ci], path);
        if (idx < 0 || std::size_t(idx) >= w.size())
            throw InvalidInput(path + ": cell_index " + row[ci] + " out of range");
        if (w[std::size_t(idx)] != -1.0) throw InvalidInput(path + ": duplicate cell_index " + row[ci]);
        double v = csv::to_double(row[cw], path);
        if (!std::isfinite(v) || v < 0.0)
            throw InvalidInput(path + ": invalid weight '" + row[cw] + "'");
        w[std::size_t(idx)] = v;
    }
    return GridDensity(std::move(w));
}

std::string grid_density_csv(const GridDensity& m) {
    std::ostringstream out;
    out << "cell_index,weight\n";
    for (std::size_t i = 0; i < m.size(); ++i) out << i << ',' << csv::num(m.weight(i)) << '\n';
    return out.str();
}

}  // namespace pmonge
