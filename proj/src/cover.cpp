#include "pmonge/cover.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pmonge/csv.hpp"
#include "pmonge/errors.hpp"

namespace pmonge {

Interval quantile_region(const GridDensity& m, double tail, double margin) {
    double lo = tail > 0.0 ? m.quantile(tail) : 0.0;
    double hi = tail > 0.0 ? m.quantile(1.0 - tail) : 1.0;
    return {std::max(0.0, lo - margin), std::min(1.0, hi + margin)};
}

namespace {

double mass_outside(const GridDensity& m, Interval r) { return m.cdf(r.lo) + (1.0 - m.cdf(r.hi)); }

std::vector<std::size_t> coarsen(std::size_t points, std::size_t stride) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < points; k += stride) idx.push_back(k);
    if (idx.back() != points - 1) idx.push_back(points - 1);
    return idx;
}

double hat(const ParameterCover& c, std::size_t alpha, const Param& t) {
    return std::max(0.0, 1.0 - c.space.distance(t, c.centers[alpha]) / c.radii[alpha]);
}

struct Layout {
    std::vector<Param> centers;
    double radius = 0.0;
    double floor = 0.0;  // radii must stay strictly above this
};

// Centers on every stride-th grid point; nullopt when the space is finite.
std::optional<Layout> layout(const ParameterSpace& space, std::size_t stride) {
    if (!space.euclidean()) return std::nullopt;
    const auto& pts = space.points();
    Layout l;
    if (space.dim() == 1) {
        auto idx = coarsen(pts.size(), stride);
        for (auto k : idx) l.centers.push_back(pts[k]);
        for (std::size_t k = 1; k < idx.size(); ++k)
            l.radius = std::max(l.radius, pts[idx[k]].value() - pts[idx[k - 1]].value());
        l.floor = 0.5 * l.radius;
    } else {
        const auto P = std::size_t(std::llround(std::sqrt(double(pts.size()))));
        auto idx = coarsen(P, stride);
        for (auto a : idx)
            for (auto b : idx) l.centers.push_back(pts[a * P + b]);
        for (std::size_t k = 1; k < idx.size(); ++k)
            l.radius = std::max(l.radius, pts[idx[k] * P][0] - pts[idx[k - 1] * P][0]);
        l.floor = 0.5 * std::sqrt(2.0) * l.radius;
    }
    if (l.centers.size() == 1) {
        l.radius = 1.0;
        l.floor = 0.0;
    }
    return l;
}

}  // namespace

ParameterCover build_cover(const ParametricCost& cost, const ParameterSpace& space, double eps1,
                           const CoverMarginals& marginals, const CoverOptions& opts) {
    if (!(eps1 > 0.0)) throw DomainError("build_cover needs eps1 > 0");
    if (!(opts.mass_scale > 0.0)) throw DomainError("mass scale must be positive");
    if (!opts.full_y && !marginals.nu_path) throw InvalidInput("quantile y regions need the target path");
    if (opts.x_regions && !marginals.mu_path) throw InvalidInput("quantile x regions need the source path");
    const double limit = eps1 / opts.mass_scale;
    const double tail = 0.5 * limit;

    // Hull of the quantile regions over the sampled ball.
    auto regions_at = [&](const Param& center, double r) {
        Interval y{0.0, 1.0}, x{0.0, 1.0};
        auto ts = space.sample_ball(center, r, opts.ball_samples);
        ts.push_back(center);
        auto hull = [&](const MeasurePath& path) {
            Interval h{1.0, 0.0};
            for (const auto& t : ts) {
                Interval q = quantile_region(path(t), tail, opts.margin);
                h.lo = std::min(h.lo, q.lo);
                h.hi = std::max(h.hi, q.hi);
            }
            return h;
        };
        if (!opts.full_y) y = hull(marginals.nu_path);
        if (opts.x_regions) x = hull(marginals.mu_path);
        return std::pair{x, y};
    };
    auto regions_hold = [&](const Param& center, double r, Interval x, Interval y) {
        for (const auto& t : space.sample_ball(center, r, opts.ball_samples)) {
            if (!opts.full_y && mass_outside(marginals.nu_path(t), y) >= limit) return false;
            if (opts.x_regions && mass_outside(marginals.mu_path(t), x) >= limit) return false;
        }
        return true;
    };

    ParameterCover cover{space, {}, {}, {}, {}, {}};
    auto finish_center = [&](const Param& center, double r, Interval x, Interval y) {
        auto ts = space.sample_ball(center, r, opts.ball_samples);
        if (ts.empty()) ts.push_back(center);
        KappaOptions ko = opts.kappa;
        ko.x_region = x;
        cover.centers.push_back(center);
        cover.radii.push_back(r);
        cover.kappas.push_back(kappa_for(cost, ts, y, eps1, ko));
        cover.x_regions.push_back(x);
        cover.y_regions.push_back(y);
    };

    if (!space.euclidean()) {
        // Each point is its own center; balls of the minimal spacing contain no other point's hat.
        const double r = space.size() > 1 ? space.spacing() : 1.0;
        for (const auto& p : space.points()) {
            auto [x, y] = regions_at(p, 0.0);
            if (!regions_hold(p, 0.0, x, y)) throw CoverFailure("region check fails at a parameter point");
            finish_center(p, r, x, y);
        }
        return cover;
    }

    const std::size_t axis_points = space.dim() == 1
                                        ? space.size()
                                        : std::size_t(std::llround(std::sqrt(double(space.size()))));
    std::size_t stride = 1;
    if (opts.target_centers > 1 && axis_points > 1)
        stride = std::max<std::size_t>(1, (axis_points - 1 + opts.target_centers - 2) / (opts.target_centers - 1));
    else if (axis_points > 1)
        stride = axis_points;  // a single center at the first point
    while (true) {
        auto l = *layout(space, stride);
        if (opts.target_centers == 1 && space.dim() == 1) {
            // One center in the middle reaching both ends.
            const auto& pts = space.points();
            l.centers = {pts[pts.size() / 2]};
            double reach = std::max(pts.back().value() - l.centers[0].value(), l.centers[0].value() - pts.front().value());
            l.radius = std::max(1e-12, 1.5 * reach + 1e-12);
            l.floor = reach;
        }
        std::vector<double> radii;
        std::vector<std::pair<Interval, Interval>> regs;
        bool ok = true;
        for (const auto& c : l.centers) {
            double r = l.radius;
            auto reg = regions_at(c, r);
            if (!regions_hold(c, r, reg.first, reg.second)) {
                double a = l.floor, b = l.radius;
                std::optional<double> good;
                for (int it = 0; it < 30; ++it) {
                    double mid = 0.5 * (a + b);
                    auto mid_reg = regions_at(c, mid);
                    if (regions_hold(c, mid, mid_reg.first, mid_reg.second)) {
                        good = mid;
                        reg = mid_reg;
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                if (!good || *good <= l.floor) {
                    ok = false;
                    break;
                }
                r = *good;
            }
            radii.push_back(r);
            regs.push_back(reg);
        }
        if (ok) {
            for (std::size_t k = 0; k < l.centers.size(); ++k)
                finish_center(l.centers[k], radii[k], regs[k].first, regs[k].second);
            break;
        }
        if (stride == 1) throw CoverFailure("region checks fail even with a center at every grid point");
        stride = std::max<std::size_t>(1, stride / 2);
    }

    // Exhaustive cover check on grid points and the points between them.
    std::vector<Param> probes = space.points();
    const auto& pts = space.points();
    if (space.dim() == 1) {
        for (std::size_t k = 1; k < pts.size(); ++k)
            probes.push_back(Param::scalar(0.5 * (pts[k - 1].value() + pts[k].value())));
    } else {
        for (std::size_t k = 1; k < pts.size(); ++k)
            probes.push_back(Param::pair(0.5 * (pts[k - 1][0] + pts[k][0]), 0.5 * (pts[k - 1][1] + pts[k][1])));
    }
    for (const auto& t : probes) {
        double s = 0.0;
        for (std::size_t a = 0; a < cover.size(); ++a) s += hat(cover, a, t);
        if (!(s > 0.0)) throw CoverFailure("parameter point " + csv::num(t.value()) + " is not covered");
    }
    return cover;
}

double psi(const ParameterCover& cover, std::size_t alpha, const Param& t) {
    double s = 0.0;
    for (std::size_t a = 0; a < cover.size(); ++a) s += hat(cover, a, t);
    if (!(s > 0.0)) throw CoverFailure("parameter " + csv::num(t.value()) + " lies outside every ball");
    return hat(cover, alpha, t) / s;
}

double delta(const ParameterCover& cover, const Param& t) {
    double s = 0.0, d = 0.0;
    for (std::size_t a = 0; a < cover.size(); ++a) {
        double w = hat(cover, a, t);
        s += w;
        d += w * cover.kappas[a];
    }
    if (!(s > 0.0)) throw CoverFailure("parameter " + csv::num(t.value()) + " lies outside every ball");
    return d / s;
}

std::size_t select_alpha(const ParameterCover& cover, const Param& t) {
    std::size_t best = cover.size();
    for (std::size_t a = 0; a < cover.size(); ++a)
        if (hat(cover, a, t) > 0.0 && (best == cover.size() || cover.kappas[a] > cover.kappas[best])) best = a;
    if (best == cover.size()) throw CoverFailure("parameter " + csv::num(t.value()) + " lies outside every ball");
    return best;
}

Interval CellPartition::cell(std::size_t j) const {
    if (j == 0 || j > count) throw DomainError("cell index out of range");
    return {double(j - 1) * delta_tilde, std::min(1.0, double(j) * delta_tilde)};
}

std::size_t CellPartition::locate(double s) const {
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError("cell lookup outside [0,1]");
    auto j = std::size_t(std::floor(s / delta_tilde)) + 1;
    return std::min(j, count);
}

CellPartition cells(double delta_tilde, const Param& t) {
    if (!(delta_tilde > 0.0)) throw DomainError("cell width must be positive");
    CellPartition p;
    p.t = t;
    p.delta_tilde = delta_tilde;
    double q = 1.0 / delta_tilde;
    p.count = std::max<std::size_t>(1, std::size_t(std::ceil(q - 1e-12)));
    return p;
}

std::string cover_csv(const ParameterCover& cover) {
    std::ostringstream out;
    out << "alpha,t_center,radius,kappa,y_lo,y_hi\n";
    for (std::size_t a = 0; a < cover.size(); ++a)
        out << a << ',' << csv::num(cover.centers[a].value()) << ',' << csv::num(cover.radii[a]) << ','
            << csv::num(cover.kappas[a]) << ',' << csv::num(cover.y_regions[a].lo) << ','
            << csv::num(cover.y_regions[a].hi) << '\n';
    return out.str();
}

}  // namespace pmonge
