#include "pmonge/cost.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <random>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "pmonge/csv.hpp"
#include "pmonge/errors.hpp"

namespace pmonge {

ParametricCost::ParametricCost(std::string family_id, CostFn fn, std::map<std::string, double> params,
                               std::optional<double> bounded_by)
    : family_id_(std::move(family_id)),
      fn_(std::move(fn)),
      params_(std::move(params)),
      bounded_by_(bounded_by) {
    if (!fn_) throw InvalidInput("cost evaluator must be callable");
    if (bounded_by_ && !(*bounded_by_ >= 0.0 && std::isfinite(*bounded_by_)))
        throw InvalidInput("bounded_by must be finite and nonnegative");
}

double ParametricCost::eval(double x, double y, const Param& t) const {
    double v = fn_(x, y, t);
    if (!std::isfinite(v) || v < 0.0)
        throw EvaluationError(family_id_ + "(" + csv::num(x) + ", " + csv::num(y) + ", " +
                              csv::num(t.value()) + ") = " + csv::num(v));
    return v;
}

double eval(const ParametricCost& c, double x, double y, const Param& t) { return c.eval(x, y, t); }

void ParametricCost::check(const ParameterSpace& space, std::uint64_t seed, std::size_t samples) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, space.size() - 1);
    for (std::size_t s = 0; s < samples; ++s) {
        double x = unit(rng), y = unit(rng);
        const Param& t = space.points()[pick(rng)];
        double v = eval(x, y, t);
        if (bounded_by_ && v > *bounded_by_ * (1.0 + 1e-12) + 1e-12)
            throw InvalidInput(family_id_ + " exceeds bounded_by " + csv::num(*bounded_by_) + " at (" +
                               csv::num(x) + ", " + csv::num(y) + ")");
    }
}

DominatingPair DominatingPair::constant(double bound) {
    const double half = 0.5 * bound;
    return {[half](double, const Param&) { return half; }, [half](double, const Param&) { return half; }};
}

void DominatingPair::check(const ParametricCost& cost, const ParameterSpace& space, std::uint64_t seed,
                           std::size_t samples) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, space.size() - 1);
    for (std::size_t s = 0; s < samples; ++s) {
        double x = unit(rng), y = unit(rng);
        const Param& t = space.points()[pick(rng)];
        double h = cost.eval(x, y, t);
        double bound = a(x, t) + b(y, t);
        if (!(bound >= 0.0)) throw InvalidInput("dominating pair must be nonnegative");
        if (h > bound * (1.0 + 1e-12) + 1e-12)
            throw InvalidInput("dominating pair violated at (" + csv::num(x) + ", " + csv::num(y) + ")");
    }
}

bool TailCurve::monotone(double tol) const {
    for (std::size_t k = 1; k < tails.size(); ++k)
        if (tails[k] > tails[k - 1] + tol) return false;
    return true;
}

namespace {

// Lattice {k / (n - 1)} restricted to the region; falls back to the region
// endpoints when no lattice point lies inside.
struct Lattice {
    std::vector<double> pts;
    bool on_lattice = true;
};

Lattice lattice(std::size_t n, Interval r) {
    Lattice l;
    if (n < 2) throw InvalidInput("oscillation grids need at least 2 points per axis");
    const double m = double(n - 1);
    long k_lo = long(std::ceil(r.lo * m - 1e-9));
    long k_hi = long(std::floor(r.hi * m + 1e-9));
    k_lo = std::max(k_lo, 0L);
    k_hi = std::min(k_hi, long(n - 1));
    for (long k = k_lo; k <= k_hi; ++k) l.pts.push_back(double(k) / m);
    if (l.pts.empty()) {
        l.on_lattice = false;
        l.pts = {r.lo, r.hi};
        if (r.hi == r.lo) l.pts.pop_back();
    }
    return l;
}

// max over windows of `w + 1` consecutive entries of (max - min).
double window_spread(const std::vector<double>& v, std::size_t w) {
    std::deque<std::size_t> mx, mn;
    double best = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
        while (!mx.empty() && v[mx.back()] <= v[j]) mx.pop_back();
        while (!mn.empty() && v[mn.back()] >= v[j]) mn.pop_back();
        mx.push_back(j);
        mn.push_back(j);
        while (mx.front() + w < j) mx.pop_front();
        while (mn.front() + w < j) mn.pop_front();
        best = std::max(best, v[mx.front()] - v[mn.front()]);
    }
    return best;
}

void check_region(Interval r, const char* what) {
    if (!(r.lo <= r.hi) || r.lo < 0.0 || r.hi > 1.0)
        throw DomainError(std::string(what) + " region must be a nonempty subinterval of [0,1]");
}

}  // namespace

double oscillation(const ParametricCost& c, double x_radius, Interval x_region, Interval y_region,
                   std::span<const Param> t_samples, OscillationGrid grid) {
    check_region(x_region, "x");
    check_region(y_region, "y");
    if (x_radius < 0.0) throw DomainError("oscillation radius must be nonnegative");
    auto xs = lattice(grid.nx, x_region);
    auto ys = lattice(grid.ny, y_region);
    std::size_t w = 0;
    if (xs.on_lattice) {
        w = std::size_t(std::floor(x_radius * double(grid.nx - 1) + 1e-9));
    } else if (xs.pts.size() == 2 && xs.pts[1] - xs.pts[0] <= x_radius) {
        w = 1;
    }
    if (w == 0) return 0.0;
    std::vector<double> vals(xs.pts.size());
    double best = 0.0;
    for (const auto& t : t_samples) {
        for (double y : ys.pts) {
            for (std::size_t k = 0; k < xs.pts.size(); ++k) vals[k] = c.eval(xs.pts[k], y, t);
            best = std::max(best, window_spread(vals, w));
        }
    }
    return best;
}

double local_oscillation(const ParametricCost& c, double radius, Interval x_region, Interval y_region,
                         std::span<const Param> t_samples, std::size_t ny, std::size_t max_x_points) {
    check_region(x_region, "x");
    check_region(y_region, "y");
    if (!(radius > 0.0)) return 0.0;
    const double step = radius / 8.0;
    const double len = x_region.length();
    std::vector<double> pts;
    std::size_t window = 8;
    bool anchored = false;
    if (len / step + 2.0 <= double(max_x_points)) {
        std::size_t k_max = std::size_t(std::floor(len / step));
        for (std::size_t k = 0; k <= k_max; ++k) pts.push_back(x_region.lo + double(k) * step);
        if (pts.back() < x_region.hi) pts.push_back(x_region.hi);
    } else {
        // Anchored windows: 9 points spanning the radius at evenly spread anchors.
        anchored = true;
        std::size_t anchors = std::max<std::size_t>(2, max_x_points / 9);
        for (std::size_t m = 0; m < anchors; ++m) {
            double a = x_region.lo + (len - radius) * double(m) / double(anchors - 1);
            for (std::size_t k = 0; k <= 8; ++k) pts.push_back(a + double(k) * step);
        }
    }
    auto ys = lattice(ny, y_region);
    std::vector<double> vals(pts.size());
    double best = 0.0;
    for (const auto& t : t_samples) {
        for (double y : ys.pts) {
            for (std::size_t k = 0; k < pts.size(); ++k) vals[k] = c.eval(pts[k], y, t);
            if (!anchored) {
                best = std::max(best, window_spread(vals, window));
            } else {
                for (std::size_t a = 0; a < vals.size(); a += 9) {
                    auto [lo, hi] = std::minmax_element(vals.begin() + long(a), vals.begin() + long(a + 9));
                    best = std::max(best, *hi - *lo);
                }
            }
        }
    }
    return best;
}

double kappa_for(const ParametricCost& c, std::span<const Param> t_samples, Interval y_region, double eps1,
                 const KappaOptions& opts) {
    if (!(eps1 > 0.0)) throw DomainError("kappa_for needs eps1 > 0");
    double kappa = opts.initial;
    while (true) {
        double osc = local_oscillation(c, kappa, opts.x_region, y_region, t_samples, opts.ny, opts.max_x_points);
        if (osc < eps1 * opts.safety) return kappa;
        kappa *= 0.5;
        if (kappa < opts.floor)
            throw ModulusFailure("cost " + c.family_id() + ": oscillation stays above " +
                                 csv::num(eps1 * opts.safety) + " for kappa down to " + csv::num(opts.floor));
    }
}

double kappa_for(const ParametricCost& c, const ParameterSpace& space, const Param& t_center, double t_radius,
                 Interval y_region, double eps1, const KappaOptions& opts) {
    auto ts = space.sample_ball(t_center, t_radius, 5);
    if (ts.empty()) ts.push_back(t_center);
    return kappa_for(c, ts, y_region, eps1, opts);
}

namespace {

// integral over [0,1] of f(x) 1{f(x) >= level} under the grid density.
double tail_integral(const std::function<double(double)>& f, const GridDensity& m, double level) {
    constexpr std::size_t kProbe = 64;
    static thread_local boost::math::quadrature::tanh_sinh<double> integrator;
    double total = 0.0;
    const double n = double(m.size());
    auto above = [&](double x) {
        double v = f(x);
        if (std::isnan(v) || v < 0.0) throw EvaluationError("dominating function is NaN or negative");
        return v >= level;
    };
    auto integrate = [&](double a, double b) {
        if (b <= a) return 0.0;
        try {
            auto g = [&f](double x) { return f(x); };
            return integrator.integrate(g, a, b, 1e-10);
        } catch (const std::exception& e) {
            throw TailDivergence(std::string("tail integral failed: ") + e.what());
        }
    };
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m.weight(i) == 0.0) continue;
        const double lo = double(i) / n, hi = double(i + 1) / n;
        double run_start = lo;
        bool prev = above(lo);
        double cell = 0.0;
        for (std::size_t k = 1; k <= kProbe; ++k) {
            double x = lo + (hi - lo) * double(k) / double(kProbe);
            if (k == kProbe) x = hi;
            bool cur = above(x);
            if (cur != prev) {
                double a = lo + (hi - lo) * double(k - 1) / double(kProbe), b = x;
                for (int it = 0; it < 60; ++it) {
                    double mid = 0.5 * (a + b);
                    (above(mid) == prev ? a : b) = mid;
                }
                double cross = 0.5 * (a + b);
                if (prev) cell += integrate(run_start, cross);
                run_start = cross;
                prev = cur;
            }
        }
        if (prev) cell += integrate(run_start, hi);
        total += cell * m.density(i);
    }
    return total;
}

}  // namespace

TailCurve tail_curve(const DominatingPair& d, const MeasurePath& mu_path, const MeasurePath& nu_path,
                     std::span<const Param> t_samples, std::span<const double> radii) {
    for (std::size_t k = 1; k < radii.size(); ++k)
        if (!(radii[k] > radii[k - 1])) throw InvalidInput("tail_curve radii must be increasing");
    TailCurve curve;
    curve.radii.assign(radii.begin(), radii.end());
    curve.tails.assign(radii.size(), 0.0);
    for (const auto& t : t_samples) {
        GridDensity mu = mu_path(t), nu = nu_path(t);
        auto fa = [&](double x) { return d.a(x, t); };
        auto fb = [&](double y) { return d.b(y, t); };
        for (std::size_t k = 0; k < radii.size(); ++k) {
            double v = tail_integral(fa, mu, radii[k]) + tail_integral(fb, nu, radii[k]);
            curve.tails[k] = std::max(curve.tails[k], v);
        }
    }
    return curve;
}

double truncation_level(const DominatingPair& d, const MeasurePath& mu_path, const MeasurePath& nu_path,
                        std::span<const Param> t_samples, double eps, std::span<const double> n_grid) {
    if (!(eps > 0.0)) throw DomainError("truncation_level needs eps > 0");
    for (double level : n_grid) {
        if (!(level > 0.0)) throw InvalidInput("truncation levels must be positive");
        double r = 0.5 * level;
        auto curve = tail_curve(d, mu_path, nu_path, t_samples, std::span<const double>(&r, 1));
        if (curve.tails[0] < 0.25 * eps) return level;
    }
    throw TailDivergence("tail never drops below eps/4 = " + csv::num(0.25 * eps) + " on the level grid");
}

ParametricCost truncate(const ParametricCost& c, double level) {
    if (!(level > 0.0)) throw DomainError("truncation level must be positive");
    auto inner = c;
    CostFn fn = [inner, level](double x, double y, const Param& t) {
        double v = inner(x, y, t);
        return std::isnan(v) ? v : std::min(v, level);
    };
    auto params = c.params();
    params["truncation_level"] = level;
    double bound = c.bounded_by() ? std::min(*c.bounded_by(), level) : level;
    return ParametricCost("min(" + c.family_id() + "," + csv::num(level) + ")", std::move(fn), std::move(params),
                          bound);
}

double lipschitz_bound(const ParametricCost& c, std::span<const Param> t_samples, std::size_t resolution) {
    if (resolution < 2) throw InvalidInput("lipschitz_bound needs resolution >= 2");
    const double h = 1.0 / double(resolution);
    std::vector<double> u(resolution);
    for (std::size_t k = 0; k < resolution; ++k) u[k] = (double(k) + 0.5) * h;
    double lx = 0.0, ly = 0.0;
    std::vector<double> row(resolution);
    std::vector<double> prev_row(resolution);
    for (const auto& t : t_samples) {
        for (std::size_t a = 0; a < resolution; ++a) {
            for (std::size_t b = 0; b < resolution; ++b) row[b] = c.eval(u[a], u[b], t);
            for (std::size_t b = 1; b < resolution; ++b) ly = std::max(ly, std::abs(row[b] - row[b - 1]) / h);
            if (a > 0)
                for (std::size_t b = 0; b < resolution; ++b) lx = std::max(lx, std::abs(row[b] - prev_row[b]) / h);
            std::swap(row, prev_row);
        }
    }
    return lx + ly;
}

double sup_bound(const ParametricCost& c, std::span<const Param> t_samples, std::size_t resolution) {
    if (c.bounded_by()) return *c.bounded_by();
    double m = 0.0;
    for (const auto& t : t_samples)
        for (std::size_t a = 0; a < resolution; ++a)
            for (std::size_t b = 0; b < resolution; ++b)
                m = std::max(m, c.eval((double(a) + 0.5) / double(resolution), (double(b) + 0.5) / double(resolution), t));
    return m;
}

namespace {

double get(const std::map<std::string, double>& p, const std::string& key, double def) {
    auto it = p.find(key);
    return it == p.end() ? def : it->second;
}

}  // namespace

ParametricCost make_cost(const std::string& id, const std::map<std::string, double>& p) {
    if (id == "constant") {
        double v = get(p, "value", 1.0);
        if (!(v >= 0.0)) throw ConfigError("constant cost must be nonnegative");
        return {id, [v](double, double, const Param&) { return v; }, p, v};
    }
    if (id == "abs") return {id, [](double x, double y, const Param&) { return std::abs(x - y); }, p, 1.0};
    if (id == "power") {
        double p0 = get(p, "p0", 1.0), p1 = get(p, "p1", 1.0), p2 = get(p, "p2", 0.0);
        if (!(p0 > 0.0 && p0 + std::min(p1, 0.0) + std::min(p2, 0.0) > 0.0))
            throw ConfigError("power cost exponent must stay positive on [0,1]");
        return {id,
                [p0, p1, p2](double x, double y, const Param& t) {
                    double e = p0 + p1 * t[0] + (t.dim > 1 ? p2 * t[1] : 0.0);
                    return std::pow(std::abs(x - y), e);
                },
                p, 1.0};
    }
    if (id == "shifted") {
        double s = get(p, "shift", 0.2);
        return {id, [s](double x, double y, const Param& t) { return std::abs(x - y - s * t[0]); }, p,
                1.0 + std::abs(s)};
    }
    if (id == "oscillatory") {
        double a = get(p, "amplitude", 0.5);
        if (!(std::abs(a) < 1.0)) throw ConfigError("oscillatory amplitude must lie in (-1, 1)");
        return {id,
                [a](double x, double y, const Param& t) {
                    return std::abs(x - y) * (1.0 + a * std::sin(2.0 * std::numbers::pi * (x + t[0])));
                },
                p, 1.0 + std::abs(a)};
    }
    if (id == "sqrt_shifted") {
        double s = get(p, "shift", 0.2);
        return {id, [s](double x, double y, const Param& t) { return std::sqrt(std::abs(x - y - s * t[0])); }, p,
                std::sqrt(1.0 + std::abs(s))};
    }
    if (id == "unbounded_x") {
        double k = get(p, "coef", 0.25);
        return {id, [k](double x, double y, const Param&) { return std::abs(x - y) + k / std::sqrt(x); }, p};
    }
    if (id == "unbounded_y") {
        double k = get(p, "coef", 0.25);
        return {id, [k](double x, double y, const Param&) { return std::abs(x - y) + k / std::sqrt(y); }, p};
    }
    throw ConfigError("unknown cost family '" + id + "'");
}

std::optional<DominatingPair> builtin_dominating_pair(const std::string& id,
                                                      const std::map<std::string, double>& p) {
    // |x - y| <= 1 is split evenly between the two sides.
    if (id == "unbounded_x") {
        double k = get(p, "coef", 0.25);
        return DominatingPair{[k](double x, const Param&) { return k / std::sqrt(x) + 0.5; },
                              [](double, const Param&) { return 0.5; }};
    }
    if (id == "unbounded_y") {
        double k = get(p, "coef", 0.25);
        return DominatingPair{[](double, const Param&) { return 0.5; },
                              [k](double y, const Param&) { return k / std::sqrt(y) + 0.5; }};
    }
    return std::nullopt;
}

namespace {

struct Table3 {
    std::vector<double> xs, ys, ts;
    std::vector<double> h;  // [ix][iy][it]

    double at(std::size_t i, std::size_t j, std::size_t k) const { return h[(i * ys.size() + j) * ts.size() + k]; }
};

// Index of the left node and the weight of the right one.
std::pair<std::size_t, double> bracket(const std::vector<double>& axis, double v) {
    if (axis.size() == 1) return {0, 0.0};
    v = std::clamp(v, axis.front(), axis.back());
    auto it = std::upper_bound(axis.begin(), axis.end(), v);
    std::size_t i = it == axis.begin() ? 0 : std::size_t(it - axis.begin()) - 1;
    i = std::min(i, axis.size() - 2);
    double w = (v - axis[i]) / (axis[i + 1] - axis[i]);
    return {i, std::clamp(w, 0.0, 1.0)};
}

}  // namespace

ParametricCost read_tabulated_cost(const std::string& path) {
    auto table = csv::read(path);
    const auto cx = table.column("x"), cy = table.column("y"), ct = table.column("t"), ch = table.column("h");
    auto tab = std::make_shared<Table3>();
    struct Row {
        double x, y, t, h;
    };
    std::vector<Row> rows;
    for (const auto& r : table.rows) {
        Row row{csv::to_double(r[cx], path), csv::to_double(r[cy], path), csv::to_double(r[ct], path),
                csv::to_double(r[ch], path)};
        if (!std::isfinite(row.h) || row.h < 0.0) throw InvalidInput(path + ": cost values must be finite and >= 0");
        rows.push_back(row);
        tab->xs.push_back(row.x);
        tab->ys.push_back(row.y);
        tab->ts.push_back(row.t);
    }
    for (auto* axis : {&tab->xs, &tab->ys, &tab->ts}) {
        std::sort(axis->begin(), axis->end());
        axis->erase(std::unique(axis->begin(), axis->end()), axis->end());
    }
    const std::size_t total = tab->xs.size() * tab->ys.size() * tab->ts.size();
    if (rows.size() != total || total == 0)
        throw InvalidInput(path + ": tabulated cost must cover a full rectilinear grid");
    tab->h.assign(total, std::numeric_limits<double>::quiet_NaN());
    double hmax = 0.0;
    for (const auto& r : rows) {
        auto idx = [](const std::vector<double>& axis, double v) {
            return std::size_t(std::lower_bound(axis.begin(), axis.end(), v) - axis.begin());
        };
        std::size_t k = (idx(tab->xs, r.x) * tab->ys.size() + idx(tab->ys, r.y)) * tab->ts.size() + idx(tab->ts, r.t);
        if (!std::isnan(tab->h[k])) throw InvalidInput(path + ": duplicate grid node");
        tab->h[k] = r.h;
        hmax = std::max(hmax, r.h);
    }
    CostFn fn = [tab](double x, double y, const Param& t) {
        auto [i, wx] = bracket(tab->xs, x);
        auto [j, wy] = bracket(tab->ys, y);
        auto [k, wt] = bracket(tab->ts, t[0]);
        auto node = [&](std::size_t di, std::size_t dj, std::size_t dk) {
            std::size_t ii = std::min(i + di, tab->xs.size() - 1), jj = std::min(j + dj, tab->ys.size() - 1),
                        kk = std::min(k + dk, tab->ts.size() - 1);
            return tab->at(ii, jj, kk);
        };
        double v = 0.0;
        for (std::size_t di = 0; di < 2; ++di)
            for (std::size_t dj = 0; dj < 2; ++dj)
                for (std::size_t dk = 0; dk < 2; ++dk)
                    v += (di ? wx : 1 - wx) * (dj ? wy : 1 - wy) * (dk ? wt : 1 - wt) * node(di, dj, dk);
        return v;
    };
    return ParametricCost("tabulated", std::move(fn), {}, hmax);
}

}  // namespace pmonge
