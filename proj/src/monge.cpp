#include "pmonge/monge.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "pmonge/csv.hpp"
#include "pmonge/errors.hpp"
#include "parallel.hpp"

namespace pmonge {

std::string to_string(Pipeline p) {
    switch (p) {
        case Pipeline::fixed: return "fixed";
        case Pipeline::target_path: return "target-path";
        case Pipeline::full: return "full";
    }
    return "fixed";
}

Pipeline parse_pipeline(const std::string& s) {
    if (s == "fixed") return Pipeline::fixed;
    if (s == "target-path") return Pipeline::target_path;
    if (s == "full") return Pipeline::full;
    throw ConfigError("unknown pipeline '" + s + "' (expected fixed, target-path or full)");
}

EpsilonBudget EpsilonBudget::for_pipeline(Pipeline p, double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("eps must be positive and finite");
    EpsilonBudget b;
    b.eps = eps;
    b.split_rule = p;
    std::vector<std::pair<std::string, int>> parts;
    switch (p) {
        case Pipeline::fixed:
            b.eps1 = eps / 5.0;
            parts = {{"plan", 1}, {"oscillation", 2}, {"remainder", 1}, {"completion", 1}};
            break;
        case Pipeline::target_path:
            b.eps1 = eps / 6.0;
            parts = {{"plan", 1}, {"oscillation", 2}, {"region_y", 2}, {"remainder", 1}};
            break;
        case Pipeline::full:
            b.eps1 = eps / 7.0;
            parts = {{"plan", 1}, {"oscillation", 2}, {"region_x", 2}, {"region_y", 2}};
            break;
    }
    b.eps_K = b.eps1;
    for (const auto& [name, count] : parts) b.slices.push_back({name, double(count) * b.eps1, 0.0});
    return b;
}

void EpsilonBudget::record(const std::string& name, double usage) {
    for (auto& s : slices)
        if (s.name == name) {
            s.usage = usage;
            return;
        }
    throw InvalidInput("unknown budget slice '" + name + "'");
}

const BudgetSlice& EpsilonBudget::slice(const std::string& name) const {
    for (const auto& s : slices)
        if (s.name == name) return s;
    throw InvalidInput("unknown budget slice '" + name + "'");
}

std::string EpsilonBudget::binding() const {
    std::string best = "discretization";
    double ratio = 0.0;
    for (const auto& s : slices) {
        if (!(s.allocation > 0.0)) continue;
        double r = s.usage / s.allocation;
        if (r > ratio) {
            ratio = r;
            best = s.name;
        }
    }
    return best;
}

SourceParametrization SourceParametrization::make(GridDensity mu, Interval support) {
    if (!(support.lo >= 0.0 && support.hi <= 1.0 && support.lo < support.hi))
        throw InvalidInput("source support must be a nondegenerate subinterval of [0,1]");
    SourceParametrization s{std::move(mu), support, 0.0};
    s.d_min = s.mu.min_density(support.lo, support.hi);
    if (!(s.d_min > 0.0)) throw InvalidInput("source density must be bounded away from 0 on its support");
    return s;
}

std::vector<QuantileSkorohodMap> project_cell_targets(const Plan& plan, std::span<const double> row_breaks,
                                                      const std::vector<std::vector<Interval>>& cells,
                                                      bool domain_is_mass) {
    if (row_breaks.size() != plan.rows + 1) throw InvalidInput("row breaks must have rows + 1 entries");
    const std::size_t m = plan.cols;
    std::vector<QuantileSkorohodMap> out;
    out.reserve(cells.size());
    std::vector<double> acc(m);
    for (const auto& pieces : cells) {
        std::fill(acc.begin(), acc.end(), 0.0);
        double length = 0.0;
        for (const auto& iv : pieces) {
            length += iv.length();
            if (!(iv.hi > iv.lo)) continue;
            // Rows are ordered along the cell coordinate; find the overlapping range.
            auto first = std::upper_bound(row_breaks.begin(), row_breaks.end(), iv.lo);
            std::size_t i = first == row_breaks.begin() ? 0 : std::size_t(first - row_breaks.begin()) - 1;
            for (; i < plan.rows && row_breaks[i] < iv.hi; ++i) {
                const double lo = row_breaks[i], hi = row_breaks[i + 1];
                if (!(hi > lo)) continue;
                const double overlap = std::min(hi, iv.hi) - std::max(lo, iv.lo);
                if (overlap <= 0.0) continue;
                const double frac = std::min(1.0, overlap / (hi - lo));
                const auto row = plan.row(i);
                for (std::size_t j = 0; j < m; ++j) acc[j] += frac * row[j];
            }
        }
        // Entropic plans leave underflow-scale mass everywhere; drop it so the
        // map's left edge sits on the bulk of the cell's target.
        double total = 0.0;
        for (double v : acc) total += v;
        for (double& v : acc)
            if (v < 1e-14 * total) v = 0.0;
        std::size_t a = 0, b = m;
        while (a < m && acc[a] <= 0.0) ++a;
        while (b > a && acc[b - 1] <= 0.0) --b;
        std::vector<double> masses(acc.begin() + long(a), acc.begin() + long(b));
        double mass = 0.0;
        for (double v : masses) mass += v;
        out.emplace_back(m, a, std::move(masses), domain_is_mass ? mass : length);
    }
    return out;
}

namespace {

// Largest spread of h over nine x samples of each cell's source range, for y
// on a 33-point lattice of the slice's y region.
double realized_oscillation(const FamilySlice& sl, Pipeline p, const ParametricCost& h) {
    constexpr std::size_t kx = 9, ky = 33;
    double best = 0.0;
    std::vector<double> ys(ky);
    for (std::size_t q = 0; q < ky; ++q)
        ys[q] = sl.y_region.lo + sl.y_region.length() * double(q) / double(ky - 1);
    for (std::size_t j = 0; j < sl.cell_lo.size(); ++j) {
        if (!(sl.targets[j].mass() > 0.0)) continue;
        double xlo = sl.cell_lo[j], xhi = sl.cell_hi[j];
        if (p != Pipeline::full) {
            xlo = sl.mu.quantile(xlo);
            xhi = sl.mu.quantile(xhi);
        }
        xlo = std::max(xlo, sl.x_region.lo);
        xhi = std::min(xhi, sl.x_region.hi);
        if (xhi < xlo) continue;
        for (double y : ys) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (std::size_t k = 0; k < kx; ++k) {
                double v = h.eval(xlo + (xhi - xlo) * double(k) / double(kx - 1), y, sl.t);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            best = std::max(best, hi - lo);
        }
    }
    return best;
}

FamilySlice build_slice(const MongeMapFamily& fam, const Param& t, const Plan& plan, GridDensity mu,
                        GridDensity nu) {
    const auto& cover = *fam.cover;
    FamilySlice sl;
    sl.t = t;
    sl.delta = delta(cover, t);
    sl.alpha = select_alpha(cover, t);
    sl.x_region = cover.x_regions[sl.alpha];
    sl.y_region = cover.y_regions[sl.alpha];
    const std::size_t n = mu.size();
    std::vector<std::vector<Interval>> pieces;
    std::vector<double> breaks(n + 1);
    bool has_remainder = false;
    if (fam.pipeline != Pipeline::full) {
        const double a = mu.cdf(fam.support.lo), b = mu.cdf(fam.support.hi);
        sl.core = {a, b};
        sl.delta_tilde = sl.delta * fam.d_min;
        const auto part = cells(sl.delta_tilde / (b - a), t);
        for (std::size_t j = 1; j <= part.count; ++j) {
            Interval c = part.cell(j);
            double lo = a + (b - a) * c.lo, hi = j == part.count ? b : a + (b - a) * c.hi;
            sl.cell_lo.push_back(lo);
            sl.cell_hi.push_back(hi);
            pieces.push_back({{lo, hi}});
        }
        std::copy(mu.cumulative().begin(), mu.cumulative().end(), breaks.begin());
        std::vector<Interval> rest;
        if (a > 0.0) rest.push_back({0.0, a});
        if (b < 1.0) rest.push_back({b, 1.0});
        if (!rest.empty()) {
            pieces.push_back(rest);
            has_remainder = true;
        }
    } else {
        sl.core = {0.0, 1.0};
        sl.delta_tilde = sl.delta;
        const auto part = cells(sl.delta_tilde, t);
        for (std::size_t j = 1; j <= part.count; ++j) {
            Interval c = part.cell(j);
            sl.cell_lo.push_back(c.lo);
            sl.cell_hi.push_back(j == part.count ? 1.0 : c.hi);
            pieces.push_back({{sl.cell_lo.back(), sl.cell_hi.back()}});
        }
        for (std::size_t i = 0; i <= n; ++i) breaks[i] = double(i) / double(n);
    }
    auto maps = project_cell_targets(plan, breaks, pieces, fam.pipeline == Pipeline::full);
    if (has_remainder) {
        if (maps.back().mass() > 0.0) sl.remainder.emplace(maps.back());
        maps.pop_back();
    }
    sl.targets = std::move(maps);
    double total = sl.remainder ? sl.remainder->mass() : 0.0;
    for (const auto& m : sl.targets) total += m.mass();
    if (std::abs(total - 1.0) > 1e-8)
        throw SolverBugError("cell targets carry mass " + csv::num(total) + " instead of 1");
    sl.mu = std::move(mu);
    sl.nu = std::move(nu);
    sl.cell_oscillation = realized_oscillation(sl, fam.pipeline, fam.cost);
    return sl;
}

double outside(const GridDensity& m, Interval r) { return m.cdf(r.lo) + (1.0 - m.cdf(r.hi)); }

std::vector<double> default_levels() {
    std::vector<double> v;
    for (int k = 1; k <= 64; ++k) v.push_back(double(k));
    for (double x = 128.0; x <= 1048576.0; x *= 2.0) v.push_back(x);
    return v;
}

MongeMapFamily assemble(Pipeline p, const MeasurePath& mu_path, const MeasurePath& nu_path,
                        const ParametricCost& cost, const ParameterSpace& space, double eps,
                        const AssemblyOptions& opts) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("eps must be positive and finite");
    const auto& ts = space.points();
    MongeMapFamily fam;
    fam.pipeline = p;
    fam.space = space;
    fam.mu_path = mu_path;
    fam.nu_path = nu_path;
    fam.cost = cost;
    double eps_inner = eps;
    double tail_usage = 0.0;
    if (!cost.bounded_by()) {
        if (!opts.dominating) throw ConfigError("cost " + cost.family_id() + " is unbounded and has no dominating pair");
        auto levels = opts.truncation_levels.empty() ? default_levels() : opts.truncation_levels;
        double N = truncation_level(*opts.dominating, mu_path, nu_path, ts, eps, levels);
        double r = 0.5 * N;
        tail_usage = 2.0 * tail_curve(*opts.dominating, mu_path, nu_path, ts, std::span<const double>(&r, 1)).tails[0];
        fam.truncation_level = N;
        fam.cost = truncate(cost, N);
        eps_inner = 0.5 * eps;
    }
    fam.budget = EpsilonBudget::for_pipeline(p, eps_inner);
    if (fam.truncation_level) fam.budget.slices.push_back({"truncation", 0.5 * eps, tail_usage});
    const double eps1 = fam.budget.eps1;
    fam.mass_scale = std::max(1e-300, sup_bound(fam.cost, ts));

    if (p != Pipeline::full) {
        fam.support = opts.support.value_or(Interval{0.0, 1.0});
        auto src = SourceParametrization::make(mu_path(ts.front()), fam.support);
        fam.d_min = src.d_min;
    } else {
        if (opts.support) throw ConfigError("a declared source support applies to fixed and target-path only");
        fam.support = {0.0, 1.0};
        fam.d_min = std::numeric_limits<double>::infinity();
        for (const auto& t : ts) fam.d_min = std::min(fam.d_min, mu_path(t).min_density());
    }

    CoverOptions co;
    co.target_centers = opts.target_centers;
    co.mass_scale = fam.mass_scale;
    co.margin = opts.region_margin;
    co.full_y = p == Pipeline::fixed;
    co.x_regions = p == Pipeline::full;
    co.kappa = opts.kappa;
    if (opts.support) co.kappa.x_region = *opts.support;
    fam.cover = build_cover(fam.cost, space, eps1, {nu_path, mu_path}, co);

    PlanPathOptions po;
    po.warm_start = opts.warm_start;
    po.workers = opts.workers;
    auto path = continuous_plan_path(fam.cost, mu_path, nu_path, ts, fam.budget.eps_K, po);
    fam.plan_values = path.values;
    fam.exact_values = path.exact_values;
    fam.potentials = std::move(path.potentials);

    fam.slices.resize(ts.size());
    detail::parallel_for(ts.size(), opts.workers, [&](std::size_t k) {
        fam.slices[k] = build_slice(fam, ts[k], path.plans[k], mu_path(ts[k]), nu_path(ts[k]));
    });

    double plan_gap = 0.0, osc = 0.0, rem = 0.0, ry = 0.0, rx = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const auto& sl = fam.slices[k];
        plan_gap = std::max(plan_gap, fam.plan_values[k] - fam.exact_values[k]);
        osc = std::max(osc, 2.0 * sl.cell_oscillation);
        if (sl.remainder) rem = std::max(rem, fam.mass_scale * sl.remainder->mass());
        ry = std::max(ry, fam.mass_scale * outside(sl.nu, sl.y_region));
        rx = std::max(rx, fam.mass_scale * outside(sl.mu, sl.x_region));
    }
    fam.budget.record("plan", std::max(0.0, plan_gap));
    fam.budget.record("oscillation", osc);
    switch (p) {
        case Pipeline::fixed:
            fam.budget.record("remainder", rem);
            fam.budget.record("completion", ry);
            break;
        case Pipeline::target_path:
            fam.budget.record("region_y", ry);
            fam.budget.record("remainder", rem);
            break;
        case Pipeline::full:
            fam.budget.record("region_x", rx);
            fam.budget.record("region_y", ry);
            break;
    }
    return fam;
}

}  // namespace

std::size_t MongeMapFamily::slice_index(const Param& t, bool* off_grid) const {
    if (slices.empty()) throw DomainError("family has no slices");
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < slices.size(); ++k) {
        const Param& s = slices[k].t;
        double d = 0.0;
        if (t.index >= 0 && s.index >= 0) {
            d = t.index == s.index ? 0.0 : 1.0;
        } else {
            for (std::size_t i = 0; i < std::max(t.dim, s.dim); ++i) d += (t[i] - s[i]) * (t[i] - s[i]);
            d = std::sqrt(d);
        }
        if (d < bd) {
            bd = d;
            best = k;
        }
    }
    if (off_grid) *off_grid = bd > 1e-12;
    return best;
}

FamilySlice MongeMapFamily::slice_at(const Param& t) const {
    if (!mu_path || !nu_path || !cover) throw InvalidInput("re-assembly needs the marginal paths and the cover");
    bool off = false;
    std::size_t k = slice_index(t, &off);
    if (!off) return slices[k];
    GridDensity mu = mu_path(t), nu = nu_path(t);
    CostMatrix C = cost_matrix(cost, mu.size(), nu.size(), t);
    const EntropicPotentials* warm = k < potentials.size() ? &potentials[k] : nullptr;
    auto r = solve_entropic(C, mu.weights(), nu.weights(), select_eta(C, budget.eps_K),
                            default_entropic_tol(C, budget.eps_K), 200000, warm);
    return build_slice(*this, t, r.plan, std::move(mu), std::move(nu));
}

MongeMapFamily assemble_fixed(const GridDensity& mu, const GridDensity& nu, const ParametricCost& cost,
                              const ParameterSpace& space, double eps, const AssemblyOptions& opts) {
    return assemble(
        Pipeline::fixed, [mu](const Param&) { return mu; }, [nu](const Param&) { return nu; }, cost, space, eps,
        opts);
}

MongeMapFamily assemble_target_path(const GridDensity& mu, const MeasurePath& nu_path, const ParametricCost& cost,
                                    const ParameterSpace& space, double eps, const AssemblyOptions& opts) {
    return assemble(Pipeline::target_path, [mu](const Param&) { return mu; }, nu_path, cost, space, eps, opts);
}

MongeMapFamily assemble_full(const MeasurePath& mu_path, const MeasurePath& nu_path, const ParametricCost& cost,
                             const ParameterSpace& space, double eps, const AssemblyOptions& opts) {
    return assemble(Pipeline::full, mu_path, nu_path, cost, space, eps, opts);
}

double evaluate(const FamilySlice& sl, Pipeline p, double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("x = " + csv::num(x) + " outside [0,1]");
    if (sl.cell_lo.empty()) throw DomainError("slice has no cells");
    double s = p == Pipeline::full ? x : sl.mu.cdf(x);
    const bool in_core = s >= sl.core.lo && (s < sl.core.hi || (s == sl.core.hi && sl.core.hi == 1.0));
    if (!in_core && sl.remainder) {
        double u = std::min(s, sl.core.lo) + std::max(0.0, s - sl.core.hi);
        return (*sl.remainder)(std::min(u, sl.remainder->domain_length()));
    }
    s = std::clamp(s, sl.core.lo, sl.core.hi);
    auto it = std::upper_bound(sl.cell_lo.begin(), sl.cell_lo.end(), s);
    std::size_t j = it == sl.cell_lo.begin() ? 0 : std::size_t(it - sl.cell_lo.begin()) - 1;
    const auto& target = sl.targets[j];
    double u = p == Pipeline::full ? sl.mu.mass_between(sl.cell_lo[j], x) : s - sl.cell_lo[j];
    return target(std::clamp(u, 0.0, target.domain_length()));
}

Evaluation evaluate(const MongeMapFamily& family, const Param& t, double x) {
    Evaluation e;
    std::size_t k = family.slice_index(t, &e.off_grid);
    e.y = evaluate(family.slices[k], family.pipeline, x);
    return e;
}

std::vector<std::pair<double, double>> quadrature_nodes(const FamilySlice& sl, Pipeline p, std::size_t k) {
    if (k == 0) throw InvalidInput("quadrature needs k >= 1");
    const std::size_t n = sl.mu.size();
    std::vector<double> cuts;
    cuts.reserve(n + 1 + sl.cell_lo.size() + 2);
    for (std::size_t i = 0; i <= n; ++i) cuts.push_back(double(i) / double(n));
    auto to_x = [&](double c) { return p == Pipeline::full ? c : sl.mu.quantile(std::clamp(c, 0.0, 1.0)); };
    for (double lo : sl.cell_lo) cuts.push_back(to_x(lo));
    if (sl.remainder) {
        cuts.push_back(to_x(sl.core.lo));
        cuts.push_back(to_x(sl.core.hi));
    }
    for (double& c : cuts) c = std::clamp(c, 0.0, 1.0);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<std::pair<double, double>> nodes;
    nodes.reserve(cuts.size() * k);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        const double m = sl.mu.mass_between(a, b);
        if (!(m > 0.0)) continue;
        for (std::size_t q = 0; q < k; ++q)
            nodes.emplace_back(a + (b - a) * (double(q) + 0.5) / double(k), m / double(k));
    }
    return nodes;
}

GridDensity slice_pushforward(const FamilySlice& sl, Pipeline p, std::size_t bins, std::size_t k) {
    if (bins == 0) throw InvalidInput("pushforward needs bins >= 1");
    std::vector<double> w(bins, 0.0);
    for (const auto& [x, m] : quadrature_nodes(sl, p, k)) {
        const double y = evaluate(sl, p, x);
        w[std::min(bins - 1, std::size_t(std::max(0.0, y) * double(bins)))] += m;
    }
    return GridDensity::normalized(std::move(w));
}

double monge_cost(const FamilySlice& sl, Pipeline p, const ParametricCost& h, std::size_t k) {
    double total = 0.0;
    for (const auto& [x, m] : quadrature_nodes(sl, p, k)) total += m * h.eval(x, evaluate(sl, p, x), sl.t);
    return total;
}

double monge_cost(const MongeMapFamily& family, const Param& t, std::size_t k) {
    return monge_cost(family.slices[family.slice_index(t)], family.pipeline, family.cost, k);
}

std::string family_csv(const MongeMapFamily& family) {
    std::ostringstream out;
    out << "t,j,cell_lo,cell_hi,mass\n";
    for (const auto& sl : family.slices) {
        const std::string t = csv::num(sl.t.value());
        if (sl.remainder)
            out << t << ",0," << csv::num(sl.core.lo) << ',' << csv::num(sl.core.hi) << ','
                << csv::num(sl.remainder->mass()) << '\n';
        for (std::size_t j = 0; j < sl.targets.size(); ++j)
            out << t << ',' << j + 1 << ',' << csv::num(sl.cell_lo[j]) << ',' << csv::num(sl.cell_hi[j]) << ','
                << csv::num(sl.targets[j].mass()) << '\n';
    }
    return out.str();
}

std::string targets_csv(const MongeMapFamily& family) {
    std::ostringstream out;
    out << "t,j,bin,mass\n";
    auto dump = [&](const std::string& t, std::size_t j, const QuantileSkorohodMap& m) {
        auto masses = m.bin_masses();
        for (std::size_t b = 0; b < masses.size(); ++b)
            if (masses[b] > 0.0) out << t << ',' << j << ',' << m.first_bin() + b << ',' << csv::num(masses[b]) << '\n';
    };
    for (const auto& sl : family.slices) {
        const std::string t = csv::num(sl.t.value());
        if (sl.remainder) dump(t, 0, *sl.remainder);
        for (std::size_t j = 0; j < sl.targets.size(); ++j) dump(t, j + 1, sl.targets[j]);
    }
    return out.str();
}

std::vector<FamilySlice> load_slices(const std::string& family_path, const std::string& targets_path,
                                     Pipeline pipeline, const ParameterSpace& space, const MeasurePath& mu_path,
                                     const MeasurePath& nu_path) {
    if (space.dim() != 1) throw InvalidInput("family reload supports one-dimensional parameter spaces");
    auto fam = csv::read(family_path);
    auto tg = csv::read(targets_path);
    const auto ft = fam.column("t"), fj = fam.column("j"), flo = fam.column("cell_lo"), fhi = fam.column("cell_hi");
    const auto tt = tg.column("t"), tj = tg.column("j"), tb = tg.column("bin"), tm = tg.column("mass");

    // (t, j) -> sparse bins
    std::map<std::pair<double, long>, std::map<long, double>> bins;
    for (const auto& r : tg.rows)
        bins[{csv::to_double(r[tt], targets_path), csv::to_long(r[tj], targets_path)}]
            [csv::to_long(r[tb], targets_path)] = csv::to_double(r[tm], targets_path);

    auto grid_param = [&](double v) {
        for (const auto& p : space.points())
            if (std::abs(p.value() - v) <= 1e-12) return p;
        return Param::scalar(v);
    };

    std::vector<FamilySlice> out;
    std::vector<double> order;
    std::map<double, std::size_t> index;
    struct Row {
        long j;
        double lo, hi;
    };
    std::map<double, std::vector<Row>> rows;
    for (const auto& r : fam.rows) {
        double t = csv::to_double(r[ft], family_path);
        if (!rows.count(t)) order.push_back(t);
        rows[t].push_back({csv::to_long(r[fj], family_path), csv::to_double(r[flo], family_path),
                           csv::to_double(r[fhi], family_path)});
    }
    for (double tv : order) {
        FamilySlice sl;
        sl.t = grid_param(tv);
        sl.mu = mu_path(sl.t);
        sl.nu = nu_path(sl.t);
        const std::size_t m = sl.nu.size();
        auto make_map = [&](long j, double domain) {
            auto it = bins.find({tv, j});
            if (it == bins.end() || it->second.empty()) return QuantileSkorohodMap(m, 0, {}, domain);
            long first = it->second.begin()->first, last = it->second.rbegin()->first;
            if (first < 0 || std::size_t(last) >= m) throw InvalidInput(targets_path + ": bin index out of range");
            std::vector<double> masses(std::size_t(last - first + 1), 0.0);
            for (const auto& [b, v] : it->second) masses[std::size_t(b - first)] = v;
            return QuantileSkorohodMap(m, std::size_t(first), std::move(masses), domain);
        };
        std::optional<Row> rem;
        for (const auto& r : rows[tv]) {
            if (r.j == 0) {
                rem = r;
                continue;
            }
            sl.cell_lo.push_back(r.lo);
            sl.cell_hi.push_back(r.hi);
            double domain = pipeline == Pipeline::full ? sl.mu.mass_between(r.lo, r.hi) : r.hi - r.lo;
            sl.targets.push_back(make_map(r.j, domain));
        }
        if (sl.cell_lo.empty()) throw InvalidInput(family_path + ": slice without cells");
        sl.core = {sl.cell_lo.front(), sl.cell_hi.back()};
        if (rem) {
            sl.core = {rem->lo, rem->hi};
            sl.remainder.emplace(make_map(0, rem->lo + (1.0 - rem->hi)));
        }
        sl.delta_tilde = sl.cell_hi.front() - sl.cell_lo.front();
        out.push_back(std::move(sl));
    }
    return out;
}

}  // namespace pmonge
