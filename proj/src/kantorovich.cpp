#include "pmonge/kantorovich.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "pmonge/csv.hpp"
#include "pmonge/errors.hpp"
#include "parallel.hpp"

namespace pmonge {

CostMatrix::CostMatrix(std::size_t n, std::size_t m, std::vector<double> v)
    : rows(n), cols(m), values(std::move(v)) {
    if (values.size() != n * m) throw InvalidInput("cost matrix size mismatch");
    for (double c : values)
        if (!std::isfinite(c) || c < 0.0) throw InvalidInput("cost matrix entries must be finite and >= 0");
}

double CostMatrix::max() const {
    double m = 0.0;
    for (double c : values) m = std::max(m, c);
    return m;
}

CostMatrix cost_matrix(const ParametricCost& c, std::size_t n, std::size_t m, const Param& t) {
    std::vector<double> v(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = (double(i) + 0.5) / double(n);
        for (std::size_t j = 0; j < m; ++j) v[i * m + j] = c.eval(x, (double(j) + 0.5) / double(m), t);
    }
    return {n, m, std::move(v)};
}

double Plan::cost(const CostMatrix& c) const {
    if (c.rows != rows || c.cols != cols) throw InvalidInput("plan and cost matrix shapes differ");
    double s = 0.0;
    for (std::size_t k = 0; k < mass.size(); ++k) s += mass[k] * c.values[k];
    return s;
}

double Plan::marginal_error() const {
    double err = 0.0;
    std::vector<double> col(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        double r = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            r += mass[i * cols + j];
            col[j] += mass[i * cols + j];
        }
        err = std::max(err, std::abs(r - row_marginal[i]));
    }
    for (std::size_t j = 0; j < cols; ++j) err = std::max(err, std::abs(col[j] - col_marginal[j]));
    return err;
}

void Plan::validate(double tol) const {
    if (mass.size() != rows * cols || row_marginal.size() != rows || col_marginal.size() != cols)
        throw InvalidInput("plan shape mismatch");
    for (double v : mass)
        if (!(v >= 0.0)) throw InvalidInput("plan entries must be nonnegative");
    if (marginal_error() > tol) throw InvalidInput("plan marginals off by " + csv::num(marginal_error()));
}

namespace {

void check_masses(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x) || x < 0.0) throw InvalidInput(std::string(what) + " masses must be finite and >= 0");
}

std::vector<double> balanced_nu(std::span<const double> mu, std::span<const double> nu) {
    check_masses(mu, "source");
    check_masses(nu, "target");
    const double sm = std::accumulate(mu.begin(), mu.end(), 0.0);
    const double sn = std::accumulate(nu.begin(), nu.end(), 0.0);
    if (std::abs(sm - sn) > 1e-10)
        throw ImbalanceError("marginal masses differ: " + csv::num(sm) + " vs " + csv::num(sn));
    std::vector<double> out(nu.begin(), nu.end());
    if (sn > 0.0)
        for (double& x : out) x *= sm / sn;
    return out;
}

// Network simplex for the bipartite transportation problem. Nodes 0..n-1 are
// sources, n..n+m-1 sinks, n+m the artificial root. Arc ids below n*m are real
// arcs i -> n+j; id n*m + v is the artificial arc between v and the root.
class NetworkSimplex {
public:
    NetworkSimplex(const CostMatrix& c, std::span<const double> mu, std::span<const double> nu)
        : c_(c), n_(c.rows), m_(c.cols), nodes_(n_ + m_ + 1), root_(n_ + m_) {
        real_ = n_ * m_;
        flow_.assign(real_ + nodes_, 0.0);
        big_m_ = 1.0 + double(n_ + m_) * std::max(1.0, c.max());
        art_up_.assign(nodes_, false);
        tree_.reserve(nodes_ - 1);
        for (std::size_t v = 0; v < root_; ++v) {
            double supply = v < n_ ? mu[v] : -nu[v - n_];
            art_up_[v] = supply > 0.0;
            flow_[real_ + v] = std::abs(supply);
            tree_.push_back(real_ + v);
        }
        parent_.assign(nodes_, root_);
        parent_arc_.assign(nodes_, 0);
        depth_.assign(nodes_, 0);
        pi_.assign(nodes_, 0.0);
        rebuild();
        block_ = std::max<std::size_t>(16, std::size_t(std::sqrt(double(real_))));
    }

    std::size_t run(std::size_t max_pivots) {
        std::size_t pivots = 0;
        const double tol = 1e-12 * big_m_;
        while (true) {
            std::size_t e = price(tol);
            if (e == real_) break;
            if (++pivots > max_pivots)
                throw CycleGuardError("network simplex exceeded " + std::to_string(max_pivots) + " pivots");
            pivot(e);
        }
        for (std::size_t v = 0; v < root_; ++v)
            if (flow_[real_ + v] > 1e-9) throw SolverBugError("artificial flow remains after optimization");
        return pivots;
    }

    double flow(std::size_t i, std::size_t j) const { return flow_[i * m_ + j]; }

    DualPotentials duals() const {
        DualPotentials d;
        d.u.resize(n_);
        d.v.resize(m_);
        for (std::size_t i = 0; i < n_; ++i) d.u[i] = -pi_[i];
        for (std::size_t j = 0; j < m_; ++j) d.v[j] = pi_[n_ + j];
        // Remove the root offset so the smallest row potential is 0.
        double shift = n_ ? *std::min_element(d.u.begin(), d.u.end()) : 0.0;
        for (double& u : d.u) u -= shift;
        for (double& v : d.v) v += shift;
        return d;
    }

private:
    std::size_t tail(std::size_t a) const {
        if (a < real_) return a / m_;
        std::size_t v = a - real_;
        return art_up_[v] ? v : root_;
    }
    std::size_t head(std::size_t a) const {
        if (a < real_) return n_ + a % m_;
        std::size_t v = a - real_;
        return art_up_[v] ? root_ : v;
    }
    double arc_cost(std::size_t a) const { return a < real_ ? c_.values[a] : big_m_; }

    double reduced(std::size_t a) const { return arc_cost(a) + pi_[tail(a)] - pi_[head(a)]; }

    // Block pricing: most negative reduced cost within the first block that has one.
    std::size_t price(double tol) {
        std::size_t best = real_;
        double best_rc = -tol;
        for (std::size_t scanned = 0; scanned < real_;) {
            std::size_t end = std::min(scanned + block_, real_);
            for (; scanned < end; ++scanned) {
                std::size_t a = (next_ + scanned) % real_;
                double rc = reduced(a);
                if (rc < best_rc || (rc == best_rc && best != real_ && a < best)) {
                    best_rc = rc;
                    best = a;
                }
            }
            if (best != real_) {
                next_ = (next_ + scanned) % real_;
                return best;
            }
        }
        return real_;
    }

    // True if the tree arc joining v to its parent points from v upward.
    bool points_up(std::size_t v) const { return tail(parent_arc_[v]) == v; }

    void pivot(std::size_t e) {
        const std::size_t a = tail(e), b = head(e);
        // Flow travels a -> b on e and returns b -> apex -> a through the tree.
        std::size_t u = a, w = b;
        while (u != w) {
            if (depth_[u] >= depth_[w]) u = parent_[u];
            else w = parent_[w];
        }
        const std::size_t apex = u;
        double delta = std::numeric_limits<double>::infinity();
        std::size_t leave_node = nodes_;
        // a side: flow moves parent -> v, so arcs pointing up decrease.
        for (std::size_t v = a; v != apex; v = parent_[v]) {
            if (points_up(v) && flow_[parent_arc_[v]] < delta) {
                delta = flow_[parent_arc_[v]];
                leave_node = v;
            }
        }
        // b side: flow moves v -> parent, so arcs pointing down decrease; the
        // last blocking arc in cycle order wins ties.
        for (std::size_t v = b; v != apex; v = parent_[v]) {
            if (!points_up(v) && flow_[parent_arc_[v]] <= delta) {
                delta = flow_[parent_arc_[v]];
                leave_node = v;
            }
        }
        if (leave_node == nodes_) throw SolverBugError("unbounded pivot in a bounded transportation problem");
        for (std::size_t v = a; v != apex; v = parent_[v]) flow_[parent_arc_[v]] += points_up(v) ? -delta : delta;
        for (std::size_t v = b; v != apex; v = parent_[v]) flow_[parent_arc_[v]] += points_up(v) ? delta : -delta;
        flow_[e] += delta;
        const std::size_t leaving = parent_arc_[leave_node];
        flow_[leaving] = 0.0;
        for (std::size_t v = a; v != apex; v = parent_[v])
            if (flow_[parent_arc_[v]] < 1e-14) flow_[parent_arc_[v]] = 0.0;
        for (std::size_t v = b; v != apex; v = parent_[v])
            if (flow_[parent_arc_[v]] < 1e-14) flow_[parent_arc_[v]] = 0.0;
        *std::find(tree_.begin(), tree_.end(), leaving) = e;
        rebuild();
    }

    // Parent pointers, depths and potentials from the current tree arc set.
    void rebuild() {
        offset_.assign(nodes_ + 1, 0);
        for (std::size_t a : tree_) {
            ++offset_[tail(a) + 1];
            ++offset_[head(a) + 1];
        }
        for (std::size_t v = 0; v < nodes_; ++v) offset_[v + 1] += offset_[v];
        adj_.resize(2 * tree_.size());
        fill_ = offset_;
        for (std::size_t a : tree_) {
            adj_[fill_[tail(a)]++] = a;
            adj_[fill_[head(a)]++] = a;
        }
        queue_.clear();
        queue_.push_back(root_);
        parent_[root_] = root_;
        depth_[root_] = 0;
        pi_[root_] = 0.0;
        for (std::size_t q = 0; q < queue_.size(); ++q) {
            std::size_t v = queue_[q];
            for (std::size_t k = offset_[v]; k < offset_[v + 1]; ++k) {
                std::size_t a = adj_[k];
                if (v != root_ && a == parent_arc_[v]) continue;
                std::size_t w = tail(a) == v ? head(a) : tail(a);
                parent_[w] = v;
                parent_arc_[w] = a;
                depth_[w] = depth_[v] + 1;
                // Tree arcs have zero reduced cost: cost + pi_tail - pi_head = 0.
                pi_[w] = tail(a) == v ? pi_[v] + arc_cost(a) : pi_[v] - arc_cost(a);
                queue_.push_back(w);
            }
        }
        if (queue_.size() != nodes_) throw SolverBugError("spanning tree lost connectivity");
    }

    const CostMatrix& c_;
    std::size_t n_, m_, nodes_, root_, real_ = 0;
    double big_m_ = 1.0;
    std::vector<double> flow_;
    std::vector<bool> art_up_;
    std::vector<std::size_t> tree_;
    std::vector<std::size_t> parent_, parent_arc_, depth_;
    std::vector<double> pi_;
    std::vector<std::size_t> offset_, fill_, adj_, queue_;
    std::size_t block_ = 16, next_ = 0;
};

}  // namespace

KantorovichResult solve_exact(const CostMatrix& cost, std::span<const double> mu, std::span<const double> nu,
                              std::size_t max_pivots) {
    if (mu.size() != cost.rows || nu.size() != cost.cols) throw InvalidInput("marginal sizes do not match the cost");
    if (cost.rows == 0 || cost.cols == 0) throw InvalidInput("empty transportation problem");
    auto nub = balanced_nu(mu, nu);
    if (max_pivots == 0) max_pivots = std::max<std::size_t>(1000000, 50 * cost.rows * cost.cols);
    NetworkSimplex ns(cost, mu, nub);
    KantorovichResult r;
    r.pivots = ns.run(max_pivots);
    Plan& p = r.plan;
    p.rows = cost.rows;
    p.cols = cost.cols;
    p.row_marginal.assign(mu.begin(), mu.end());
    p.col_marginal.assign(nu.begin(), nu.end());
    p.mass.resize(cost.rows * cost.cols);
    for (std::size_t i = 0; i < cost.rows; ++i)
        for (std::size_t j = 0; j < cost.cols; ++j) p.mass[i * cost.cols + j] = ns.flow(i, j);
    r.value = p.cost(cost);
    r.dual = ns.duals();
    return r;
}

double select_eta(const CostMatrix& cost, double eps_K) {
    if (!(eps_K > 0.0)) throw DomainError("select_eta needs eps_K > 0");
    return eps_K / (2.0 * std::log(double(cost.rows * cost.cols) + 1.0));
}

double default_entropic_tol(const CostMatrix& cost, double eps_K) {
    return eps_K / (8.0 * std::max(1.0, cost.max()));
}

namespace {

// Sinkhorn restricted to the positive-mass rows and columns.
struct Reduced {
    std::vector<std::size_t> ri, cj;
    std::vector<double> a, b, c;  // masses and the restricted cost
};

double lse_shift(const double* v, std::size_t n) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, v[k]);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += std::exp(v[k] - mx);
    return mx + std::log(s);
}

struct SinkhornRun {
    std::size_t iterations = 0;
    double error = 0.0;
    bool converged = false;
};

// Alternates f and g updates at fixed eta until the column error after an f
// update is below tol. Returns with f updated last (rows exact).
SinkhornRun sinkhorn(const Reduced& r, double eta, double tol, std::size_t max_iter, std::vector<double>& f,
                     std::vector<double>& g) {
    const std::size_t n = r.a.size(), m = r.b.size();
    std::vector<double> buf(std::max(n, m));
    std::vector<double> la(n), lb(m);
    for (std::size_t i = 0; i < n; ++i) la[i] = std::log(r.a[i]);
    for (std::size_t j = 0; j < m; ++j) lb[j] = std::log(r.b[j]);
    std::vector<double> gt(m * n);  // transposed cost for column sweeps
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) gt[j * n + i] = r.c[i * m + j];
    auto update_f = [&] {
        for (std::size_t i = 0; i < n; ++i) {
            const double* ci = &r.c[i * m];
            for (std::size_t j = 0; j < m; ++j) buf[j] = (g[j] - ci[j]) / eta;
            f[i] = eta * (la[i] - lse_shift(buf.data(), m));
        }
    };
    auto update_g = [&] {
        for (std::size_t j = 0; j < m; ++j) {
            const double* cj = &gt[j * n];
            for (std::size_t i = 0; i < n; ++i) buf[i] = (f[i] - cj[i]) / eta;
            g[j] = eta * (lb[j] - lse_shift(buf.data(), n));
        }
    };

    // Kernel with the potentials absorbed; the iteration runs on the scalings
    // sa, sb and folds them back into f, g when they drift.
    std::vector<double> K(n * m), sa(n, 1.0), sb(m, 1.0), kb(n), kta(m);
    auto rebuild = [&] {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) K[i * m + j] = std::exp((f[i] + g[j] - r.c[i * m + j]) / eta);
        std::fill(sa.begin(), sa.end(), 1.0);
        std::fill(sb.begin(), sb.end(), 1.0);
    };
    auto absorb = [&] {
        for (std::size_t i = 0; i < n; ++i) f[i] += eta * std::log(sa[i]);
        for (std::size_t j = 0; j < m; ++j) g[j] += eta * std::log(sb[j]);
    };
    auto restart = [&] {
        absorb();
        update_g();
        update_f();
        rebuild();
    };
    constexpr double kDrift = 1e12;

    SinkhornRun run;
    update_f();
    rebuild();
    while (run.iterations < max_iter) {
        ++run.iterations;
        // Rows are exact here; measure the column error.
        std::fill(kta.begin(), kta.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double ai = sa[i];
            const double* Ki = &K[i * m];
            for (std::size_t j = 0; j < m; ++j) kta[j] += Ki[j] * ai;
        }
        double err = 0.0;
        bool bad = false;
        for (std::size_t j = 0; j < m; ++j) {
            err += std::abs(sb[j] * kta[j] - r.b[j]);
            if (!(kta[j] > 0.0) || !std::isfinite(kta[j])) bad = true;
        }
        run.error = err;
        if (err <= tol && std::isfinite(err)) {
            absorb();
            run.converged = true;
            return run;
        }
        if (bad) {
            restart();
            continue;
        }
        for (std::size_t j = 0; j < m; ++j) sb[j] = r.b[j] / kta[j];
        for (std::size_t i = 0; i < n; ++i) {
            const double* Ki = &K[i * m];
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += Ki[j] * sb[j];
            kb[i] = s;
            if (!(s > 0.0) || !std::isfinite(s)) bad = true;
        }
        if (bad) {
            restart();
            continue;
        }
        bool drift = false;
        for (std::size_t i = 0; i < n; ++i) {
            sa[i] = r.a[i] / kb[i];
            drift = drift || sa[i] > kDrift || sa[i] < 1.0 / kDrift;
        }
        for (std::size_t j = 0; j < m; ++j) drift = drift || sb[j] > kDrift || sb[j] < 1.0 / kDrift;
        if (drift) {
            absorb();
            rebuild();
        }
    }
    return run;
}

}  // namespace

EntropicResult solve_entropic(const CostMatrix& cost, std::span<const double> mu, std::span<const double> nu,
                              double eta, double tol, std::size_t max_iter, const EntropicPotentials* warm) {
    if (!(eta > 0.0)) throw DomainError("entropic regularization must be positive");
    if (!(tol > 0.0)) throw DomainError("entropic tolerance must be positive");
    if (mu.size() != cost.rows || nu.size() != cost.cols) throw InvalidInput("marginal sizes do not match the cost");
    auto nub = balanced_nu(mu, nu);
    const std::size_t N = cost.rows, M = cost.cols;
    Reduced r;
    for (std::size_t i = 0; i < N; ++i)
        if (mu[i] > 0.0) r.ri.push_back(i);
    for (std::size_t j = 0; j < M; ++j)
        if (nub[j] > 0.0) r.cj.push_back(j);
    const std::size_t n = r.ri.size(), m = r.cj.size();
    for (auto i : r.ri) r.a.push_back(mu[i]);
    for (auto j : r.cj) r.b.push_back(nub[j]);
    r.c.resize(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) r.c[i * m + j] = cost(r.ri[i], r.cj[j]);

    EntropicResult out;
    out.potentials.f.assign(N, 0.0);
    out.potentials.g.assign(M, 0.0);
    std::vector<double> f(n, 0.0), g(m, 0.0);
    bool warm_ok = warm && warm->f.size() == N && warm->g.size() == M;
    std::size_t iters = 0;
    if (warm_ok) {
        for (std::size_t j = 0; j < m; ++j) g[j] = warm->g[r.cj[j]];
    } else if (n > 0 && m > 0) {
        // Anneal eta down from the cost scale.
        double scale = 0.0;
        for (double c : r.c) scale = std::max(scale, c);
        for (double e = std::max(scale, eta); e > 2.0 * eta; e *= 0.5) {
            auto run = sinkhorn(r, e, std::max(tol, 1e-3), 2000, f, g);
            iters += run.iterations;
        }
    }
    SinkhornRun run;
    if (n > 0 && m > 0) run = sinkhorn(r, eta, tol, max_iter, f, g);
    iters += run.iterations;
    if (n > 0 && m > 0 && !run.converged)
        throw NonConvergence("Sinkhorn stopped after " + std::to_string(max_iter) + " iterations with marginal error " +
                                 csv::num(run.error),
                             run.error);
    out.iterations = iters;
    out.marginal_error = run.error;
    for (std::size_t i = 0; i < n; ++i) out.potentials.f[r.ri[i]] = f[i];
    for (std::size_t j = 0; j < m; ++j) out.potentials.g[r.cj[j]] = g[j];

    // Kernel, then rounding onto the exact marginals.
    std::vector<double> P(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) P[i * m + j] = std::exp((f[i] + g[j] - r.c[i * m + j]) / eta);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += P[i * m + j];
        if (s > r.a[i])
            for (std::size_t j = 0; j < m; ++j) P[i * m + j] *= r.a[i] / s;
    }
    std::vector<double> col(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) col[j] += P[i * m + j];
    for (std::size_t j = 0; j < m; ++j)
        if (col[j] > r.b[j])
            for (std::size_t i = 0; i < n; ++i) P[i * m + j] *= r.b[j] / col[j];
    std::vector<double> er(n), ec(m);
    double ec_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += P[i * m + j];
        er[i] = std::max(0.0, r.a[i] - s);
    }
    std::fill(col.begin(), col.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) col[j] += P[i * m + j];
    for (std::size_t j = 0; j < m; ++j) {
        ec[j] = std::max(0.0, r.b[j] - col[j]);
        ec_sum += ec[j];
    }
    if (ec_sum > 0.0)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) P[i * m + j] += er[i] * ec[j] / ec_sum;

    Plan& p = out.plan;
    p.rows = N;
    p.cols = M;
    p.row_marginal.assign(mu.begin(), mu.end());
    p.col_marginal.assign(nu.begin(), nu.end());
    p.mass.assign(N * M, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) p.mass[r.ri[i] * M + r.cj[j]] = P[i * m + j];
    return out;
}

PlanPath continuous_plan_path(const ParametricCost& cost, const MeasurePath& mu_path, const MeasurePath& nu_path,
                              std::span<const Param> t_grid, double eps_K, const PlanPathOptions& opts) {
    if (t_grid.empty()) throw InvalidInput("plan path needs a nonempty t-grid");
    if (!(eps_K > 0.0)) throw DomainError("plan path needs eps_K > 0");
    const std::size_t T = t_grid.size();
    PlanPath path;
    path.t_grid.assign(t_grid.begin(), t_grid.end());
    path.eps_K = eps_K;
    path.plans.resize(T);
    path.values.resize(T);
    path.iterations.resize(T);
    if (opts.audit) path.exact_values.resize(T);

    path.potentials.resize(T);
    auto& pots = path.potentials;
    auto solve_one = [&](std::size_t k, const EntropicPotentials* warm) {
        const Param& t = t_grid[k];
        GridDensity mu = mu_path(t), nu = nu_path(t);
        CostMatrix C = cost_matrix(cost, mu.size(), nu.size(), t);
        double eta = select_eta(C, eps_K);
        auto r = solve_entropic(C, mu.weights(), nu.weights(), eta, default_entropic_tol(C, eps_K), opts.max_iter,
                                warm);
        path.values[k] = r.plan.cost(C);
        path.iterations[k] = r.iterations;
        if (opts.audit) {
            auto ex = solve_exact(C, mu.weights(), nu.weights());
            path.exact_values[k] = ex.value;
        }
        path.potentials[k] = std::move(r.potentials);
        path.plans[k] = std::move(r.plan);
    };

    if (opts.warm_start) {
        for (std::size_t k = 0; k < T; ++k) solve_one(k, k > 0 ? &pots[k - 1] : nullptr);
    } else {
        detail::parallel_for(T, opts.workers, [&](std::size_t k) { solve_one(k, nullptr); });
    }
    if (opts.audit) {
        for (std::size_t k = 0; k < T; ++k) {
            double gap = path.values[k] - path.exact_values[k];
            if (gap > eps_K)
                throw AuditFailure("plan at t = " + csv::num(t_grid[k].value()) + " is " + csv::num(gap) +
                                       " above the exact value, slack " + csv::num(eps_K),
                                   "plan");
        }
    }
    return path;
}

std::string plan_csv(const Plan& p) {
    std::ostringstream out;
    out << "i,j,mass\n";
    for (std::size_t i = 0; i < p.rows; ++i)
        for (std::size_t j = 0; j < p.cols; ++j)
            if (p(i, j) > 1e-12) out << i << ',' << j << ',' << csv::num(p(i, j)) << '\n';
    return out.str();
}

std::string plan_path_summary_csv(const PlanPath& path) {
    std::ostringstream out;
    out << "t,value,gap,iterations\n";
    for (std::size_t k = 0; k < path.plans.size(); ++k) {
        double gap = path.exact_values.empty() ? 0.0 : path.values[k] - path.exact_values[k];
        out << csv::num(path.t_grid[k].value()) << ',' << csv::num(path.values[k]) << ',' << csv::num(gap) << ','
            << path.iterations[k] << '\n';
    }
    return out.str();
}

double plan_dkr(const Plan& a, const Plan& b, std::size_t res) {
    if (res == 0) throw InvalidInput("plan_dkr resolution must be positive");
    auto coarsen = [res](const Plan& p) {
        std::vector<double> h(res * res, 0.0);
        for (std::size_t i = 0; i < p.rows; ++i) {
            std::size_t bi = std::min(res - 1, std::size_t((double(i) + 0.5) / double(p.rows) * double(res)));
            for (std::size_t j = 0; j < p.cols; ++j) {
                std::size_t bj = std::min(res - 1, std::size_t((double(j) + 0.5) / double(p.cols) * double(res)));
                h[bi * res + bj] += p(i, j);
            }
        }
        return h;
    };
    auto ha = coarsen(a), hb = coarsen(b);
    const double ma = std::accumulate(ha.begin(), ha.end(), 0.0), mb = std::accumulate(hb.begin(), hb.end(), 0.0);
    // Equal-mass transport with cost min(L1, 2) is the KR distance; any
    // leftover mass difference is charged at the bound 1 per unit.
    const double common = std::min(ma, mb);
    std::vector<std::size_t> sa, sb;
    std::vector<double> wa, wb;
    for (std::size_t k = 0; k < ha.size(); ++k)
        if (ha[k] > 0.0) sa.push_back(k), wa.push_back(ha[k] * (common / ma));
    for (std::size_t k = 0; k < hb.size(); ++k)
        if (hb[k] > 0.0) sb.push_back(k), wb.push_back(hb[k] * (common / mb));
    if (sa.empty() || sb.empty()) return std::abs(ma - mb);
    std::vector<double> c(sa.size() * sb.size());
    for (std::size_t p = 0; p < sa.size(); ++p)
        for (std::size_t q = 0; q < sb.size(); ++q) {
            double dx = std::abs(double(sa[p] / res) - double(sb[q] / res)) / double(res);
            double dy = std::abs(double(sa[p] % res) - double(sb[q] % res)) / double(res);
            c[p * sb.size() + q] = std::min(dx + dy, 2.0);
        }
    auto r = solve_exact(CostMatrix(sa.size(), sb.size(), std::move(c)), wa, wb);
    return r.value + std::abs(ma - mb);
}

}  // namespace pmonge
