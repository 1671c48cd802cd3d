#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmonge/cost.hpp"
#include "pmonge/param.hpp"

namespace pmonge {

/// Dense row-major n x m matrix of nonnegative costs.
struct CostMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    CostMatrix() = default;
    CostMatrix(std::size_t n, std::size_t m, std::vector<double> v);

    double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    [[nodiscard]] double max() const;
};

/// Cost at cell centers of an n x m grid pair.
CostMatrix cost_matrix(const ParametricCost& c, std::size_t n, std::size_t m, const Param& t);

/// Coupling between n source cells and m target cells.
struct Plan {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> mass;  // row-major
    std::vector<double> row_marginal;
    std::vector<double> col_marginal;

    double operator()(std::size_t i, std::size_t j) const { return mass[i * cols + j]; }
    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return {mass.data() + i * cols, cols};
    }
    [[nodiscard]] double cost(const CostMatrix& c) const;
    /// Largest absolute row or column sum error.
    [[nodiscard]] double marginal_error() const;
    /// Throws InvalidInput if an entry is negative or a marginal is off by more than tol.
    void validate(double tol = 1e-8) const;
};

struct DualPotentials {
    std::vector<double> u;
    std::vector<double> v;
};

struct KantorovichResult {
    Plan plan;
    double value = 0.0;
    std::optional<DualPotentials> dual;
    std::size_t pivots = 0;
};

/// Exact transport by the network simplex on the bipartite graph. Deterministic.
/// Throws ImbalanceError if the masses differ by more than 1e-10 and
/// CycleGuardError if `max_pivots` (0 = automatic) is exceeded.
KantorovichResult solve_exact(const CostMatrix& cost, std::span<const double> mu,
                              std::span<const double> nu, std::size_t max_pivots = 0);

/// Log-domain Sinkhorn potentials.
struct EntropicPotentials {
    std::vector<double> f;
    std::vector<double> g;
};

struct EntropicResult {
    Plan plan;
    EntropicPotentials potentials;
    std::size_t iterations = 0;
    /// L1 marginal error of the Sinkhorn iterate before rounding.
    double marginal_error = 0.0;
};

/// Entropic plan at regularization eta. The Sinkhorn iterate is stopped at L1
/// marginal error <= tol and then rounded onto the exact marginals.
/// `warm` seeds the potentials; without it eta is annealed from the cost scale.
/// Throws NonConvergence after max_iter iterations.
EntropicResult solve_entropic(const CostMatrix& cost, std::span<const double> mu,
                              std::span<const double> nu, double eta, double tol,
                              std::size_t max_iter = 200000,
                              const EntropicPotentials* warm = nullptr);

/// eta = eps_K / (2 log(n m + 1)).
double select_eta(const CostMatrix& cost, double eps_K);
/// Sinkhorn marginal tolerance that keeps rounding within eps_K / 4.
double default_entropic_tol(const CostMatrix& cost, double eps_K);

struct PlanPath {
    std::vector<Param> t_grid;
    std::vector<Plan> plans;
    double eps_K = 0.0;
    std::vector<double> values;        // entropic plan cost
    std::vector<double> exact_values;  // empty when not audited
    std::vector<std::size_t> iterations;
    std::vector<EntropicPotentials> potentials;
};

struct PlanPathOptions {
    /// Warm starts force sequential solves along the grid order.
    bool warm_start = true;
    std::size_t workers = 1;
    bool audit = true;
    std::size_t max_iter = 200000;
};

/// Entropic eps_K-optimal plans along t_grid between the cell masses of mu_t
/// and nu_t, with cell-center costs. Throws AuditFailure (slice "plan") when
/// an audited gap exceeds eps_K.
PlanPath continuous_plan_path(const ParametricCost& cost, const MeasurePath& mu_path,
                              const MeasurePath& nu_path, std::span<const Param> t_grid,
                              double eps_K, const PlanPathOptions& opts = {});

/// CSV `i,j,mass` for entries above 1e-12.
std::string plan_csv(const Plan& p);
/// CSV `t,value,gap,iterations`, one line per sample.
std::string plan_path_summary_csv(const PlanPath& path);

/// Kantorovich-Rubinshtein distance between two plans viewed as measures on
/// [0,1]^2 (cell centers), after coarsening both to a res x res grid.
double plan_dkr(const Plan& a, const Plan& b, std::size_t resolution = 16);

}  // namespace pmonge
