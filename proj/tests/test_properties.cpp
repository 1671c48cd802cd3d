#include "doctest.h"
#include "invariants.hpp"

using namespace pmonge::testing;

namespace {

void require_clean(const SuiteResult& r) {
    INFO(r.name << ": " << r.first_failure);
    CHECK(r.cases >= 100);
    CHECK(r.failures == 0);
}

constexpr std::uint64_t seed = 20240611;

}  // namespace

TEST_CASE("plans conserve both marginals") { require_clean(marginal_conservation(seed)); }
TEST_CASE("exact duals certify optimality") { require_clean(dual_certificates(seed)); }
TEST_CASE("hat weights form a partition of unity") { require_clean(partition_of_unity(seed)); }
TEST_CASE("quantile maps are nondecreasing") { require_clean(quantile_monotonicity(seed)); }
TEST_CASE("dkr is bounded by W1, TV and 2") { require_clean(dkr_bounds(seed)); }
TEST_CASE("quantile maps converge under weak convergence") { require_clean(skorohod_convergence(seed)); }
TEST_CASE("cell targets add up to the target marginal") { require_clean(cell_targets_sum(seed)); }
TEST_CASE("pushforward keeps unit mass") { require_clean(pushforward_mass(seed)); }
