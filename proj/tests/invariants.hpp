#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace pmonge::testing {

struct SuiteResult {
    std::string name;
    std::size_t cases = 0;
    std::size_t failures = 0;
    std::string first_failure;
};

SuiteResult marginal_conservation(std::uint64_t seed, std::size_t cases = 120);
SuiteResult dual_certificates(std::uint64_t seed, std::size_t cases = 120);
SuiteResult partition_of_unity(std::uint64_t seed, std::size_t cases = 120);
SuiteResult quantile_monotonicity(std::uint64_t seed, std::size_t cases = 120);
SuiteResult dkr_bounds(std::uint64_t seed, std::size_t cases = 120);
SuiteResult skorohod_convergence(std::uint64_t seed, std::size_t cases = 120);
SuiteResult cell_targets_sum(std::uint64_t seed, std::size_t cases = 120);
SuiteResult pushforward_mass(std::uint64_t seed, std::size_t cases = 120);

std::vector<SuiteResult> all_suites(std::uint64_t seed);

}  // namespace pmonge::testing
