#pragma once

#include <cstdint>
#include <vector>

namespace deepmvc {

// Number of separable clusters after fusing perfectly aligned view-specific
// representations: min{ k, (min_v k_v)^V }.
std::int64_t kappa_aligned(std::int64_t k, const std::vector<std::int64_t>& k_vs);

// Exact E(min of V iid draws) for a pmf over {1..k}, via the survival sum
// E(M_V) = sum_x (1 - F(x))^V over x = 0..k-1.
double exact_expected_min(const std::vector<double>& pmf, std::size_t V);

struct MinSimulation {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t trials = 0;
    std::size_t nesting_violations = 0; // count of M_{j+1} > M_j within a trial
};

// Monte-Carlo mean of min(k_1..k_V) with per-trial substreams; also checks
// the pathwise nesting of prefix minima within each sampled suite.
MinSimulation simulate_min(const std::vector<double>& pmf, std::size_t V, std::size_t trials,
                           std::uint64_t seed);

// E(M_V) for V = 1..V_max; the sequence is non-increasing.
std::vector<double> monotonicity_report(const std::vector<double>& pmf, std::size_t V_max);

} // namespace deepmvc
