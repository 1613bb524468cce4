#include "deepmvc/theory.hpp"

#include "deepmvc/errors.hpp"
#include "deepmvc/rng.hpp"

#include <algorithm>
#include <cmath>

namespace deepmvc {

namespace {

void check_pmf(const std::vector<double>& pmf) {
    if (pmf.empty()) throw ContractViolation("pmf is empty");
    double total = 0.0;
    for (double p : pmf) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw ContractViolation("pmf has invalid entry");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ContractViolation("pmf sums to " + std::to_string(total) + ", not 1");
    }
}

// Inverse-CDF sample of a value in {1..k}.
std::size_t sample_pmf(const std::vector<double>& pmf, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        acc += pmf[i];
        if (u < acc) return i + 1;
    }
    return pmf.size();
}

} // namespace

std::int64_t kappa_aligned(std::int64_t k, const std::vector<std::int64_t>& k_vs) {
    if (k < 1) throw ContractViolation("kappa_aligned: k must be >= 1");
    if (k_vs.empty()) throw ContractViolation("kappa_aligned: no views");
    std::int64_t min_kv = k;
    for (std::int64_t kv : k_vs) {
        if (kv < 1 || kv > k) {
            throw ContractViolation("kappa_aligned: k_v = " + std::to_string(kv) +
                                    " outside [1, " + std::to_string(k) + "]");
        }
        min_kv = std::min(min_kv, kv);
    }
    if (min_kv == 1) return 1;
    std::int64_t power = 1;
    for (std::size_t v = 0; v < k_vs.size(); ++v) {
        power *= min_kv;
        if (power >= k) return k; // saturates; avoids overflow
    }
    return std::min<std::int64_t>(k, power);
}

double exact_expected_min(const std::vector<double>& pmf, std::size_t V) {
    check_pmf(pmf);
    if (V < 1) throw ContractViolation("exact_expected_min: V must be >= 1");
    double expectation = 0.0;
    double cdf = 0.0;
    for (std::size_t x = 0; x < pmf.size(); ++x) {
        // survival at x = P(k_v > x); x runs over 0..k-1
        expectation += std::pow(1.0 - cdf, static_cast<double>(V));
        cdf += pmf[x];
    }
    return expectation;
}

MinSimulation simulate_min(const std::vector<double>& pmf, std::size_t V, std::size_t trials,
                           std::uint64_t seed) {
    check_pmf(pmf);
    if (V < 1) throw ContractViolation("simulate_min: V must be >= 1");
    if (trials < 1) throw ContractViolation("simulate_min: trials must be >= 1");

    MinSimulation out;
    out.trials = trials;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng = substream(seed, t);
        std::size_t running_min = pmf.size() + 1;
        for (std::size_t v = 0; v < V; ++v) {
            const std::size_t draw = sample_pmf(pmf, rng);
            const std::size_t next_min = std::min(running_min, draw);
            if (v > 0 && next_min > running_min) ++out.nesting_violations; // impossible pathwise
            running_min = next_min;
        }
        const double m = static_cast<double>(running_min);
        sum += m;
        sum_sq += m * m;
    }
    out.mean = sum / static_cast<double>(trials);
    if (trials > 1) {
        const double var = std::max(0.0, (sum_sq - sum * sum / static_cast<double>(trials)) /
                                             static_cast<double>(trials - 1));
        out.std_error = std::sqrt(var / static_cast<double>(trials));
    }
    return out;
}

std::vector<double> monotonicity_report(const std::vector<double>& pmf, std::size_t V_max) {
    if (V_max < 2) throw ContractViolation("monotonicity_report: V_max must be >= 2");
    std::vector<double> out;
    out.reserve(V_max);
    for (std::size_t V = 1; V <= V_max; ++V) out.push_back(exact_expected_min(pmf, V));
    return out;
}

} // namespace deepmvc
