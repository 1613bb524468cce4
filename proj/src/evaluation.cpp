#include "deepmvc/evaluation.hpp"

#include "deepmvc/errors.hpp"
#include "deepmvc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace deepmvc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kAssignTol = 1e-9;

// Classic potentials-based O(n^3) assignment. Returns the optimal value;
// fills row -> col when `assign` is given.
double assignment_value(const std::vector<std::vector<double>>& a,
                        std::vector<std::size_t>* assign = nullptr) {
    const int n = static_cast<int>(a.size());
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    double value = 0.0;
    if (assign) assign->assign(n, 0);
    for (int j = 1; j <= n; ++j) {
        value += a[p[j] - 1][j - 1];
        if (assign) (*assign)[p[j] - 1] = static_cast<std::size_t>(j - 1);
    }
    return value;
}

} // namespace

std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
    const std::size_t k = cost.size();
    if (k == 0) throw DimensionError("hungarian: empty cost matrix");
    for (const auto& row : cost) {
        if (row.size() != k) {
            throw DimensionError("hungarian: matrix is " + std::to_string(k) + "x" +
                                 std::to_string(row.size()) + ", not square");
        }
        for (double c : row) {
            if (!std::isfinite(c)) throw DimensionError("hungarian: non-finite cost entry");
        }
    }

    const double optimum = assignment_value(cost);

    // Fix rows in order, preferring the smallest column that still attains
    // the optimum; this is the lexicographic tie-break.
    std::vector<std::size_t> perm(k);
    std::vector<char> used_col(k, 0);
    double fixed_cost = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
        bool placed = false;
        for (std::size_t c = 0; c < k && !placed; ++c) {
            if (used_col[c]) continue;
            // Optimal completion over the free rows/columns.
            std::vector<std::size_t> free_cols;
            for (std::size_t j = 0; j < k; ++j) {
                if (!used_col[j] && j != c) free_cols.push_back(j);
            }
            double completion = 0.0;
            if (!free_cols.empty()) {
                std::vector<std::vector<double>> sub(free_cols.size(),
                                                     std::vector<double>(free_cols.size()));
                for (std::size_t i = 0; i < free_cols.size(); ++i) {
                    for (std::size_t j = 0; j < free_cols.size(); ++j) {
                        sub[i][j] = cost[r + 1 + i][free_cols[j]];
                    }
                }
                completion = assignment_value(sub);
            }
            if (fixed_cost + cost[r][c] + completion <= optimum + kAssignTol) {
                perm[r] = c;
                used_col[c] = 1;
                fixed_cost += cost[r][c];
                placed = true;
            }
        }
        if (!placed) throw ContractViolation("hungarian: internal search failed"); // unreachable
    }
    return perm;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth, std::size_t k) {
    if (pred.size() != truth.size()) {
        throw DimensionError("accuracy: " + std::to_string(pred.size()) + " predictions vs " +
                             std::to_string(truth.size()) + " labels");
    }
    if (pred.empty()) throw ContractViolation("accuracy: empty label vectors");
    const std::size_t n = pred.size();
    std::vector<std::vector<double>> counts(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        if (pred[i] < 0 || truth[i] < 0 || static_cast<std::size_t>(pred[i]) >= k ||
            static_cast<std::size_t>(truth[i]) >= k) {
            throw ContractViolation("accuracy: label outside [0, " + std::to_string(k) + ") at " +
                                    std::to_string(i));
        }
        counts[pred[i]][truth[i]] += 1.0;
    }
    std::vector<std::vector<double>> cost(k, std::vector<double>(k));
    for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t t = 0; t < k; ++t) cost[p][t] = -counts[p][t];
    }
    const auto perm = hungarian(cost);
    double matched = 0.0;
    for (std::size_t p = 0; p < k; ++p) matched += counts[p][perm[p]];
    return matched / static_cast<double>(n);
}

double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size()) {
        throw DimensionError("nmi: " + std::to_string(pred.size()) + " predictions vs " +
                             std::to_string(truth.size()) + " labels");
    }
    if (pred.empty()) throw ContractViolation("nmi: empty label vectors");
    const std::size_t n = pred.size();
    int kp = 0, kt = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (pred[i] < 0 || truth[i] < 0) throw ContractViolation("nmi: negative label");
        kp = std::max(kp, pred[i] + 1);
        kt = std::max(kt, truth[i] + 1);
    }
    std::vector<double> joint(static_cast<std::size_t>(kp) * kt, 0.0);
    std::vector<double> mp(kp, 0.0), mt(kt, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        joint[pred[i] * kt + truth[i]] += inv_n;
        mp[pred[i]] += inv_n;
        mt[truth[i]] += inv_n;
    }
    double mi = 0.0, hp = 0.0, ht = 0.0;
    for (int a = 0; a < kp; ++a) {
        if (mp[a] > 0.0) hp -= mp[a] * std::log(mp[a]);
        for (int b = 0; b < kt; ++b) {
            const double pab = joint[a * kt + b];
            if (pab > 0.0) mi += pab * std::log(pab / (mp[a] * mt[b]));
        }
    }
    for (int b = 0; b < kt; ++b) {
        if (mt[b] > 0.0) ht -= mt[b] * std::log(mt[b]);
    }
    const double denom = 0.5 * (hp + ht);
    if (denom == 0.0) return 1.0; // both partitions trivial
    return std::min(1.0, std::max(0.0, mi / denom));
}

const RunRecord& select_best_run(const std::vector<RunRecord>& runs) {
    if (runs.empty()) throw ContractViolation("select_best_run: no runs");
    const RunRecord* best = nullptr;
    for (const RunRecord& r : runs) {
        if (!std::isfinite(r.final_loss)) continue;
        if (!best || r.final_loss < best->final_loss ||
            (r.final_loss == best->final_loss && r.seed < best->seed)) {
            best = &r;
        }
    }
    if (!best) throw ContractViolation("select_best_run: all runs have non-finite loss");
    return *best;
}

BootstrapResult bootstrap_std(const std::vector<RunRecord>& runs, std::size_t B,
                              std::uint64_t seed) {
    const std::size_t R = runs.size();
    if (R < 1) throw ContractViolation("bootstrap_std: needs at least one run");
    if (B < 2) throw ContractViolation("bootstrap_std: needs B >= 2 resamples");

    const RunRecord& selected = select_best_run(runs);

    Rng rng(seed);
    std::vector<double> acc_stats(B), nmi_stats(B);
    for (std::size_t b = 0; b < B; ++b) {
        std::size_t best = 0;
        double best_loss = kInf;
        for (std::size_t j = 0; j < R; ++j) {
            const std::size_t pick = rng.uniform_index(R);
            if (runs[pick].final_loss < best_loss) {
                best_loss = runs[pick].final_loss;
                best = pick;
            }
        }
        acc_stats[b] = runs[best].acc;
        nmi_stats[b] = runs[best].nmi;
    }

    auto sample_std = [B](const std::vector<double>& xs) {
        const bool all_same = std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs[0]; });
        if (all_same) return 0.0;
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(B);
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        return std::sqrt(ss / static_cast<double>(B - 1));
    };

    BootstrapResult out;
    out.acc = {selected.acc, sample_std(acc_stats), B};
    out.nmi = {selected.nmi, sample_std(nmi_stats), B};
    return out;
}

ZscoreReport zscores(const ResultsTable& results) {
    ZscoreReport report;
    // Collect the dataset cells.
    std::map<std::string, std::vector<std::string>> cell_models; // dataset -> models
    for (const auto& [model, per_ds] : results) {
        for (const auto& [ds, _] : per_ds) cell_models[ds].push_back(model);
    }
    for (const auto& [ds, models] : cell_models) {
        if (models.size() < 2) {
            throw ContractViolation("zscores: dataset '" + ds + "' has " +
                                    std::to_string(models.size()) + " model(s), need >= 2");
        }
        for (std::size_t metric = 0; metric < 2; ++metric) {
            double mean = 0.0;
            for (const auto& m : models) mean += results.at(m).at(ds)[metric];
            mean /= static_cast<double>(models.size());
            double var = 0.0;
            for (const auto& m : models) {
                const double d = results.at(m).at(ds)[metric] - mean;
                var += d * d;
            }
            const double sd = std::sqrt(var / static_cast<double>(models.size()));
            if (sd == 0.0) {
                report.warnings.push_back("zero std for dataset '" + ds + "' metric " +
                                          (metric == 0 ? "acc" : "nmi") + "; Z set to 0");
            }
            for (const auto& m : models) {
                const double x = results.at(m).at(ds)[metric];
                report.z[m][ds][metric] = sd == 0.0 ? 0.0 : (x - mean) / sd;
            }
        }
    }
    return report;
}

std::map<std::string, std::map<std::string, double>> zscore_table(
    const ResultsTable& results, const std::map<std::string, std::vector<std::string>>& groups,
    bool use_acc, bool use_nmi) {
    const ZscoreReport report = zscores(results);
    std::map<std::string, std::map<std::string, double>> out;
    for (const auto& [group, datasets] : groups) {
        for (const auto& [model, z] : group_mean_z(report, datasets, use_acc, use_nmi)) {
            out[model][group] = z;
        }
    }
    return out;
}

std::map<std::string, double> group_mean_z(const ZscoreReport& report,
                                           const std::vector<std::string>& group_datasets,
                                           bool use_acc, bool use_nmi) {
    if (!use_acc && !use_nmi) throw ContractViolation("group_mean_z: no metric selected");
    std::map<std::string, double> out;
    for (const auto& [model, per_ds] : report.z) {
        double acc = 0.0;
        std::size_t cells = 0;
        for (const std::string& ds : group_datasets) {
            auto it = per_ds.find(ds);
            if (it == per_ds.end()) continue;
            if (use_acc) {
                acc += it->second[0];
                ++cells;
            }
            if (use_nmi) {
                acc += it->second[1];
                ++cells;
            }
        }
        if (cells > 0) out[model] = acc / static_cast<double>(cells);
    }
    return out;
}

} // namespace deepmvc
