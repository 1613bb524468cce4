#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace deepmvc {

struct RunRecord {
    std::uint64_t seed = 0;
    double final_loss = 0.0;
    double acc = 0.0;
    double nmi = 0.0;
    bool failed = false;
    std::string error;
};

// Minimum-cost perfect assignment on a square matrix; among all optimal
// assignments returns the lexicographically smallest row -> column map.
std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost);

// Best agreement over all bijective cluster-to-class relabelings, via
// optimal assignment on the k x k contingency matrix.
double accuracy(const std::vector<int>& pred, const std::vector<int>& truth, std::size_t k);

// Plug-in NMI with natural logs: MI / (0.5 (H(pred) + H(truth))).
// Defined as 1 when both partitions are a single cluster.
double nmi(const std::vector<int>& pred, const std::vector<int>& truth);

// Lowest final loss; ties broken by lowest seed. Failed runs must be
// filtered out by the caller.
const RunRecord& select_best_run(const std::vector<RunRecord>& runs);

struct BootstrapEstimate {
    double selected_metric = 0.0; // metric of the full-sample lowest-loss run
    double std_hat = 0.0;
    std::size_t B = 0;
};

struct BootstrapResult {
    BootstrapEstimate acc;
    BootstrapEstimate nmi;
};

// B resamples of size R with replacement; lowest-loss selection per
// resample; std_hat is the sample std (denominator B-1) of the selected
// metrics. Exactly 0 when all selections agree.
BootstrapResult bootstrap_std(const std::vector<RunRecord>& runs, std::size_t B, std::uint64_t seed);

// results[model][dataset] = {acc, nmi}
using MetricPair = std::array<double, 2>;
using ResultsTable = std::map<std::string, std::map<std::string, MetricPair>>;

struct ZscoreReport {
    std::map<std::string, std::map<std::string, MetricPair>> z;
    std::vector<std::string> warnings; // zero-std cells
};

// Z per (model, dataset, metric) using the population std across the models
// reporting that dataset. Every populated cell needs at least two models.
ZscoreReport zscores(const ResultsTable& results);

// Mean of a model's Z over the group's dataset/metric cells.
std::map<std::string, double> group_mean_z(const ZscoreReport& report,
                                           const std::vector<std::string>& group_datasets,
                                           bool use_acc = true, bool use_nmi = true);

// model x group mean-Z table for named dataset groups.
std::map<std::string, std::map<std::string, double>> zscore_table(
    const ResultsTable& results, const std::map<std::string, std::vector<std::string>>& groups,
    bool use_acc = true, bool use_nmi = true);

} // namespace deepmvc
