#pragma once

#include "deepmvc/dataset.hpp"
#include "deepmvc/evaluation.hpp"
#include "deepmvc/instances.hpp"

#include <map>
#include <string>
#include <vector>

namespace deepmvc {

// Flat key-value configuration: "key = value" lines, '#' comments, dotted
// keys. Flags override file values by calling set() after from_file().
struct KvConfig {
    std::map<std::string, std::string> values;

    static KvConfig from_file(const std::string& path);

    void set(const std::string& key, const std::string& value) { values[key] = value; }
    bool has(const std::string& key) const { return values.count(key) > 0; }

    std::string get_str(const std::string& key, const std::string& fallback) const;
    std::string require_str(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::size_t> get_size_list(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<std::string> get_str_list(const std::string& key) const;
};

// dataset.* keys -> a concrete dataset (generated or loaded).
MultiViewDataset dataset_from_config(const KvConfig& cfg);

// instance.* keys -> an InstanceSpec starting from the named preset.
InstanceSpec instance_from_config(const KvConfig& cfg, const std::string& name_key = "instance.name");

struct GenerateResult {
    std::string mvd_path;
    std::string sidecar_path;
};

GenerateResult cmd_generate(const KvConfig& cfg);

struct TrainResult {
    std::string jsonl_path;
    std::vector<RunRecord> records;
    std::size_t failures = 0;
};

TrainResult cmd_train(const KvConfig& cfg);

struct EvaluateResult {
    std::string json_path;
    std::string text_path;
    std::string text_report;
    std::size_t skipped_rows = 0;
};

EvaluateResult cmd_evaluate(const std::vector<std::string>& results_paths, const KvConfig& cfg);

struct TheoryResult {
    std::string json_path;
    std::string text_report;
    bool non_increasing = true;
    std::size_t nesting_violations = 0;
    bool mc_within_3se = true;
};

TheoryResult cmd_verify_theory(const KvConfig& cfg);

struct SweepResult {
    std::string csv_path;
    std::string json_path;
    std::vector<SweepPoint> points;
};

SweepResult cmd_sweep_views(const KvConfig& cfg);

// Prop-1 adjunct: alignment-heavy vs no-alignment training on blobs whose
// first view has fewer separable clusters than k; reported, never asserted.
std::string theory_alignment_adjunct(const KvConfig& cfg);

} // namespace deepmvc
