#include "deepmvc/experiment.hpp"

#include "deepmvc/errors.hpp"
#include "deepmvc/rng.hpp"
#include "deepmvc/theory.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace deepmvc {

namespace fs = std::filesystem;
using nlohmann::json;

// --- KvConfig ------------------------------------------------------------------

KvConfig KvConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    KvConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        }
        cfg.values[key] = value;
    }
    return cfg;
}

std::string KvConfig::get_str(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

std::string KvConfig::require_str(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw ConfigError("missing required config key '" + key + "'");
    return it->second;
}

double KvConfig::get_double(const std::string& key, double fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': not a number: '" + it->second + "'");
    }
}

long long KvConfig::get_int(const std::string& key, long long fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': not an integer: '" + it->second + "'");
    }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("key '" + key + "': not a boolean: '" + it->second + "'");
}

namespace {

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

} // namespace

std::vector<std::size_t> KvConfig::get_size_list(const std::string& key) const {
    std::vector<std::size_t> out;
    auto it = values.find(key);
    if (it == values.end()) return out;
    for (const std::string& s : split_commas(it->second)) {
        try {
            out.push_back(static_cast<std::size_t>(std::stoull(s)));
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "': not an integer list: '" + it->second + "'");
        }
    }
    return out;
}

std::vector<double> KvConfig::get_double_list(const std::string& key) const {
    std::vector<double> out;
    auto it = values.find(key);
    if (it == values.end()) return out;
    for (const std::string& s : split_commas(it->second)) {
        try {
            out.push_back(std::stod(s));
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "': not a number list: '" + it->second + "'");
        }
    }
    return out;
}

std::vector<std::string> KvConfig::get_str_list(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) return {};
    return split_commas(it->second);
}

// --- dataset / instance assembly -------------------------------------------------

MultiViewDataset dataset_from_config(const KvConfig& cfg) {
    const std::string kind = cfg.get_str("dataset.kind", "blobs");
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("dataset.seed", 0));
    MultiViewDataset ds;

    if (kind == "mvd") {
        ds = load_mvd(cfg.require_str("dataset.path"));
        ds.name = fs::path(cfg.require_str("dataset.path")).stem().string();
    } else if (kind == "csv") {
        ds = load_csv_views(cfg.get_str_list("dataset.csv_views"),
                            cfg.get_str("dataset.csv_labels", ""),
                            static_cast<std::uint32_t>(cfg.get_int("dataset.k", 0)));
        if (cfg.get_bool("dataset.normalize", true)) normalize_views(ds);
    } else if (kind == "blobs") {
        ds = generate_blobs(static_cast<std::size_t>(cfg.get_int("dataset.n", 300)),
                            static_cast<std::size_t>(cfg.get_int("dataset.views", 2)),
                            static_cast<std::size_t>(cfg.get_int("dataset.k", 3)),
                            static_cast<std::size_t>(cfg.get_int("dataset.dim", 8)),
                            cfg.get_double("dataset.sigma", 0.05), seed,
                            cfg.get_double("dataset.imbalance", 1.0), cfg.get_size_list("dataset.kv"));
    } else if (kind == "random_pairing") {
        MultiViewDataset base = generate_blobs(
            static_cast<std::size_t>(cfg.get_int("dataset.n", 300)), 1,
            static_cast<std::size_t>(cfg.get_int("dataset.k", 3)),
            static_cast<std::size_t>(cfg.get_int("dataset.dim", 8)),
            cfg.get_double("dataset.sigma", 0.05), seed);
        ds = generate_random_pairing(base.view_tensor(0), base.labels, base.k,
                                     cfg.get_double("dataset.noise_sigma", 0.2),
                                     mix_seed(seed, 0xBA5E));
    } else if (kind == "patched") {
        const auto H = static_cast<std::size_t>(cfg.get_int("dataset.height", 16));
        const auto W = static_cast<std::size_t>(cfg.get_int("dataset.width", 16));
        MultiViewDataset base = generate_blobs(
            static_cast<std::size_t>(cfg.get_int("dataset.n", 300)), 1,
            static_cast<std::size_t>(cfg.get_int("dataset.k", 3)), H * W,
            cfg.get_double("dataset.sigma", 0.05), seed);
        ds = generate_patched(base.view_tensor(0), H, W,
                              static_cast<std::size_t>(cfg.get_int("dataset.grid_rows", 4)),
                              static_cast<std::size_t>(cfg.get_int("dataset.grid_cols", 4)),
                              cfg.get_bool("dataset.drop_corners", true), seed, base.labels, base.k);
    } else {
        throw ConfigError("unknown dataset.kind '" + kind + "'");
    }

    const auto extra = static_cast<std::size_t>(cfg.get_int("dataset.uninformative_views", 0));
    const auto extra_dim = static_cast<std::size_t>(
        cfg.get_int("dataset.uninformative_dim", ds.dims.empty() ? 8 : ds.dims[0]));
    for (std::size_t i = 0; i < extra; ++i) {
        ds = append_uninformative_view(ds, extra_dim, mix_seed(seed, 0xF00D + i));
    }
    if (cfg.has("dataset.name")) ds.name = cfg.require_str("dataset.name");
    return ds;
}

InstanceSpec instance_from_config(const KvConfig& cfg, const std::string& name_key) {
    InstanceSpec spec = instance_preset(cfg.get_str(name_key, "AE-KM"));
    if (cfg.has("instance.sv_ssl")) spec = ablate(spec, "sv_ssl", cfg.require_str("instance.sv_ssl"));
    if (cfg.has("instance.mv_ssl")) spec = ablate(spec, "mv_ssl", cfg.require_str("instance.mv_ssl"));
    if (cfg.has("instance.fusion")) spec = ablate(spec, "fusion", cfg.require_str("instance.fusion"));
    if (cfg.has("instance.cm")) spec = ablate(spec, "cm", cfg.require_str("instance.cm"));

    spec.tau = cfg.get_double("instance.tau", spec.tau);
    spec.lambda = cfg.get_double("instance.lambda", spec.lambda);
    spec.epochs = static_cast<std::size_t>(cfg.get_int("instance.epochs", static_cast<long long>(spec.epochs)));
    spec.batch_size =
        static_cast<std::size_t>(cfg.get_int("instance.batch_size", static_cast<long long>(spec.batch_size)));
    spec.lr = cfg.get_double("instance.lr", spec.lr);
    spec.weights.sv = cfg.get_double("instance.w_sv", spec.weights.sv);
    spec.weights.mv = cfg.get_double("instance.w_mv", spec.weights.mv);
    spec.weights.cm = cfg.get_double("instance.w_cm", spec.weights.cm);
    spec.repr_dim = static_cast<std::size_t>(cfg.get_int("instance.repr_dim", static_cast<long long>(spec.repr_dim)));
    spec.mi_dim_factor =
        static_cast<std::size_t>(cfg.get_int("instance.mi_dim_factor", static_cast<long long>(spec.mi_dim_factor)));
    spec.hidden_units =
        static_cast<std::size_t>(cfg.get_int("instance.hidden", static_cast<long long>(spec.hidden_units)));
    spec.ddc_hidden =
        static_cast<std::size_t>(cfg.get_int("instance.ddc_hidden", static_cast<long long>(spec.ddc_hidden)));
    spec.full_batch_cm = cfg.get_bool("instance.full_batch", spec.full_batch_cm);
    return spec;
}

// --- shared output helpers ---------------------------------------------------------

namespace {

fs::path ensure_out_dir(const KvConfig& cfg) {
    const fs::path dir = cfg.get_str("out", "out");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "'");
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary); // binary keeps reruns byte-identical
    if (!os) throw ConfigError("cannot write '" + path.string() + "'");
    os << text;
}

std::size_t jobs_from(const KvConfig& cfg) {
    if (cfg.has("jobs")) return static_cast<std::size_t>(cfg.get_int("jobs", 1));
    if (const char* env = std::getenv("DEEPMVC_JOBS")) {
        try {
            return static_cast<std::size_t>(std::stoull(env));
        } catch (const std::exception&) {
            throw ConfigError("DEEPMVC_JOBS is not an integer");
        }
    }
    return 1;
}

json run_record_json(const std::string& model, const std::string& dataset, const RunRecord& r) {
    json row;
    row["model"] = model;
    row["dataset"] = dataset;
    row["seed"] = r.seed;
    row["final_loss"] = r.final_loss;
    row["acc"] = r.acc;
    row["nmi"] = r.nmi;
    if (r.failed) {
        row["failed"] = true;
        row["error"] = r.error;
    }
    return row;
}

} // namespace

// --- cmd_generate --------------------------------------------------------------------

GenerateResult cmd_generate(const KvConfig& cfg) {
    MultiViewDataset ds = dataset_from_config(cfg);
    const fs::path dir = ensure_out_dir(cfg);
    const std::string stem = cfg.get_str("dataset.name", ds.name.empty() ? "dataset" : ds.name);

    GenerateResult res;
    res.mvd_path = (dir / (stem + ".mvd")).string();
    res.sidecar_path = res.mvd_path + ".json";
    save_mvd(ds, res.mvd_path);

    json sidecar;
    sidecar["format_version"] = 1;
    sidecar["n"] = ds.n;
    sidecar["views"] = ds.view_count();
    sidecar["dims"] = ds.dims;
    sidecar["k"] = ds.k;
    sidecar["has_labels"] = ds.has_labels();
    sidecar["seed"] = cfg.get_int("dataset.seed", 0);
    json gen;
    for (const auto& [key, value] : cfg.values) {
        if (key.rfind("dataset.", 0) == 0) gen[key] = value;
    }
    sidecar["generator"] = gen;
    write_text(res.sidecar_path, sidecar.dump(2) + "\n");
    return res;
}

// --- cmd_train -------------------------------------------------------------------------

TrainResult cmd_train(const KvConfig& cfg) {
    MultiViewDataset ds = dataset_from_config(cfg);
    InstanceSpec spec = instance_from_config(cfg);
    const auto runs = static_cast<std::size_t>(cfg.get_int("runs", 5));
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    const fs::path dir = ensure_out_dir(cfg);

    TrainResult res;
    res.records = run_protocol(spec, ds, runs, seed, jobs_from(cfg));
    for (const RunRecord& r : res.records) {
        if (r.failed) ++res.failures;
    }

    std::ostringstream os;
    for (const RunRecord& r : res.records) {
        os << run_record_json(spec.name, ds.name, r).dump() << "\n";
    }
    res.jsonl_path = (dir / ("runs_" + spec.name + "_" + ds.name + ".jsonl")).string();
    write_text(res.jsonl_path, os.str());
    return res;
}

// --- cmd_evaluate -------------------------------------------------------------------------

EvaluateResult cmd_evaluate(const std::vector<std::string>& results_paths, const KvConfig& cfg) {
    if (results_paths.empty()) throw ConfigError("evaluate: no results files given");
    const auto B = static_cast<std::size_t>(cfg.get_int("bootstrap", 1000));
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));

    struct Cell {
        std::vector<RunRecord> runs;
    };
    std::map<std::string, std::map<std::string, Cell>> by_model_dataset;
    EvaluateResult res;

    for (const std::string& path : results_paths) {
        std::ifstream in(path);
        if (!in) throw FormatError("evaluate: cannot open '" + path + "'");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                const json row = json::parse(line);
                RunRecord r;
                r.seed = row.at("seed").get<std::uint64_t>();
                r.final_loss = row.at("final_loss").get<double>();
                r.acc = row.at("acc").get<double>();
                r.nmi = row.at("nmi").get<double>();
                r.failed = row.value("failed", false);
                if (r.failed) continue; // failed runs carry no metrics
                by_model_dataset[row.at("model").get<std::string>()]
                               [row.at("dataset").get<std::string>()]
                                   .runs.push_back(r);
            } catch (const json::exception&) {
                ++res.skipped_rows;
            }
        }
    }
    if (by_model_dataset.empty()) throw FormatError("evaluate: no valid result rows found");

    ResultsTable table;
    json aggregates = json::array();
    std::ostringstream text;
    text << std::fixed << std::setprecision(6);
    text << "model            dataset          acc        acc_std    nmi        nmi_std    loss\n";
    for (const auto& [model, per_ds] : by_model_dataset) {
        for (const auto& [dsname, cell] : per_ds) {
            const BootstrapResult boot = bootstrap_std(cell.runs, B, seed);
            const RunRecord& best = select_best_run(cell.runs);
            table[model][dsname] = {boot.acc.selected_metric, boot.nmi.selected_metric};
            json agg;
            agg["model"] = model;
            agg["dataset"] = dsname;
            agg["acc"] = boot.acc.selected_metric;
            agg["acc_std_hat"] = boot.acc.std_hat;
            agg["nmi"] = boot.nmi.selected_metric;
            agg["nmi_std_hat"] = boot.nmi.std_hat;
            agg["final_loss"] = best.final_loss;
            agg["runs"] = cell.runs.size();
            aggregates.push_back(agg);
            std::ostringstream m;
            m << std::left << std::setw(17) << model << std::setw(17) << dsname;
            text << m.str() << std::fixed << std::setprecision(6) << boot.acc.selected_metric
                 << "   " << boot.acc.std_hat << "   " << boot.nmi.selected_metric << "   "
                 << boot.nmi.std_hat << "   " << best.final_loss << "\n";
        }
    }

    json report;
    report["per_model"] = aggregates;
    if (res.skipped_rows > 0) report["skipped_rows"] = res.skipped_rows;

    const bool use_acc = cfg.get_bool("zscore.acc", true);
    const bool use_nmi = cfg.get_bool("zscore.nmi", true);
    std::ostringstream aggregated_jsonl;
    if (by_model_dataset.size() >= 2) {
        const ZscoreReport zr = zscores(table);
        std::vector<std::string> all_datasets;
        for (const auto& [model, per_ds] : table) {
            for (const auto& [dsname, _] : per_ds) {
                if (std::find(all_datasets.begin(), all_datasets.end(), dsname) == all_datasets.end()) {
                    all_datasets.push_back(dsname);
                }
            }
        }
        std::sort(all_datasets.begin(), all_datasets.end());
        const auto group = group_mean_z(zr, all_datasets, use_acc, use_nmi);
        json zjson = json::array();
        text << "\ngroup Z-scores (group = all datasets)\n";
        for (const auto& [model, z] : group) {
            // group-level bootstrap stds: mean over the group's datasets
            double acc_sd = 0.0, nmi_sd = 0.0;
            std::size_t cells = 0;
            for (const auto& [dsname, cell] : by_model_dataset.at(model)) {
                const BootstrapResult boot = bootstrap_std(cell.runs, B, seed);
                acc_sd += boot.acc.std_hat;
                nmi_sd += boot.nmi.std_hat;
                ++cells;
            }
            if (cells > 0) {
                acc_sd /= static_cast<double>(cells);
                nmi_sd /= static_cast<double>(cells);
            }
            json row;
            row["model"] = model;
            row["group"] = "all";
            row["mean_z"] = z;
            row["acc_std_hat"] = acc_sd;
            row["nmi_std_hat"] = nmi_sd;
            zjson.push_back(row);
            aggregated_jsonl << row.dump() << "\n";
            std::ostringstream m;
            m << std::left << std::setw(17) << model;
            text << m.str() << std::showpos << std::setprecision(6) << z << std::noshowpos << "\n";
        }
        report["group_z"] = zjson;
        if (!zr.warnings.empty()) report["warnings"] = zr.warnings;
    } else {
        text << "\n(Z-score table omitted: needs at least two models)\n";
        report["group_z_notice"] = "omitted: needs at least two models";
    }
    if (res.skipped_rows > 0) {
        text << "\nskipped " << res.skipped_rows << " malformed row(s)\n";
    }

    const fs::path dir = ensure_out_dir(cfg);
    res.json_path = (dir / "evaluation.json").string();
    res.text_path = (dir / "evaluation.txt").string();
    res.text_report = text.str();
    write_text(res.json_path, report.dump(2) + "\n");
    write_text(res.text_path, res.text_report);
    write_text(dir / "aggregated.jsonl", aggregated_jsonl.str());
    return res;
}

// --- cmd_verify_theory ------------------------------------------------------------------

TheoryResult cmd_verify_theory(const KvConfig& cfg) {
    std::vector<double> pmf = cfg.get_double_list("theory.pmf");
    if (pmf.empty()) pmf = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    const auto V_max = static_cast<std::size_t>(cfg.get_int("theory.vmax", 8));
    const auto trials = static_cast<std::size_t>(cfg.get_int("theory.trials", 100000));
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));

    const std::vector<double> exact = monotonicity_report(pmf, V_max);

    TheoryResult res;
    json rows = json::array();
    std::ostringstream text;
    text << std::fixed << std::setprecision(9);
    text << "V    E(M_V) exact     MC mean          MC stderr        |diff|/se\n";
    for (std::size_t V = 1; V <= V_max; ++V) {
        const MinSimulation sim = simulate_min(pmf, V, trials, mix_seed(seed, V));
        res.nesting_violations += sim.nesting_violations;
        const double e = exact[V - 1];
        const double gap = sim.std_error > 0.0 ? std::abs(sim.mean - e) / sim.std_error : 0.0;
        if (sim.std_error > 0.0 && gap > 3.0) res.mc_within_3se = false;
        if (V >= 2 && exact[V - 1] > exact[V - 2] + 1e-15) res.non_increasing = false;
        json row;
        row["V"] = V;
        row["exact"] = e;
        row["mc_mean"] = sim.mean;
        row["mc_stderr"] = sim.std_error;
        row["nesting_violations"] = sim.nesting_violations;
        rows.push_back(row);
        text << V << "    " << e << "      " << sim.mean << "      " << sim.std_error << "      "
             << gap << "\n";
    }
    text << "\nnon-increasing: " << (res.non_increasing ? "yes" : "NO") << "\n";
    text << "nesting violations: " << res.nesting_violations << "\n";
    text << "all MC means within 3 stderr: " << (res.mc_within_3se ? "yes" : "NO") << "\n";

    json report;
    report["pmf"] = pmf;
    report["trials"] = trials;
    report["rows"] = rows;
    report["non_increasing"] = res.non_increasing;
    report["nesting_violations"] = res.nesting_violations;
    report["mc_within_3se"] = res.mc_within_3se;

    if (cfg.get_bool("theory.adjunct", false)) {
        const std::string adjunct = theory_alignment_adjunct(cfg);
        report["alignment_adjunct"] = json::parse(adjunct);
        text << "\nalignment adjunct (reported, not asserted):\n" << adjunct << "\n";
    }

    const fs::path dir = ensure_out_dir(cfg);
    res.json_path = (dir / "theory.json").string();
    write_text(res.json_path, report.dump(2) + "\n");
    write_text(dir / "theory.txt", text.str());
    res.text_report = text.str();
    return res;
}

// --- cmd_sweep_views --------------------------------------------------------------------

SweepResult cmd_sweep_views(const KvConfig& cfg) {
    MultiViewDataset ds = dataset_from_config(cfg);
    if (ds.view_count() < 2) throw ConfigError("sweep-views: dataset needs at least 2 views");

    std::vector<std::size_t> counts = cfg.get_size_list("sweep.views");
    if (counts.empty()) counts = {2, std::min<std::size_t>(ds.view_count(), 4)};
    std::vector<std::string> models = cfg.get_str_list("sweep.models");
    if (models.empty()) models = {"CAE-DDC", "AE-DDC"}; // with vs without alignment

    const auto runs = static_cast<std::size_t>(cfg.get_int("runs", 5));
    const auto B = static_cast<std::size_t>(cfg.get_int("bootstrap", 1000));
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    const std::size_t jobs = jobs_from(cfg);

    SweepResult res;
    std::ostringstream csv;
    csv << "V,model,acc,acc_std\n";
    json rows = json::array();
    for (const std::string& name : models) {
        InstanceSpec spec = instance_from_config(cfg, "__absent__");
        InstanceSpec preset = instance_preset(name);
        preset.tau = spec.tau;
        preset.epochs = spec.epochs;
        preset.batch_size = spec.batch_size;
        preset.lr = spec.lr;
        preset.seed = seed;
        const auto points = views_sweep(ds, preset, counts, runs, B, mix_seed(seed, 0xB007), jobs);
        for (const SweepPoint& p : points) {
            csv << p.views << "," << p.model << "," << std::fixed << std::setprecision(6) << p.acc
                << "," << p.acc_std << "\n";
            json row;
            row["V"] = p.views;
            row["model"] = p.model;
            row["acc"] = p.acc;
            row["acc_std"] = p.acc_std;
            row["nmi"] = p.nmi;
            row["nmi_std"] = p.nmi_std;
            row["final_loss"] = p.final_loss;
            rows.push_back(row);
            res.points.push_back(p);
        }
    }

    const fs::path dir = ensure_out_dir(cfg);
    res.csv_path = (dir / "views_sweep.csv").string();
    res.json_path = (dir / "views_sweep.json").string();
    write_text(res.csv_path, csv.str());
    json report;
    report["dataset"] = ds.name;
    report["runs"] = runs;
    report["points"] = rows;
    write_text(res.json_path, report.dump(2) + "\n");
    return res;
}

// --- theory adjunct -----------------------------------------------------------------------

std::string theory_alignment_adjunct(const KvConfig& cfg) {
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    // First view sees only 2 of the 3 clusters; alignment-heavy training drags
    // the fused space toward that least informative view.
    MultiViewDataset ds =
        generate_blobs(240, 2, 3, 8, 0.05, mix_seed(seed, 0xAD7), 1.0, {2, 3});

    auto effective_clusters = [](const std::vector<int>& labels, std::size_t k) {
        std::vector<std::size_t> counts(k, 0);
        for (int l : labels) ++counts[static_cast<std::size_t>(l)];
        std::size_t eff = 0;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] * 20 >= labels.size()) ++eff; // >= 5% mass
        }
        return eff;
    };

    json out;
    const std::vector<int> truth(ds.labels.begin(), ds.labels.end());
    for (const bool aligned : {true, false}) {
        InstanceSpec spec = instance_preset(aligned ? "CAE-KM" : "AE-KM");
        spec.epochs = static_cast<std::size_t>(cfg.get_int("theory.adjunct_epochs", 40));
        spec.seed = seed;
        if (aligned) spec.weights = LossWeights{1.0, 20.0, 1.0}; // alignment dominates
        TrainedInstance trained = train_instance(build_instance(spec, ds), ds);
        json side;
        side["model"] = spec.name;
        side["contrastive_weight"] = aligned ? 20.0 : 0.0;
        side["kmeans_acc"] = accuracy(trained.assignment.hard_labels, truth, ds.k);
        side["effective_fused_clusters"] =
            effective_clusters(trained.assignment.hard_labels, ds.k);
        out[aligned ? "with_alignment" : "without_alignment"] = side;
    }
    out["note"] = "finite training only approximates perfect alignment; values are reported, not asserted";
    return out.dump(2);
}

} // namespace deepmvc
