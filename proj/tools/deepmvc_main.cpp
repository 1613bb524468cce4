#include "deepmvc/errors.hpp"
#include "deepmvc/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitFormat = 3;
constexpr int kExitTraining = 4;

struct CommonFlags {
    std::string config_path;
    std::vector<std::string> overrides; // key=value
    long long seed = -1;
    long long runs = -1;
    long long bootstrap = -1;
    long long jobs = -1;
    std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "flat key = value config file");
    cmd->add_option("--set", f.overrides, "override any config key (key=value)");
    cmd->add_option("--seed", f.seed, "global seed");
    cmd->add_option("--runs", f.runs, "training runs per instance");
    cmd->add_option("--bootstrap", f.bootstrap, "bootstrap resamples");
    cmd->add_option("--jobs", f.jobs, "parallel runs (DEEPMVC_JOBS as fallback)");
    cmd->add_option("--out", f.out, "output directory");
}

deepmvc::KvConfig make_config(const CommonFlags& f) {
    deepmvc::KvConfig cfg;
    if (!f.config_path.empty()) cfg = deepmvc::KvConfig::from_file(f.config_path);
    for (const std::string& kv : f.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw deepmvc::ConfigError("--set expects key=value, got '" + kv + "'");
        }
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (f.seed >= 0) cfg.set("seed", std::to_string(f.seed));
    if (f.runs >= 0) cfg.set("runs", std::to_string(f.runs));
    if (f.bootstrap >= 0) cfg.set("bootstrap", std::to_string(f.bootstrap));
    if (f.jobs >= 0) cfg.set("jobs", std::to_string(f.jobs));
    if (!f.out.empty()) cfg.set("out", f.out);
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DeepMVC experiment runner"};
    app.require_subcommand(1);

    CommonFlags gen_flags, train_flags, eval_flags, theory_flags, sweep_flags;
    std::vector<std::string> results_paths;
    bool adjunct = false;
    std::string pmf_arg;
    long long vmax = -1, trials = -1;

    CLI::App* gen = app.add_subcommand("generate", "generate a dataset and write MVD + sidecar");
    add_common(gen, gen_flags);

    CLI::App* train = app.add_subcommand("train", "run the seeded training protocol");
    add_common(train, train_flags);

    CLI::App* eval = app.add_subcommand("evaluate", "aggregate RunRecord JSONL into a report");
    eval->add_option("results", results_paths, "RunRecord JSONL files")->required();
    add_common(eval, eval_flags);

    CLI::App* theory = app.add_subcommand("verify-theory", "exact + Monte-Carlo checks of the view-count propositions");
    theory->add_option("--pmf", pmf_arg, "comma-separated pmf over {1..k}");
    theory->add_option("--vmax", vmax, "largest view count");
    theory->add_option("--trials", trials, "Monte-Carlo trials");
    theory->add_flag("--adjunct", adjunct, "also run the alignment adjunct experiment");
    add_common(theory, theory_flags);

    CLI::App* sweep = app.add_subcommand("sweep-views", "accuracy curve over increasing view counts");
    add_common(sweep, sweep_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen->parsed()) {
            const auto res = deepmvc::cmd_generate(make_config(gen_flags));
            std::cout << "wrote " << res.mvd_path << "\n" << "wrote " << res.sidecar_path << "\n";
            return kExitOk;
        }
        if (train->parsed()) {
            const auto res = deepmvc::cmd_train(make_config(train_flags));
            std::cout << "wrote " << res.jsonl_path << " (" << res.records.size() << " runs, "
                      << res.failures << " failed)\n";
            return res.failures == 0 ? kExitOk : kExitTraining;
        }
        if (eval->parsed()) {
            const auto res = deepmvc::cmd_evaluate(results_paths, make_config(eval_flags));
            std::cout << res.text_report;
            std::cout << "wrote " << res.json_path << "\n" << "wrote " << res.text_path << "\n";
            return kExitOk;
        }
        if (theory->parsed()) {
            deepmvc::KvConfig cfg = make_config(theory_flags);
            if (!pmf_arg.empty()) cfg.set("theory.pmf", pmf_arg);
            if (vmax >= 0) cfg.set("theory.vmax", std::to_string(vmax));
            if (trials >= 0) cfg.set("theory.trials", std::to_string(trials));
            if (adjunct) cfg.set("theory.adjunct", "true");
            const auto res = deepmvc::cmd_verify_theory(cfg);
            std::cout << res.text_report;
            std::cout << "wrote " << res.json_path << "\n";
            const bool ok = res.non_increasing && res.nesting_violations == 0 && res.mc_within_3se;
            return ok ? kExitOk : kExitTraining;
        }
        if (sweep->parsed()) {
            const auto res = deepmvc::cmd_sweep_views(make_config(sweep_flags));
            std::cout << "wrote " << res.csv_path << "\n" << "wrote " << res.json_path << "\n";
            return kExitOk;
        }
    } catch (const deepmvc::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const deepmvc::FormatError& e) {
        std::cerr << e.what() << "\n";
        return kExitFormat;
    } catch (const deepmvc::TrainingError& e) {
        std::cerr << e.what() << "\n";
        return kExitTraining;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
