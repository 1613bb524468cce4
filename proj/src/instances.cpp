#include "deepmvc/instances.hpp"

#include "deepmvc/errors.hpp"
#include "deepmvc/rng.hpp"
#include "deepmvc/theory.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace deepmvc {

std::string to_string(SvSsl v) {
    switch (v) {
        case SvSsl::None: return "none";
        case SvSsl::Reconstruction: return "reconstruction";
    }
    return "?";
}

std::string to_string(MvSsl v) {
    switch (v) {
        case MvSsl::None: return "none";
        case MvSsl::Contrastive: return "contrastive";
        case MvSsl::MutualInformation: return "mutual_information";
        case MvSsl::MiOverClustering: return "mi_over_clustering";
    }
    return "?";
}

std::string to_string(CmKind v) {
    switch (v) {
        case CmKind::Kmeans: return "kmeans";
        case CmKind::Ddc: return "ddc";
        case CmKind::ConcatAssignmentsKmeans: return "concat_assignments_kmeans";
    }
    return "?";
}

std::string to_string(FusionKind v) {
    return v == FusionKind::Concat ? "concat" : "weighted_sum";
}

const std::vector<std::string>& instance_names() {
    static const std::vector<std::string> names = {"AE-KM",   "AE-DDC",  "CAE-KM",
                                                   "CAE-DDC", "InfoDDC", "MV-IIC"};
    return names;
}

InstanceSpec instance_preset(const std::string& name) {
    InstanceSpec s;
    s.name = name;
    if (name == "AE-KM") {
        s.sv_ssl = SvSsl::Reconstruction;
        s.mv_ssl = MvSsl::None;
        s.fusion = FusionKind::Concat;
        s.cm = CmKind::Kmeans;
    } else if (name == "AE-DDC") {
        s.sv_ssl = SvSsl::Reconstruction;
        s.mv_ssl = MvSsl::None;
        s.fusion = FusionKind::WeightedSum;
        s.cm = CmKind::Ddc;
    } else if (name == "CAE-KM") {
        s.sv_ssl = SvSsl::Reconstruction;
        s.mv_ssl = MvSsl::Contrastive;
        s.fusion = FusionKind::Concat;
        s.cm = CmKind::Kmeans;
    } else if (name == "CAE-DDC") {
        s.sv_ssl = SvSsl::Reconstruction;
        s.mv_ssl = MvSsl::Contrastive;
        s.fusion = FusionKind::WeightedSum;
        s.cm = CmKind::Ddc;
    } else if (name == "InfoDDC") {
        s.sv_ssl = SvSsl::None;
        s.mv_ssl = MvSsl::MutualInformation;
        s.fusion = FusionKind::WeightedSum;
        s.cm = CmKind::Ddc;
        s.lambda = 10.0;
        // At lambda = 10 the MI objective sits around -2(lambda-1) log k; this
        // brings it to the same order of magnitude as the DDC term.
        s.weights.mv = 0.02;
    } else if (name == "MV-IIC") {
        s.sv_ssl = SvSsl::None;
        s.mv_ssl = MvSsl::MiOverClustering;
        s.fusion = FusionKind::Concat;
        s.cm = CmKind::ConcatAssignmentsKmeans;
        s.lambda = 1.5;
    } else {
        throw ConfigError("unknown instance name '" + name + "'");
    }
    return s;
}

namespace {

AblationSlot parse_slot(const std::string& slot) {
    if (slot == "sv_ssl") return AblationSlot::SvSslSlot;
    if (slot == "mv_ssl") return AblationSlot::MvSslSlot;
    if (slot == "fusion") return AblationSlot::FusionSlot;
    if (slot == "cm") return AblationSlot::CmSlot;
    throw ConfigError("unknown ablation slot '" + slot + "'");
}

} // namespace

InstanceSpec ablate(const InstanceSpec& spec, AblationSlot slot, const std::string& replacement) {
    InstanceSpec out = spec;
    switch (slot) {
        case AblationSlot::SvSslSlot:
            if (replacement == "none") out.sv_ssl = SvSsl::None;
            else if (replacement == "reconstruction") out.sv_ssl = SvSsl::Reconstruction;
            else throw ConfigError("invalid sv_ssl replacement '" + replacement + "'");
            out.name = spec.name + "~sv_ssl=" + replacement;
            break;
        case AblationSlot::MvSslSlot:
            if (replacement == "none") out.mv_ssl = MvSsl::None;
            else if (replacement == "contrastive") out.mv_ssl = MvSsl::Contrastive;
            else if (replacement == "mutual_information") out.mv_ssl = MvSsl::MutualInformation;
            else if (replacement == "mi_over_clustering") out.mv_ssl = MvSsl::MiOverClustering;
            else throw ConfigError("invalid mv_ssl replacement '" + replacement + "'");
            out.name = spec.name + "~mv_ssl=" + replacement;
            break;
        case AblationSlot::FusionSlot:
            if (replacement == "concat") out.fusion = FusionKind::Concat;
            else if (replacement == "weighted_sum") out.fusion = FusionKind::WeightedSum;
            else throw ConfigError("invalid fusion replacement '" + replacement + "'");
            out.name = spec.name + "~fusion=" + replacement;
            break;
        case AblationSlot::CmSlot:
            if (replacement == "kmeans") out.cm = CmKind::Kmeans;
            else if (replacement == "ddc") out.cm = CmKind::Ddc;
            else if (replacement == "concat_assignments_kmeans") out.cm = CmKind::ConcatAssignmentsKmeans;
            else throw ConfigError("invalid cm replacement '" + replacement + "'");
            out.name = spec.name + "~cm=" + replacement;
            break;
    }
    return out;
}

InstanceSpec ablate(const InstanceSpec& spec, const std::string& slot, const std::string& replacement) {
    return ablate(spec, parse_slot(slot), replacement);
}

// --- model construction -------------------------------------------------------

namespace {

bool uses_mi_representations(const InstanceSpec& s) { return s.mv_ssl == MvSsl::MutualInformation; }
bool uses_heads(const InstanceSpec& s) { return s.mv_ssl == MvSsl::MiOverClustering; }

std::vector<std::size_t> encoder_dims(const InstanceSpec& s, std::size_t view, std::size_t d_in,
                                      std::uint32_t k) {
    std::vector<std::size_t> dims;
    if (!s.encoder_layers.empty()) {
        if (view >= s.encoder_layers.size()) {
            throw ConfigError("encoder_layers given for " + std::to_string(s.encoder_layers.size()) +
                              " views, dataset has more");
        }
        dims.push_back(d_in);
        for (std::size_t d : s.encoder_layers[view]) dims.push_back(d);
        if (dims.size() < 2) throw ConfigError("encoder_layers for view must name at least one layer");
    } else {
        dims = {d_in, s.hidden_units, s.repr_dim};
    }
    // MI representations live on a simplex of width factor * k.
    if (uses_mi_representations(s)) dims.push_back(std::max<std::size_t>(1, s.mi_dim_factor) * k);
    return dims;
}

} // namespace

std::vector<Tensor*> InstanceModel::trainable() {
    std::vector<Tensor*> out;
    auto append = [&out](std::vector<Tensor*> v) { out.insert(out.end(), v.begin(), v.end()); };
    for (auto& e : encoders) append(e.trainable());
    for (auto& d : decoders) append(d.trainable());
    for (auto& h : cluster_heads) append(h.trainable());
    for (auto& hv : over_heads) {
        for (auto& h : hv) append(h.trainable());
    }
    if (fusion_spec.kind == FusionKind::WeightedSum) out.push_back(&fusion_spec.raw_weights);
    if (has_ddc) append(ddc.trainable());
    return out;
}

double InstanceModel::parameter_checksum() const {
    double acc = 0.0;
    auto fold = [&acc](const Tensor& t) {
        std::size_t i = 1;
        for (double v : t.data()) acc += v * static_cast<double>(i++);
    };
    for (const auto& e : encoders) {
        for (const auto& w : e.weights) fold(w);
        for (const auto& b : e.biases) fold(b);
    }
    for (const auto& d : decoders) {
        for (const auto& w : d.weights) fold(w);
        for (const auto& b : d.biases) fold(b);
    }
    for (const auto& h : cluster_heads) {
        for (const auto& w : h.weights) fold(w);
        for (const auto& b : h.biases) fold(b);
    }
    for (const auto& hv : over_heads) {
        for (const auto& h : hv) {
            for (const auto& w : h.weights) fold(w);
            for (const auto& b : h.biases) fold(b);
        }
    }
    if (fusion_spec.kind == FusionKind::WeightedSum) fold(fusion_spec.raw_weights);
    if (has_ddc) {
        fold(ddc.w1);
        fold(ddc.b1);
        fold(ddc.w2);
        fold(ddc.b2);
    }
    return acc;
}

InstanceModel build_instance(const InstanceSpec& spec, const MultiViewDataset& ds) {
    if (ds.view_count() == 0) throw ConfigError("build_instance: dataset has no views");
    if (ds.k < 2) throw ConfigError("build_instance: dataset must declare k >= 2 clusters");
    const std::size_t V = ds.view_count();

    InstanceModel m;
    m.spec = spec;
    m.k = ds.k;

    std::size_t out_dim = 0;
    for (std::size_t v = 0; v < V; ++v) {
        const auto dims = encoder_dims(spec, v, ds.dims[v], ds.k);
        MlpSpec enc_spec{dims, uses_mi_representations(spec) ? OutputActivation::Softmax
                                                             : OutputActivation::None};
        m.encoders.push_back(init_params(enc_spec, mix_seed(spec.seed, 0x100 + v)));
        const std::size_t enc_out = dims.back();
        if (v == 0) out_dim = enc_out;
        if (spec.fusion == FusionKind::WeightedSum && enc_out != out_dim) {
            throw ConfigError("weighted_sum fusion needs equal view dims, got " +
                              std::to_string(enc_out) + " vs " + std::to_string(out_dim));
        }
        if (spec.sv_ssl == SvSsl::Reconstruction) {
            std::vector<std::size_t> rev(dims.rbegin(), dims.rend());
            m.decoders.push_back(
                init_params(MlpSpec{rev, OutputActivation::None}, mix_seed(spec.seed, 0x200 + v)));
        }
        if (uses_heads(spec)) {
            m.cluster_heads.push_back(
                init_params(MlpSpec{{enc_out, ds.k}, OutputActivation::Softmax},
                            mix_seed(spec.seed, 0x300 + v)));
            std::vector<MlpParams> hv;
            for (std::size_t h = 0; h < spec.overcluster_heads; ++h) {
                hv.push_back(init_params(
                    MlpSpec{{enc_out, 5 * static_cast<std::size_t>(ds.k)}, OutputActivation::Softmax},
                    mix_seed(spec.seed, 0x400 + v * 16 + h)));
            }
            m.over_heads.push_back(std::move(hv));
        }
    }

    if (spec.fusion == FusionKind::WeightedSum) {
        m.fusion_spec = FusionSpec::weighted_sum(V);
    } else {
        m.fusion_spec = FusionSpec::concat();
    }

    if (spec.cm == CmKind::Ddc) {
        std::size_t fused_dim = 0;
        if (spec.fusion == FusionKind::WeightedSum) {
            fused_dim = out_dim;
        } else {
            for (std::size_t v = 0; v < V; ++v) {
                fused_dim += encoder_dims(spec, v, ds.dims[v], ds.k).back();
            }
        }
        m.ddc = init_ddc(fused_dim, ds.k, mix_seed(spec.seed, 0x500), spec.ddc_hidden);
        m.has_ddc = true;
    }
    return m;
}

// --- training -------------------------------------------------------------------

namespace {

struct BatchLoss {
    Tensor total;
    LossBreakdown values;
};

// cm_x, when non-null, supplies the rows the CM loss is computed on (the
// full dataset under full_batch_cm); SSL losses always use the minibatch.
BatchLoss compute_batch_loss(InstanceModel& m, const std::vector<Tensor>& x,
                             const std::vector<Tensor>* cm_x = nullptr) {
    const InstanceSpec& spec = m.spec;

    std::vector<Tensor> z;
    z.reserve(m.encoders.size());
    for (std::size_t v = 0; v < m.encoders.size(); ++v) {
        z.push_back(mlp_forward(m.encoders[v], x[v]));
    }

    Tensor l_sv, l_mv, l_cm;
    if (spec.sv_ssl == SvSsl::Reconstruction && spec.weights.sv > 0.0) {
        std::vector<Tensor> x_hat;
        x_hat.reserve(z.size());
        for (std::size_t v = 0; v < z.size(); ++v) {
            x_hat.push_back(mlp_forward(m.decoders[v], z[v]));
        }
        l_sv = reconstruction_loss(x, x_hat);
    }

    if (spec.weights.mv > 0.0) {
        switch (spec.mv_ssl) {
            case MvSsl::None: break;
            case MvSsl::Contrastive:
                l_mv = contrastive_loss(z, spec.tau);
                break;
            case MvSsl::MutualInformation:
                l_mv = mi_loss_all_pairs(z, spec.lambda);
                break;
            case MvSsl::MiOverClustering: {
                std::vector<Tensor> main_assign;
                for (std::size_t v = 0; v < z.size(); ++v) {
                    main_assign.push_back(mlp_forward(m.cluster_heads[v], z[v]));
                }
                Tensor acc = mi_loss_all_pairs(main_assign, spec.lambda);
                if (spec.overcluster_heads > 0) {
                    Tensor over_acc;
                    for (std::size_t h = 0; h < spec.overcluster_heads; ++h) {
                        std::vector<Tensor> over_assign;
                        for (std::size_t v = 0; v < z.size(); ++v) {
                            over_assign.push_back(mlp_forward(m.over_heads[v][h], z[v]));
                        }
                        Tensor t = mi_loss_all_pairs(over_assign, spec.lambda);
                        over_acc = over_acc.defined() ? over_acc + t : t;
                    }
                    acc = acc + over_acc * (1.0 / static_cast<double>(spec.overcluster_heads));
                }
                l_mv = acc;
                break;
            }
        }
    }

    if (spec.cm == CmKind::Ddc && spec.weights.cm > 0.0) {
        const std::vector<Tensor>* cm_input = cm_x ? cm_x : &x;
        std::vector<Tensor> z_cm;
        if (cm_x) {
            z_cm.reserve(m.encoders.size());
            for (std::size_t v = 0; v < m.encoders.size(); ++v) {
                z_cm.push_back(mlp_forward(m.encoders[v], (*cm_input)[v]));
            }
        }
        Tensor fused = fuse(m.fusion_spec, cm_x ? z_cm : z);
        auto [hidden, alpha] = ddc_forward(m.ddc, fused);
        l_cm = ddc_loss(alpha, hidden).sum();
    }

    BatchLoss out;
    out.total = total_loss(spec.weights, l_sv, l_mv, l_cm);
    out.values.sv = l_sv.defined() ? l_sv.value() : 0.0;
    out.values.mv = l_mv.defined() ? l_mv.value() : 0.0;
    out.values.cm = l_cm.defined() ? l_cm.value() : 0.0;
    out.values.total = out.total.value();
    return out;
}

std::vector<Tensor> gather_views(const MultiViewDataset& ds, const std::vector<std::size_t>& rows) {
    std::vector<Tensor> out;
    out.reserve(ds.view_count());
    for (std::size_t v = 0; v < ds.view_count(); ++v) out.push_back(ds.view_rows(v, rows));
    return out;
}

} // namespace

ClusterAssignment assign_full(InstanceModel& m, const MultiViewDataset& ds) {
    std::vector<std::size_t> all(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) all[i] = i;
    const std::vector<Tensor> x = gather_views(ds, all);

    std::vector<Tensor> z;
    for (std::size_t v = 0; v < m.encoders.size(); ++v) {
        z.push_back(mlp_forward(m.encoders[v], x[v]).detach());
    }

    ClusterAssignment out;
    switch (m.spec.cm) {
        case CmKind::Ddc: {
            Tensor fused = fuse(m.fusion_spec, z);
            auto [hidden, alpha] = ddc_forward(m.ddc, fused);
            out.alpha = alpha.detach();
            out.hard_labels = harden(out.alpha);
            break;
        }
        case CmKind::Kmeans: {
            Tensor fused = fuse(m.fusion_spec, z).detach();
            KmeansResult km = kmeans(fused, m.k, m.spec.seed);
            out.alpha = km.alpha;
            out.hard_labels = km.labels;
            break;
        }
        case CmKind::ConcatAssignmentsKmeans: {
            std::vector<Tensor> assigns;
            for (std::size_t v = 0; v < z.size(); ++v) {
                assigns.push_back(mlp_forward(m.cluster_heads[v], z[v]).detach());
            }
            Tensor stacked = concat(assigns, 1); // n x (V * k)
            KmeansResult km = kmeans(stacked, m.k, m.spec.seed);
            out.alpha = km.alpha;
            out.hard_labels = km.labels;
            break;
        }
    }
    return out;
}

TrainedInstance train_instance(InstanceModel model, const MultiViewDataset& ds) {
    const InstanceSpec& spec = model.spec;
    if (ds.n < 2) throw ContractViolation("train_instance: dataset too small");

    const std::size_t batch = std::min(spec.batch_size, ds.n);
    if (batch < 2) throw ConfigError("train_instance: batch size must be >= 2");

    std::vector<Tensor> full_views;
    if (spec.full_batch_cm && spec.cm == CmKind::Ddc && spec.weights.cm > 0.0) {
        std::vector<std::size_t> all(ds.n);
        for (std::size_t i = 0; i < ds.n; ++i) all[i] = i;
        full_views = gather_views(ds, all);
    }

    std::vector<Tensor*> params = model.trainable();
    AdamState adam;
    adam.lr = spec.lr;

    Rng shuffle_rng = substream(spec.seed, 0xA11);
    std::vector<std::size_t> order(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) order[i] = i;

    TrainedInstance out;
    out.loss_trajectory.reserve(spec.epochs);

    for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
        for (std::size_t i = ds.n; i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
        }

        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start + 1 < ds.n; start += batch) {
            const std::size_t stop = std::min(start + batch, ds.n);
            if (stop - start < 2) break; // a 1-row tail has no pairwise terms
            std::vector<std::size_t> rows(order.begin() + start, order.begin() + stop);
            std::vector<Tensor> x = gather_views(ds, rows);

            BatchLoss loss;
            try {
                loss = compute_batch_loss(model, x, full_views.empty() ? nullptr : &full_views);
            } catch (const TrainingError&) {
                throw;
            } catch (const std::exception& e) {
                throw TrainingError("epoch " + std::to_string(epoch) + ": " + e.what());
            }
            if (!std::isfinite(loss.values.total)) {
                std::ostringstream os;
                os << "NaN/Inf loss at epoch " << epoch << " (sv=" << loss.values.sv
                   << ", mv=" << loss.values.mv << ", cm=" << loss.values.cm << ")";
                throw TrainingError(os.str());
            }
            epoch_loss += loss.values.total;
            ++batches;

            if (loss.total.requires_grad()) {
                zero_grads(params);
                backward(loss.total);
                adam_step(params, adam);
            }
        }
        out.loss_trajectory.push_back(batches > 0 ? epoch_loss / static_cast<double>(batches) : 0.0);

        if (model.fusion_spec.kind == FusionKind::WeightedSum) {
            double total = 0.0;
            for (double w : model.fusion_spec.effective_weights()) {
                if (w < 0.0 || w > 1.0) {
                    throw TrainingError("epoch " + std::to_string(epoch) +
                                        ": fusion weight outside [0,1]");
                }
                total += w;
            }
            if (std::abs(total - 1.0) > 1e-12) {
                throw TrainingError("epoch " + std::to_string(epoch) +
                                    ": fusion weights sum to " + std::to_string(total));
            }
        }
    }

    out.final_loss = out.loss_trajectory.empty() ? 0.0 : out.loss_trajectory.back();
    out.assignment = assign_full(model, ds);
    out.model = std::move(model);
    return out;
}

std::vector<RunRecord> run_protocol(const InstanceSpec& spec, const MultiViewDataset& ds,
                                    std::size_t runs, std::uint64_t base_seed, std::size_t jobs) {
    if (runs == 0) throw ConfigError("run_protocol: runs must be >= 1");
    if (!ds.has_labels()) throw ConfigError("run_protocol: dataset has no labels to evaluate against");

    std::vector<int> truth(ds.labels.begin(), ds.labels.end());
    std::vector<RunRecord> records(runs);

    auto run_one = [&](std::size_t r) {
        InstanceSpec run_spec = spec;
        run_spec.seed = base_seed + r;
        RunRecord& rec = records[r];
        rec.seed = run_spec.seed;
        try {
            TrainedInstance trained = train_instance(build_instance(run_spec, ds), ds);
            rec.final_loss = trained.final_loss;
            rec.acc = accuracy(trained.assignment.hard_labels, truth, ds.k);
            rec.nmi = nmi(trained.assignment.hard_labels, truth);
        } catch (const std::exception& e) {
            rec.failed = true;
            rec.error = e.what();
            rec.final_loss = std::numeric_limits<double>::quiet_NaN();
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, runs));
    if (workers == 1) {
        for (std::size_t r = 0; r < runs; ++r) run_one(r);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&]() {
                while (true) {
                    const std::size_t r = next.fetch_add(1);
                    if (r >= runs) return;
                    run_one(r);
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    return records;
}

std::vector<SweepPoint> views_sweep(const MultiViewDataset& ds, const InstanceSpec& spec,
                                    const std::vector<std::size_t>& view_counts, std::size_t runs,
                                    std::size_t bootstrap_B, std::uint64_t bootstrap_seed,
                                    std::size_t jobs) {
    for (std::size_t V : view_counts) {
        if (V < 1 || V > ds.view_count()) {
            throw ContractViolation("views_sweep: V = " + std::to_string(V) + " outside [1, " +
                                    std::to_string(ds.view_count()) + "]");
        }
    }
    std::vector<SweepPoint> out;
    for (std::size_t V : view_counts) {
        const MultiViewDataset sub = ds.prefix_views(V);
        std::vector<RunRecord> records = run_protocol(spec, sub, runs, spec.seed, jobs);
        std::vector<RunRecord> ok;
        for (const RunRecord& r : records) {
            if (!r.failed) ok.push_back(r);
        }
        if (ok.empty()) {
            throw TrainingError("views_sweep: all runs failed at V = " + std::to_string(V));
        }
        const BootstrapResult boot = bootstrap_std(ok, bootstrap_B, bootstrap_seed);
        SweepPoint p;
        p.views = V;
        p.model = spec.name;
        p.acc = boot.acc.selected_metric;
        p.acc_std = boot.acc.std_hat;
        p.nmi = boot.nmi.selected_metric;
        p.nmi_std = boot.nmi.std_hat;
        p.final_loss = select_best_run(ok).final_loss;
        out.push_back(p);
    }
    return out;
}

} // namespace deepmvc
