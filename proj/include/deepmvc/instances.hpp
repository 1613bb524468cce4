#pragma once

#include "deepmvc/clustering.hpp"
#include "deepmvc/dataset.hpp"
#include "deepmvc/evaluation.hpp"
#include "deepmvc/fusion.hpp"
#include "deepmvc/losses.hpp"
#include "deepmvc/nets.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace deepmvc {

enum class SvSsl { None, Reconstruction };
enum class MvSsl { None, Contrastive, MutualInformation, MiOverClustering };
enum class CmKind { Kmeans, Ddc, ConcatAssignmentsKmeans };

std::string to_string(SvSsl);
std::string to_string(MvSsl);
std::string to_string(CmKind);
std::string to_string(FusionKind);

// Declarative composition of one model: which SSL losses, fusion, clustering
// module, and the training hyperparameters.
struct InstanceSpec {
    std::string name = "custom";
    SvSsl sv_ssl = SvSsl::None;
    MvSsl mv_ssl = MvSsl::None;
    FusionKind fusion = FusionKind::Concat;
    CmKind cm = CmKind::Kmeans;

    LossWeights weights;
    double tau = 0.1;
    double lambda = 10.0;

    std::size_t epochs = 100;
    std::size_t batch_size = 100;
    double lr = 1e-3;
    std::uint64_t seed = 0;

    std::size_t repr_dim = 64;    // encoder output for contrastive/reconstruction instances
    std::size_t mi_dim_factor = 1; // MI representation dim = factor * k (simplex width)
    std::size_t hidden_units = 128;
    std::size_t ddc_hidden = 100;
    std::size_t overcluster_heads = 5;
    bool full_batch_cm = false; // compute losses over the full dataset per step

    // Optional per-view encoder layout override (hidden dims after the input,
    // ending in the representation dim). Empty -> [d_v, hidden_units, repr_dim].
    std::vector<std::vector<std::size_t>> encoder_layers;
};

// Component presets for the six named instances.
InstanceSpec instance_preset(const std::string& name);
const std::vector<std::string>& instance_names();

enum class AblationSlot { SvSslSlot, MvSslSlot, FusionSlot, CmSlot };

// Replace one component slot, keeping everything else. Replacement is the
// lowercase component name ("none", "contrastive", "weighted_sum", ...).
InstanceSpec ablate(const InstanceSpec& spec, AblationSlot slot, const std::string& replacement);
InstanceSpec ablate(const InstanceSpec& spec, const std::string& slot, const std::string& replacement);

struct InstanceModel {
    InstanceSpec spec;
    std::uint32_t k = 0;
    std::vector<MlpParams> encoders;
    std::vector<MlpParams> decoders;                 // reconstruction only
    std::vector<MlpParams> cluster_heads;            // MV-IIC main heads
    std::vector<std::vector<MlpParams>> over_heads;  // MV-IIC over-clustering heads
    FusionSpec fusion_spec;
    DdcParams ddc;
    bool has_ddc = false;

    std::vector<Tensor*> trainable();
    // Order-independent fingerprint of all trainable parameter values.
    double parameter_checksum() const;
};

InstanceModel build_instance(const InstanceSpec& spec, const MultiViewDataset& ds);

struct LossBreakdown {
    double sv = 0.0, mv = 0.0, cm = 0.0, total = 0.0;
};

struct TrainedInstance {
    InstanceModel model;
    std::vector<double> loss_trajectory; // mean total loss per epoch
    double final_loss = 0.0;
    ClusterAssignment assignment;
};

TrainedInstance train_instance(InstanceModel model, const MultiViewDataset& ds);

// Full-dataset cluster assignment for the model's CM. Two-stage CMs (k-means
// variants) never touch the parameters.
ClusterAssignment assign_full(InstanceModel& model, const MultiViewDataset& ds);

// The full protocol for one instance: R runs seeded base_seed..base_seed+R-1,
// each producing a RunRecord. NaN runs are recorded as failed; the rest
// continue. jobs > 1 trains runs concurrently (results ordered by seed).
std::vector<RunRecord> run_protocol(const InstanceSpec& spec, const MultiViewDataset& ds,
                                    std::size_t runs, std::uint64_t base_seed, std::size_t jobs = 1);

struct SweepPoint {
    std::size_t views = 0;
    std::string model;
    double acc = 0.0, acc_std = 0.0;
    double nmi = 0.0, nmi_std = 0.0;
    double final_loss = 0.0;
};

// Trains on the first V' views for each requested count, applying lowest-loss
// selection and bootstrap uncertainty per point.
std::vector<SweepPoint> views_sweep(const MultiViewDataset& ds, const InstanceSpec& spec,
                                    const std::vector<std::size_t>& view_counts, std::size_t runs,
                                    std::size_t bootstrap_B, std::uint64_t bootstrap_seed,
                                    std::size_t jobs = 1);

} // namespace deepmvc
